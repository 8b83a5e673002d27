"""Latest-wins render coordinator for incoming paths."""

from __future__ import annotations

import asyncio
import logging
from typing import Callable

from attrs import frozen

from .exceptions import PathProjectionError
from .pipeline import ProjectionPipeline
from .renderer import Framebuffer, FrameSequenceWriter
from .resampler import NavPath

_LOGGER = logging.getLogger(__name__)


@frozen
class PathUpdate:
    """A path snapshot with its sequence number and the revision it set."""

    seq: int
    revision: int
    path: NavPath


@frozen
class RenderedFrame:
    """A frame and the update it was rendered from."""

    update: PathUpdate
    framebuffer: Framebuffer


FrameListener = Callable[[RenderedFrame], None]


class ProjectionCoordinator:
    """Keep the current path and render frames for it.

    Only the newest path is ever rendered. Updates arriving while a render is
    running replace the pending path; when the render finishes its frame is
    dropped if a newer path has arrived, and the newest path is rendered next.
    A path that cannot be rendered is shown as a frame without markers.
    Rendering runs in the default executor so the event loop keeps reading.
    """

    def __init__(
        self,
        pipeline: ProjectionPipeline,
        writer: FrameSequenceWriter | None = None,
    ) -> None:
        """Initialize the coordinator."""
        self.pipeline = pipeline
        self.writer = writer
        self.current: PathUpdate | None = None
        self.last_frame: RenderedFrame | None = None
        self.revision = 0
        self.frames_rendered = 0
        self._listeners: list[FrameListener] = []
        self._wake = asyncio.Event()
        self._idle = asyncio.Event()
        self._idle.set()
        self._task: asyncio.Task[None] | None = None

    @property
    def last_seq(self) -> int | None:
        """Sequence number of the current path."""
        return self.current.seq if self.current else None

    def async_add_listener(self, listener: FrameListener) -> Callable[[], None]:
        """Call ``listener`` for each published frame; returns an unsubscribe."""
        self._listeners.append(listener)

        def remove_listener() -> None:
            self._listeners.remove(listener)

        return remove_listener

    def async_set_path(self, seq: int, path: NavPath) -> PathUpdate:
        """Replace the current path and schedule a render."""
        self.revision += 1
        update = PathUpdate(seq, self.revision, path)
        self.current = update
        self._idle.clear()
        self._wake.set()
        if self._task is None or self._task.done():
            self._task = asyncio.get_running_loop().create_task(self._render_loop())
        _LOGGER.debug("Path %s set as revision %s", seq, self.revision)
        return update

    async def async_wait_idle(self) -> None:
        """Wait until the frame for the current path has been published."""
        await self._idle.wait()

    async def async_shutdown(self) -> None:
        """Stop the render loop."""
        if self._task is None:
            return
        self._task.cancel()
        try:
            await self._task
        except asyncio.CancelledError:
            pass
        self._task = None
        self._idle.set()

    async def _render_loop(self) -> None:
        loop = asyncio.get_running_loop()
        while True:
            await self._wake.wait()
            self._wake.clear()
            update = self.current
            if update is None:
                continue

            try:
                fb = await loop.run_in_executor(
                    None, self.pipeline.render_path, update.path
                )
            except PathProjectionError as err:
                _LOGGER.error(
                    "Failed to render path %s, clearing the projection: %s",
                    update.seq,
                    err,
                )
                fb = await loop.run_in_executor(
                    None, self.pipeline.render_background
                )

            if update.revision != self.revision:
                _LOGGER.warning(
                    "Discarding stale frame for path %s, newer path %s arrived",
                    update.seq,
                    self.last_seq,
                )
                continue

            await self._publish(RenderedFrame(update, fb))
            if not self._wake.is_set():
                self._idle.set()

    async def _publish(self, frame: RenderedFrame) -> None:
        self.last_frame = frame
        self.frames_rendered += 1
        if self.writer is not None:
            try:
                await asyncio.get_running_loop().run_in_executor(
                    None, self.writer.write, frame.framebuffer
                )
            except OSError as err:
                _LOGGER.error("Failed to write frame: %s", err)
        for listener in list(self._listeners):
            listener(frame)
        _LOGGER.info(
            "Rendered frame %s for path %s", self.frames_rendered, frame.update.seq
        )
