"""Path ingestion server.

Clients stream newline-delimited path records over TCP. Every valid record
replaces the current path; malformed lines are logged and skipped. An
optional HTTP surface reports status, serves the latest frame and accepts
records by POST.
"""

from __future__ import annotations

import asyncio
import logging
from typing import Any

from aiohttp import web
from multidict import CIMultiDict
from yarl import URL

from .const import FORMAT_PNG, MAX_RECORD_BYTES
from .coordinator import ProjectionCoordinator
from .exceptions import ParameterError, PathParseError, ServerStartupError
from .ingestion import SequenceTracker, parse_path_message
from .renderer import encode_image

_LOGGER = logging.getLogger(__name__)


def parse_endpoint(address: str) -> tuple[str, int]:
    """Split ``host:port`` into its parts.

    Raises:
        ParameterError: If the host or port is missing or invalid
    """
    try:
        url = URL(f"tcp://{address}")
        host, port = url.host, url.port
    except ValueError as err:
        raise ParameterError(f"Invalid endpoint '{address}': {err}") from err
    if not host or port is None:
        raise ParameterError(f"Endpoint '{address}' must be host:port")
    return host, port


class IngestionServer:
    """Accept path records and hand them to the coordinator."""

    def __init__(
        self,
        coordinator: ProjectionCoordinator,
        listen: str,
        http: str | None = None,
    ) -> None:
        """Initialize the server.

        Args:
            coordinator: Receives every valid path
            listen: ``host:port`` of the record stream; port 0 picks a free port
            http: Optional ``host:port`` of the HTTP surface
        """
        self.coordinator = coordinator
        self._listen = parse_endpoint(listen)
        self._http = parse_endpoint(http) if http else None
        self._server: asyncio.Server | None = None
        self._runner: web.AppRunner | None = None
        self._http_tracker = SequenceTracker()
        self.parse_errors = 0
        self.address: tuple[str, int] | None = None
        self.http_address: tuple[str, int] | None = None

    async def async_start(self) -> None:
        """Bind the endpoints.

        Raises:
            ServerStartupError: If an address cannot be bound
        """
        host, port = self._listen
        try:
            self._server = await asyncio.start_server(
                self._handle_connection, host, port, limit=MAX_RECORD_BYTES
            )
        except OSError as err:
            raise ServerStartupError(f"Cannot listen on {host}:{port}: {err}") from err
        sockname = self._server.sockets[0].getsockname()
        self.address = (sockname[0], sockname[1])
        _LOGGER.info("Listening for paths on %s:%s", *self.address)

        if self._http is not None:
            await self._start_http(*self._http)

    async def _start_http(self, host: str, port: int) -> None:
        self._runner = web.AppRunner(self.build_app())
        await self._runner.setup()
        site = web.TCPSite(self._runner, host, port)
        try:
            await site.start()
        except OSError as err:
            await self.async_stop()
            raise ServerStartupError(
                f"Cannot serve HTTP on {host}:{port}: {err}"
            ) from err
        bound = self._runner.addresses[0]
        self.http_address = (bound[0], bound[1])
        _LOGGER.info("HTTP surface on %s:%s", *self.http_address)

    async def async_stop(self) -> None:
        """Close the endpoints."""
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None
        if self._runner is not None:
            await self._runner.cleanup()
            self._runner = None
        _LOGGER.info("Ingestion server stopped")

    def handle_record(self, line: str, tracker: SequenceTracker, peer: Any) -> bool:
        """Parse one record and pass it on; return False if it was skipped."""
        if not line.strip():
            return False
        try:
            seq, path = parse_path_message(line)
            seq = tracker.accept(seq)
        except PathParseError as err:
            self.parse_errors += 1
            _LOGGER.warning("Skipping malformed record from %s: %s", peer, err)
            return False
        _LOGGER.debug("Path %s from %s with %d poses", seq, peer, len(path))
        self.coordinator.async_set_path(seq, path)
        return True

    async def _handle_connection(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        peer = writer.get_extra_info("peername")
        tracker = SequenceTracker()
        _LOGGER.debug("Connection from %s", peer)
        try:
            while True:
                try:
                    raw = await reader.readline()
                except ValueError:
                    _LOGGER.warning(
                        "Record from %s exceeds %s bytes, closing",
                        peer,
                        MAX_RECORD_BYTES,
                    )
                    break
                if not raw:
                    break
                self.handle_record(raw.decode("utf-8", errors="replace"), tracker, peer)
        except ConnectionResetError:
            _LOGGER.info("Connection from %s reset", peer)
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except ConnectionResetError:
                pass
            _LOGGER.debug("Connection from %s closed", peer)

    def build_app(self) -> web.Application:
        """Build the HTTP application."""
        app = web.Application()
        app.router.add_get("/status", self._get_status)
        app.router.add_get("/frame", self._get_frame)
        app.router.add_post("/path", self._post_path)
        return app

    async def _get_status(self, request: web.Request) -> web.Response:
        coordinator = self.coordinator
        return web.json_response(
            {
                "revision": coordinator.revision,
                "frames_rendered": coordinator.frames_rendered,
                "last_seq": coordinator.last_seq,
                "parse_errors": self.parse_errors,
            }
        )

    async def _get_frame(self, request: web.Request) -> web.Response:
        frame = self.coordinator.last_frame
        if frame is None:
            return web.json_response({"error": "no frame rendered yet"}, status=404)
        body = await asyncio.get_running_loop().run_in_executor(
            None, encode_image, frame.framebuffer, FORMAT_PNG
        )
        headers = CIMultiDict(
            {
                "Content-Type": "image/png",
                "Cache-Control": "no-store",
                "X-Path-Seq": str(frame.update.seq),
            }
        )
        return web.Response(body=body, headers=headers)

    async def _post_path(self, request: web.Request) -> web.Response:
        text = await request.text()
        try:
            seq, path = parse_path_message(text)
            seq = self._http_tracker.accept(seq)
        except PathParseError as err:
            self.parse_errors += 1
            _LOGGER.warning("Rejected path posted over HTTP: %s", err)
            return web.json_response({"error": str(err)}, status=400)
        update = self.coordinator.async_set_path(seq, path)
        return web.json_response(
            {"seq": update.seq, "revision": update.revision}, status=202
        )


async def serve(
    coordinator: ProjectionCoordinator,
    listen: str,
    http: str | None = None,
    stop: asyncio.Event | None = None,
) -> None:
    """Run the ingestion server until ``stop`` is set.

    Raises:
        ServerStartupError: If an endpoint cannot be bound
    """
    server = IngestionServer(coordinator, listen, http)
    await server.async_start()
    try:
        await (stop or asyncio.Event()).wait()
    finally:
        await server.async_stop()
        await coordinator.async_shutdown()
