"""Test the path ingestion server."""

import asyncio
import logging
from pathlib import Path

import aiohttp
import pytest

from path_projection.cli import main
from path_projection.const import EXIT_OK
from path_projection.coordinator import ProjectionCoordinator
from path_projection.exceptions import ParameterError, ServerStartupError
from path_projection.geometry import Point3
from path_projection.ingestion import SequenceTracker, serialize_path
from path_projection.pipeline import ProjectionPipeline
from path_projection.renderer import decode_image
from path_projection.resampler import NavPath, Pose
from path_projection.server import IngestionServer, parse_endpoint, serve

pytestmark = pytest.mark.asyncio

HUGE_QUATERNION = '{"frame": "map", "poses": [{"p": [0, 0, 0], "q": [0, 0, 0, 1e200]}]}'
HUGE_INTEGER = '{"frame": "map", "poses": [{"p": [' + "9" * 400 + ", 0, 0]}]}"


def line_path(length: float, bend: float = 0.0) -> NavPath:
    """Path ahead of the robot inside the lit region."""
    steps = 20
    return NavPath(
        "map",
        [
            Pose(Point3(0.35 + length * k / steps, bend * k / steps, 0.0))
            for k in range(steps + 1)
        ],
    )


async def wait_for_seq(coordinator: ProjectionCoordinator, seq: int) -> None:
    """Wait until the coordinator holds ``seq`` and has rendered it."""

    async def _poll() -> None:
        while coordinator.last_seq != seq:
            await asyncio.sleep(0.01)
        await coordinator.async_wait_idle()

    await asyncio.wait_for(_poll(), 30)


async def send_lines(address: tuple[str, int], lines: list[str]) -> None:
    """Write records on one connection and close it."""
    _, writer = await asyncio.open_connection(*address)
    writer.write("".join(f"{line}\n" for line in lines).encode())
    await writer.drain()
    writer.close()
    await writer.wait_closed()


@pytest.mark.parametrize(
    ("address", "expected"),
    [
        ("127.0.0.1:7000", ("127.0.0.1", 7000)),
        ("localhost:0", ("localhost", 0)),
        ("[::1]:7000", ("::1", 7000)),
    ],
)
async def test_parse_endpoint(address: str, expected: tuple[str, int]) -> None:
    """Test host and port splitting."""
    assert parse_endpoint(address) == expected


@pytest.mark.parametrize("address", ["localhost", ":7000", ""])
async def test_parse_endpoint_invalid(address: str) -> None:
    """Test endpoints without a host or port."""
    with pytest.raises(ParameterError):
        parse_endpoint(address)


async def test_stream_skips_malformed_line(
    sample_pipeline: ProjectionPipeline,
    caplog: pytest.LogCaptureFixture,
    tmp_path: Path,
) -> None:
    """Test three paths with a malformed line between them.

    The last frame must match the offline render of the last path and arrive
    within two seconds.
    """
    loop = asyncio.get_running_loop()
    coordinator = ProjectionCoordinator(sample_pipeline)
    server = IngestionServer(coordinator, "127.0.0.1:0")
    await server.async_start()
    assert server.address is not None
    final = line_path(0.5, 0.1)
    try:
        with caplog.at_level(logging.WARNING):
            started = loop.time()
            await send_lines(
                server.address,
                [
                    serialize_path(line_path(0.3), 1),
                    '{"frame": "map", "poses": [{"p": [0, 0]}]}',
                    serialize_path(line_path(0.4), 2),
                    serialize_path(final, 3),
                ],
            )
            await wait_for_seq(coordinator, 3)
            elapsed = loop.time() - started
    finally:
        await server.async_stop()
        await coordinator.async_shutdown()

    assert server.parse_errors == 1
    assert "Skipping malformed record" in caplog.text
    assert "poses[0].p" in caplog.text
    assert coordinator.last_frame is not None
    assert coordinator.last_frame.update.seq == 3
    assert elapsed < 2.0

    path_file = tmp_path / "final.json"
    path_file.write_text(serialize_path(final), encoding="utf-8")
    out = tmp_path / "offline.png"
    assert main(["render", str(path_file), "--out", str(out)]) == EXIT_OK
    offline = decode_image(out.read_bytes())
    assert coordinator.last_frame.framebuffer.same_pixels(offline)


async def test_stream_survives_huge_numbers(
    sample_pipeline: ProjectionPipeline,
) -> None:
    """Test that out-of-range numbers are skipped like any malformed line."""
    coordinator = ProjectionCoordinator(sample_pipeline)
    server = IngestionServer(coordinator, "127.0.0.1:0")
    await server.async_start()
    assert server.address is not None
    final = line_path(0.4)
    try:
        await send_lines(
            server.address,
            [HUGE_QUATERNION, HUGE_INTEGER, serialize_path(final, 1)],
        )
        await wait_for_seq(coordinator, 1)
    finally:
        await server.async_stop()
        await coordinator.async_shutdown()

    assert server.parse_errors == 2
    assert coordinator.last_frame is not None
    assert coordinator.last_frame.framebuffer.same_pixels(
        sample_pipeline.render_path(final)
    )


async def test_unresolvable_frame_clears_projection(
    sample_pipeline: ProjectionPipeline,
) -> None:
    """Test that a path the tree cannot place replaces the old arrows."""
    coordinator = ProjectionCoordinator(sample_pipeline)
    server = IngestionServer(coordinator, "127.0.0.1:0")
    await server.async_start()
    assert server.address is not None
    lost = NavPath("ghost", line_path(0.4).poses)
    try:
        await send_lines(
            server.address,
            [serialize_path(line_path(0.4), 1), serialize_path(lost, 2)],
        )
        await wait_for_seq(coordinator, 2)
    finally:
        await server.async_stop()
        await coordinator.async_shutdown()

    assert coordinator.last_frame is not None
    assert coordinator.last_frame.update.seq == 2
    assert coordinator.last_frame.framebuffer.same_pixels(
        sample_pipeline.render_background()
    )
    assert not coordinator.last_frame.framebuffer.pixels.any()


async def test_rapid_records_end_on_latest(
    sample_pipeline: ProjectionPipeline,
) -> None:
    """Test that a burst of 100 records leaves the last one on screen."""
    coordinator = ProjectionCoordinator(sample_pipeline)
    server = IngestionServer(coordinator, "127.0.0.1:0")
    await server.async_start()
    assert server.address is not None
    paths = [line_path(0.2 + k / 200) for k in range(100)]
    try:
        await send_lines(server.address, [serialize_path(p) for p in paths])
        await wait_for_seq(coordinator, 100)
    finally:
        await server.async_stop()
        await coordinator.async_shutdown()

    assert coordinator.revision == 100
    assert coordinator.last_frame is not None
    assert coordinator.last_frame.update.seq == 100
    assert 1 <= coordinator.frames_rendered <= 100
    expected = sample_pipeline.render_path(paths[-1])
    assert coordinator.last_frame.framebuffer.same_pixels(expected)


async def test_sequence_must_increase(sample_pipeline: ProjectionPipeline) -> None:
    """Test that a repeated sequence number is skipped."""
    coordinator = ProjectionCoordinator(sample_pipeline)
    server = IngestionServer(coordinator, "127.0.0.1:0")
    tracker = SequenceTracker()
    try:
        assert server.handle_record(serialize_path(line_path(0.3), 5), tracker, "t")
        assert not server.handle_record(
            serialize_path(line_path(0.4), 5), tracker, "t"
        )
        assert not server.handle_record("   ", tracker, "t")
        await coordinator.async_wait_idle()
    finally:
        await coordinator.async_shutdown()
    assert server.parse_errors == 1
    assert coordinator.last_seq == 5


async def test_bind_failure(sample_pipeline: ProjectionPipeline) -> None:
    """Test that an address in use is reported."""
    coordinator = ProjectionCoordinator(sample_pipeline)
    first = IngestionServer(coordinator, "127.0.0.1:0")
    await first.async_start()
    assert first.address is not None
    second = IngestionServer(coordinator, f"127.0.0.1:{first.address[1]}")
    try:
        with pytest.raises(ServerStartupError):
            await second.async_start()
    finally:
        await first.async_stop()


async def test_http_surface(sample_pipeline: ProjectionPipeline) -> None:
    """Test status, frame and path endpoints."""
    coordinator = ProjectionCoordinator(sample_pipeline)
    server = IngestionServer(coordinator, "127.0.0.1:0", http="127.0.0.1:0")
    await server.async_start()
    assert server.http_address is not None
    base = "http://{}:{}".format(*server.http_address)
    path = line_path(0.4, -0.1)
    try:
        async with aiohttp.ClientSession() as session:
            async with session.get(f"{base}/status") as response:
                assert response.status == 200
                assert await response.json() == {
                    "revision": 0,
                    "frames_rendered": 0,
                    "last_seq": None,
                    "parse_errors": 0,
                }
            async with session.get(f"{base}/frame") as response:
                assert response.status == 404

            async with session.post(f"{base}/path", data="{not json") as response:
                assert response.status == 400
                assert "line 1" in (await response.json())["error"]

            async with session.post(
                f"{base}/path", data=serialize_path(path, 9)
            ) as response:
                assert response.status == 202
                assert await response.json() == {"seq": 9, "revision": 1}
            await wait_for_seq(coordinator, 9)

            async with session.get(f"{base}/frame") as response:
                assert response.status == 200
                assert response.headers["Content-Type"] == "image/png"
                assert response.headers["X-Path-Seq"] == "9"
                frame = decode_image(await response.read())

            async with session.get(f"{base}/status") as response:
                status = await response.json()
    finally:
        await server.async_stop()
        await coordinator.async_shutdown()

    assert frame.same_pixels(sample_pipeline.render_path(path))
    assert status["last_seq"] == 9
    assert status["parse_errors"] == 1
    assert status["frames_rendered"] == 1


async def test_serve_until_stopped(sample_pipeline: ProjectionPipeline) -> None:
    """Test that serve returns once the stop event is set."""
    coordinator = ProjectionCoordinator(sample_pipeline)
    stop = asyncio.Event()
    task = asyncio.create_task(serve(coordinator, "127.0.0.1:0", stop=stop))
    await asyncio.sleep(0.05)
    assert not task.done()
    stop.set()
    await asyncio.wait_for(task, 5)


async def test_serve_bind_failure(sample_pipeline: ProjectionPipeline) -> None:
    """Test that serve raises when the endpoint is taken."""
    coordinator = ProjectionCoordinator(sample_pipeline)
    holder = IngestionServer(coordinator, "127.0.0.1:0")
    await holder.async_start()
    assert holder.address is not None
    try:
        with pytest.raises(ServerStartupError):
            await serve(coordinator, f"127.0.0.1:{holder.address[1]}")
    finally:
        await holder.async_stop()
