"""Command-line interface."""

from __future__ import annotations

import argparse
import asyncio
import logging
import signal
import sys
from pathlib import Path
from typing import Any, Callable, NoReturn, Sequence

from . import __version__
from .config import setup_logging
from .const import (CONF_BASE_FRAME, CONF_CIRCLE_DIAMETER, CONF_FORMAT,
                    CONF_HTTP, CONF_LENS_FRAME, CONF_LISTEN, CONF_OUT,
                    CONF_PROJECTOR, CONF_SPACING, CONF_STYLE, CONF_TRANSFORMS,
                    CONF_WORLD_FRAME, DEFAULT_RENDER_OUT, EXIT_CONFIG,
                    EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, IMAGE_FORMATS)
from .coordinator import ProjectionCoordinator
from .exceptions import (ConfigParseError, FootprintUndefinedError,
                         InvalidValueError, ParameterError, PathParseError,
                         PathProjectionError)
from .ingestion import load_path_file
from .pipeline import ProjectionPipeline, RunConfig, load_run_config
from .projector import GroundFootprint, ThrowReport
from .renderer import FrameSequenceWriter, write_image
from .resampler import derive_headings, resample
from .server import serve

_LOGGER = logging.getLogger(__name__)

CONFIG_ERRORS = (ConfigParseError, PathParseError, ParameterError, InvalidValueError)

Handler = Callable[[argparse.Namespace, RunConfig], int]


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser that exits with the usage code on bad arguments."""

    def error(self, message: str) -> NoReturn:
        """Print usage and exit with ``EXIT_USAGE``."""
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", type=Path, help="run configuration file")
    parser.add_argument("--projector", help="projector calibration file")
    parser.add_argument("--transforms", help="transform tree file")
    parser.add_argument("--style", help="marker style file")
    parser.add_argument("--world-frame", help="frame the robot moves in")
    parser.add_argument("--base-frame", help="robot base frame")
    parser.add_argument("--lens-frame", help="projector lens frame to render for")
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log debug detail"
    )
    return parser


def _resample_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "-D", "--spacing", type=float, help="arrow spacing in meters"
    )
    parser.add_argument(
        "--circle-diameter", type=float, help="destination circle diameter in meters"
    )


def _output_flags(parser: argparse.ArgumentParser, out_help: str) -> None:
    parser.add_argument("--out", help=out_help)
    parser.add_argument("--format", choices=IMAGE_FORMATS, help="image format")


def build_parser() -> ArgumentParser:
    """Build the argument parser with one subcommand per pipeline stage."""
    parser = ArgumentParser(
        prog="path-projection",
        description="Project a robot's navigation intent onto the floor.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True
    common = _common_parser()

    cmd = commands.add_parser(
        "resample", parents=[common], help="list the anchors of a path"
    )
    cmd.add_argument("path_file", help="path record file")
    _resample_flags(cmd)
    cmd.set_defaults(handler=cmd_resample)

    cmd = commands.add_parser(
        "render", parents=[common], help="render the frame for a path"
    )
    cmd.add_argument("path_file", help="path record file")
    _resample_flags(cmd)
    _output_flags(cmd, "image file to write")
    cmd.set_defaults(handler=cmd_render)

    cmd = commands.add_parser(
        "footprint", parents=[common], help="report the lit ground region"
    )
    cmd.set_defaults(handler=cmd_footprint)

    cmd = commands.add_parser(
        "validate", parents=[common], help="check the throw distance"
    )
    cmd.set_defaults(handler=cmd_validate)

    cmd = commands.add_parser(
        "serve", parents=[common], help="render paths received over the network"
    )
    _resample_flags(cmd)
    _output_flags(cmd, "directory for rendered frames")
    cmd.add_argument("--listen", help="host:port of the path stream")
    cmd.add_argument("--http", help="host:port of the HTTP surface")
    cmd.set_defaults(handler=cmd_serve)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Collect the flags that override run configuration values."""
    keys = {
        CONF_PROJECTOR: "projector",
        CONF_TRANSFORMS: "transforms",
        CONF_STYLE: "style",
        CONF_SPACING: "spacing",
        CONF_CIRCLE_DIAMETER: "circle_diameter",
        CONF_OUT: "out",
        CONF_FORMAT: "format",
        CONF_LISTEN: "listen",
        CONF_HTTP: "http",
        CONF_WORLD_FRAME: "world_frame",
        CONF_BASE_FRAME: "base_frame",
        CONF_LENS_FRAME: "lens_frame",
    }
    return {key: getattr(args, attr, None) for key, attr in keys.items()}


def format_footprint(footprint: GroundFootprint) -> str:
    """Human readable footprint report."""
    names = ("top-left", "top-right", "bottom-right", "bottom-left")
    lines = [
        f"corner {name}: {corner.x:.4f} {corner.y:.4f}"
        for name, corner in zip(names, footprint.corners)
    ]
    lines.extend(
        [
            f"near width: {footprint.near_width_m:.4f} m",
            f"far width: {footprint.far_width_m:.4f} m",
            f"depth: {footprint.depth_m:.4f} m",
            f"area: {footprint.area_m2:.4f} m^2",
        ]
    )
    return "\n".join(lines)


def format_throw(report: ThrowReport) -> str:
    """One-line throw report."""
    return f"throw {report.status.value}: {report.message}"


def cmd_resample(args: argparse.Namespace, run: RunConfig) -> int:
    """Print anchors as ``kind x y heading``, destination first."""
    path = load_path_file(args.path_file)
    for anchor in derive_headings(resample(path, run.params)):
        print(
            f"{anchor.kind.value} {anchor.position.x:.6f} "
            f"{anchor.position.y:.6f} {anchor.heading:.6f}"
        )
    return EXIT_OK


def cmd_render(args: argparse.Namespace, run: RunConfig) -> int:
    """Render one frame, then report the footprint and throw distance."""
    path = load_path_file(args.path_file)
    pipeline = ProjectionPipeline.from_run_config(run)
    fb = pipeline.render_path(path)
    out = run.out or Path(DEFAULT_RENDER_OUT)
    write_image(fb, out, run.image_format)
    print(f"wrote {out}")
    try:
        print(format_footprint(pipeline.footprint()))
    except FootprintUndefinedError as err:
        print(f"footprint undefined: {err}")
    print(format_throw(pipeline.validate_throw()))
    return EXIT_OK


def cmd_footprint(args: argparse.Namespace, run: RunConfig) -> int:
    """Print the ground footprint."""
    pipeline = ProjectionPipeline.from_run_config(run)
    try:
        footprint = pipeline.footprint()
    except FootprintUndefinedError as err:
        print(f"footprint undefined: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    print(format_footprint(footprint))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, run: RunConfig) -> int:
    """Print the throw report; fail when the distance is out of range."""
    report = ProjectionPipeline.from_run_config(run).validate_throw()
    print(format_throw(report))
    return EXIT_OK if report.ok else EXIT_RUNTIME


async def _async_serve(run: RunConfig) -> None:
    pipeline = ProjectionPipeline.from_run_config(run)
    writer = FrameSequenceWriter(run.out, run.image_format) if run.out else None
    coordinator = ProjectionCoordinator(pipeline, writer)
    stop = asyncio.Event()
    loop = asyncio.get_running_loop()
    for signum in (signal.SIGINT, signal.SIGTERM):
        try:
            loop.add_signal_handler(signum, stop.set)
        except (NotImplementedError, RuntimeError):
            _LOGGER.debug("Signal %s handler not supported here", signum)
    await serve(coordinator, run.listen, run.http, stop)


def cmd_serve(args: argparse.Namespace, run: RunConfig) -> int:
    """Serve until interrupted."""
    try:
        asyncio.run(_async_serve(run))
    except KeyboardInterrupt:
        _LOGGER.info("Interrupted")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return the exit code."""
    args = build_parser().parse_args(argv)
    try:
        run = load_run_config(args.config, _overrides(args))
        setup_logging(run.logger, args.verbose)
        handler: Handler = args.handler
        return handler(args, run)
    except CONFIG_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (PathProjectionError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
