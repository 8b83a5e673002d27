"""Run configuration and the path-to-frame pipeline."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import attrs
import voluptuous as vol
from attrs import field, frozen

from .config import finite_float, parse_yaml, read_text, validate
from .const import (CONF_BASE_FRAME, CONF_CIRCLE_DIAMETER, CONF_FORMAT,
                    CONF_HTTP, CONF_LENS_FRAME, CONF_LISTEN, CONF_LOGGER,
                    CONF_OUT, CONF_PROJECTOR, CONF_SPACING, CONF_STYLE,
                    CONF_TRANSFORMS, CONF_WORLD_FRAME, DEFAULT_ARROW_SPACING_M,
                    DEFAULT_BASE_FRAME, DEFAULT_DESTINATION_DIAMETER_M,
                    DEFAULT_LENS_FRAME, DEFAULT_LISTEN, DEFAULT_WORLD_FRAME,
                    DOMAIN, FORMAT_PNG, IMAGE_FORMATS)
from .exceptions import FrameChainError, TransformLookupError
from .geometry import RigidTransform, TransformTree, load_transform_tree
from .markers import (MarkerSpec, MarkerStyle, load_marker_style,
                      markers_for_anchors, path_line_marker)
from .projector import (GroundFootprint, ProjectorConfig, ThrowReport,
                        ground_footprint, lens_pose, load_projector_config,
                        validate_throw)
from .renderer import Framebuffer, Scene, render_frame
from .resampler import (Anchor, NavPath, ResampleParams, derive_headings,
                        resample)

_LOGGER = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
SAMPLE_PROJECTOR = DATA_DIR / "projector_camera_info.yaml"
SAMPLE_TRANSFORMS = DATA_DIR / "tf_publisher.yaml"

_PATH_KEYS = (CONF_PROJECTOR, CONF_TRANSFORMS, CONF_STYLE, CONF_OUT)

RUN_SECTION_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_PROJECTOR, default=str(SAMPLE_PROJECTOR)): str,
        vol.Optional(CONF_TRANSFORMS, default=str(SAMPLE_TRANSFORMS)): str,
        vol.Optional(CONF_STYLE): vol.Any(None, str),
        vol.Optional(CONF_SPACING, default=DEFAULT_ARROW_SPACING_M): finite_float,
        vol.Optional(
            CONF_CIRCLE_DIAMETER, default=DEFAULT_DESTINATION_DIAMETER_M
        ): finite_float,
        vol.Optional(CONF_OUT): vol.Any(None, str),
        vol.Optional(CONF_FORMAT, default=FORMAT_PNG): vol.All(
            str, vol.Lower, vol.In(IMAGE_FORMATS)
        ),
        vol.Optional(CONF_LISTEN, default=DEFAULT_LISTEN): str,
        vol.Optional(CONF_HTTP): vol.Any(None, str),
        vol.Optional(CONF_WORLD_FRAME, default=DEFAULT_WORLD_FRAME): str,
        vol.Optional(CONF_BASE_FRAME, default=DEFAULT_BASE_FRAME): str,
        vol.Optional(CONF_LENS_FRAME, default=DEFAULT_LENS_FRAME): str,
    }
)

RUN_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_LOGGER, default={}): vol.Any(None, dict),
        vol.Optional(DOMAIN, default={}): vol.Any(None, dict),
    },
    extra=vol.ALLOW_EXTRA,
)


def _optional_path(value: str | None) -> Path | None:
    return Path(value) if value else None


@frozen
class RunConfig:
    """Everything a command needs: file locations, parameters and frames."""

    projector: Path = field(converter=Path)
    transforms: Path = field(converter=Path)
    style: Path | None = field(default=None, converter=_optional_path)
    spacing_m: float = DEFAULT_ARROW_SPACING_M
    circle_diameter_m: float = DEFAULT_DESTINATION_DIAMETER_M
    out: Path | None = field(default=None, converter=_optional_path)
    image_format: str = FORMAT_PNG
    listen: str = DEFAULT_LISTEN
    http: str | None = None
    world_frame: str = DEFAULT_WORLD_FRAME
    base_frame: str = DEFAULT_BASE_FRAME
    lens_frame: str = DEFAULT_LENS_FRAME
    logger: dict[str, Any] = field(factory=dict)

    @property
    def params(self) -> ResampleParams:
        """Resample parameters.

        Raises:
            ParameterError: If the spacing is not positive or the diameter is
                negative
        """
        return ResampleParams(self.spacing_m, self.circle_diameter_m)


def load_run_config(
    path: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> RunConfig:
    """Load the run configuration, with command-line ``overrides`` on top.

    Relative file names in the configuration file are taken relative to the
    file itself. Override values are used as given.

    Raises:
        ConfigParseError: If the file cannot be read or fails validation
    """
    logger_section: dict[str, Any] = {}
    section: dict[str, Any] = {}
    if path is not None:
        data = parse_yaml(read_text(path), str(path)) or {}
        config = validate(RUN_CONFIG_SCHEMA, data)
        logger_section = config[CONF_LOGGER] or {}
        section = dict(config[DOMAIN] or {})
        base = Path(path).parent
        for key in _PATH_KEYS:
            value = section.get(key)
            if isinstance(value, str) and not Path(value).is_absolute():
                section[key] = str(base / value)

    section.update(
        {key: value for key, value in (overrides or {}).items() if value is not None}
    )
    run = validate(RUN_SECTION_SCHEMA, section)
    _LOGGER.debug("Run configuration: %s", run)
    return RunConfig(
        projector=run[CONF_PROJECTOR],
        transforms=run[CONF_TRANSFORMS],
        style=run.get(CONF_STYLE),
        spacing_m=run[CONF_SPACING],
        circle_diameter_m=run[CONF_CIRCLE_DIAMETER],
        out=run.get(CONF_OUT),
        image_format=run[CONF_FORMAT],
        listen=run[CONF_LISTEN],
        http=run.get(CONF_HTTP),
        world_frame=run[CONF_WORLD_FRAME],
        base_frame=run[CONF_BASE_FRAME],
        lens_frame=run[CONF_LENS_FRAME],
        logger=logger_section,
    )


class ProjectionPipeline:
    """Turn navigation paths into projector frames.

    The projector mount comes from the transform tree (base frame to lens
    frame). The robot pose is the world-to-base chain when the tree holds the
    world frame; otherwise the robot sits at the world origin.
    """

    def __init__(
        self,
        projector: ProjectorConfig,
        tree: TransformTree,
        params: ResampleParams,
        style: MarkerStyle | None = None,
        world_frame: str = DEFAULT_WORLD_FRAME,
        base_frame: str = DEFAULT_BASE_FRAME,
        lens_frame: str = DEFAULT_LENS_FRAME,
    ) -> None:
        """Initialize the pipeline.

        Raises:
            TransformLookupError: If the base and lens frames are not connected
        """
        self._tree = TransformTree(tree)
        if world_frame not in self._tree:
            try:
                self._tree.add(RigidTransform.identity(world_frame, base_frame))
            except FrameChainError as err:
                raise TransformLookupError(world_frame, base_frame, str(err)) from err
        self.world_frame = world_frame
        self.base_frame = base_frame
        self.lens_frame = lens_frame
        self.projector = attrs.evolve(
            projector, mount=self._tree.lookup(base_frame, lens_frame)
        )
        self.robot_pose = self._tree.lookup(world_frame, base_frame)
        self.params = params
        self.style = style or MarkerStyle()
        _LOGGER.debug(
            "Pipeline for lens '%s' mounted at %s",
            lens_frame,
            self.projector.mount.translation,
        )

    @classmethod
    def from_run_config(cls, run: RunConfig) -> ProjectionPipeline:
        """Read the configuration files named by ``run``."""
        tree = load_transform_tree(read_text(run.transforms))
        projector = load_projector_config(read_text(run.projector))
        style = load_marker_style(read_text(run.style)) if run.style else None
        return cls(
            projector,
            tree,
            run.params,
            style,
            run.world_frame,
            run.base_frame,
            run.lens_frame,
        )

    def to_world(self, path: NavPath) -> NavPath:
        """Re-express a path in the world frame.

        Raises:
            TransformLookupError: If the path frame is not in the tree
        """
        if path.frame == self.world_frame:
            return path
        return path.transformed(self._tree.lookup(self.world_frame, path.frame))

    def anchors(self, path: NavPath) -> list[Anchor]:
        """Resampled anchors with headings, destination first."""
        return derive_headings(resample(self.to_world(path), self.params))

    def markers(self, path: NavPath) -> list[MarkerSpec]:
        """Markers for a path in paint order."""
        world = self.to_world(path)
        anchors = self.anchors(world)
        markers: list[MarkerSpec] = []
        if self.style.path_line and len(world) >= 2:
            markers.append(path_line_marker(world.positions, self.style))
        markers.extend(
            markers_for_anchors(
                anchors,
                self.style,
                self.params.destination_diameter_m,
                lens_pose(self.projector, self.robot_pose).translation,
            )
        )
        return markers

    def scene_for_path(self, path: NavPath) -> Scene:
        """Build the scene the projector shows for ``path``."""
        return Scene(self.markers(path), self.robot_pose)

    def render_path(self, path: NavPath) -> Framebuffer:
        """Render the frame for ``path``."""
        return render_frame(self.scene_for_path(path), self.projector)

    def render_background(self) -> Framebuffer:
        """Render a frame with no markers."""
        return render_frame(Scene((), self.robot_pose), self.projector)

    def footprint(self) -> GroundFootprint:
        """Ground footprint of the projector at the configured pose.

        Raises:
            FootprintUndefinedError: If an image corner misses the ground
        """
        return ground_footprint(self.projector, self.robot_pose)

    def validate_throw(self) -> ThrowReport:
        """Throw-distance report at the configured pose."""
        return validate_throw(self.projector, self.robot_pose)
