"""Flat ground-plane marker geometry.

Arrows follow the shaft/head parameterization of the rviz arrow marker (shaft
length, shaft diameter, head length, head diameter) with the shaft made as
long as the head. The destination is a filled disk. Every marker is turned
into counterclockwise ground polygons on ``z = 0`` for the renderer.
"""

from __future__ import annotations

import enum
import logging
import math
from typing import Any, Sequence

import numpy as np
import voluptuous as vol
from attrs import field, frozen

from .config import parse_yaml, positive_float, rgb_color, validate
from .const import (DEFAULT_ARROW_COLOR, DEFAULT_DESTINATION_COLOR,
                    DEFAULT_DISK_SEGMENTS, DEFAULT_HEAD_DIAMETER_M,
                    DEFAULT_HEAD_LENGTH_M, DEFAULT_PATH_LINE_COLOR,
                    DEFAULT_PATH_LINE_WIDTH_M, DEFAULT_REFERENCE_DISTANCE_M,
                    DEFAULT_SHAFT_DIAMETER_M, DEFAULT_SHAFT_LENGTH_M,
                    MIN_DISK_SEGMENTS, SCALE_CLAMP_MAX, SCALE_CLAMP_MIN)
from .exceptions import ConfigParseError, ParameterError
from .geometry import Point3
from .resampler import Anchor, AnchorKind

_LOGGER = logging.getLogger(__name__)

RGB = tuple[int, int, int]


@frozen
class ArrowDimensions:
    """Arrow shaft and head sizes in meters."""

    shaft_length_m: float = DEFAULT_SHAFT_LENGTH_M
    shaft_diameter_m: float = DEFAULT_SHAFT_DIAMETER_M
    head_length_m: float = DEFAULT_HEAD_LENGTH_M
    head_diameter_m: float = DEFAULT_HEAD_DIAMETER_M

    def __attrs_post_init__(self) -> None:
        """Reject degenerate arrows."""
        values = (
            self.shaft_length_m,
            self.shaft_diameter_m,
            self.head_length_m,
            self.head_diameter_m,
        )
        if not all(math.isfinite(v) and v > 0 for v in values):
            raise ParameterError(f"Arrow dimensions must all be > 0: {values}")
        if self.head_diameter_m < self.shaft_diameter_m:
            raise ParameterError(
                f"Head diameter {self.head_diameter_m} is narrower than shaft "
                f"diameter {self.shaft_diameter_m}"
            )

    @property
    def total_length_m(self) -> float:
        """Tail-to-tip length."""
        return self.shaft_length_m + self.head_length_m

    def scaled(self, factor: float) -> ArrowDimensions:
        """Return all four dimensions multiplied by ``factor``."""
        return ArrowDimensions(
            self.shaft_length_m * factor,
            self.shaft_diameter_m * factor,
            self.head_length_m * factor,
            self.head_diameter_m * factor,
        )


def signed_area(points: Sequence[tuple[float, float]]) -> float:
    """Shoelace signed area, positive for counterclockwise vertex order."""
    array = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    x, y = array[:, 0], array[:, 1]
    return float(0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def _orientation(
    a: tuple[float, float], b: tuple[float, float], c: tuple[float, float]
) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(
    a: tuple[float, float], b: tuple[float, float], p: tuple[float, float]
) -> bool:
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def _segments_intersect(
    p1: tuple[float, float],
    p2: tuple[float, float],
    q1: tuple[float, float],
    q2: tuple[float, float],
) -> bool:
    d1 = _orientation(q1, q2, p1)
    d2 = _orientation(q1, q2, p2)
    d3 = _orientation(p1, p2, q1)
    d4 = _orientation(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    return (
        (d1 == 0 and _on_segment(q1, q2, p1))
        or (d2 == 0 and _on_segment(q1, q2, p2))
        or (d3 == 0 and _on_segment(p1, p2, q1))
        or (d4 == 0 and _on_segment(p1, p2, q2))
    )


def is_simple(points: Sequence[tuple[float, float]]) -> bool:
    """Return True if no two non-adjacent edges of the closed ring touch."""
    count = len(points)
    for i in range(count):
        a1, a2 = points[i], points[(i + 1) % count]
        for j in range(i + 1, count):
            if j == i or (j + 1) % count == i or j == (i + 1) % count:
                continue
            if _segments_intersect(a1, a2, points[j], points[(j + 1) % count]):
                return False
    return True


@frozen
class GroundPolygon:
    """A simple counterclockwise polygon on the ground plane."""

    vertices: tuple[Point3, ...] = field(converter=tuple)
    color: RGB

    def __attrs_post_init__(self) -> None:
        """Validate vertex count, flatness, orientation and simplicity."""
        if len(self.vertices) < 3:
            raise ParameterError("A ground polygon needs at least 3 vertices")
        if any(vertex.z != 0.0 for vertex in self.vertices):
            raise ParameterError("Ground polygon vertices must lie on z = 0")
        planar = self.planar()
        if signed_area(planar) <= 0:
            raise ParameterError("Ground polygon must be counterclockwise")
        if not is_simple(planar):
            raise ParameterError("Ground polygon must not self-intersect")

    def planar(self) -> list[tuple[float, float]]:
        """Vertices as ``(x, y)`` tuples."""
        return [(vertex.x, vertex.y) for vertex in self.vertices]

    @property
    def area_m2(self) -> float:
        """Enclosed area."""
        return signed_area(self.planar())


def _place(
    local: Sequence[tuple[float, float]], origin: Point3, heading: float
) -> list[Point3]:
    """Rotate local ``(x, y)`` offsets by ``heading`` and move them to ``origin``."""
    cos_h, sin_h = math.cos(heading), math.sin(heading)
    return [
        Point3(origin.x + x * cos_h - y * sin_h, origin.y + x * sin_h + y * cos_h, 0.0)
        for x, y in local
    ]


def build_arrow(
    anchor: Point3, heading: float, dims: ArrowDimensions, color: RGB
) -> GroundPolygon:
    """Build the 7-vertex arrow outline with its tail on ``anchor``."""
    shaft_half = dims.shaft_diameter_m / 2
    head_half = dims.head_diameter_m / 2
    shaft_end = dims.shaft_length_m
    local = [
        (0.0, -shaft_half),
        (shaft_end, -shaft_half),
        (shaft_end, -head_half),
        (shaft_end + dims.head_length_m, 0.0),
        (shaft_end, head_half),
        (shaft_end, shaft_half),
        (0.0, shaft_half),
    ]
    return GroundPolygon(_place(local, anchor, heading), color)


def regular_polygon(
    center: Point3, radius: float, segments: int, color: RGB
) -> GroundPolygon:
    """Build a regular polygon inscribed in a circle, first vertex on +X."""
    if segments < 3:
        raise ParameterError(f"A polygon needs at least 3 sides, got {segments}")
    if not math.isfinite(radius) or radius <= 0:
        raise ParameterError(f"Radius must be > 0, got {radius}")
    step = 2 * math.pi / segments
    local = [
        (radius * math.cos(k * step), radius * math.sin(k * step))
        for k in range(segments)
    ]
    return GroundPolygon(_place(local, center, 0.0), color)


def build_disk(
    center: Point3, diameter_m: float, segments: int, color: RGB
) -> GroundPolygon:
    """Build the destination disk as a regular polygon.

    Raises:
        ParameterError: If ``segments`` is below the minimum or the diameter is
            not positive
    """
    if segments < MIN_DISK_SEGMENTS:
        raise ParameterError(
            f"A disk needs at least {MIN_DISK_SEGMENTS} segments, got {segments}"
        )
    return regular_polygon(center, diameter_m / 2, segments, color)


def build_polygon(vertices: Sequence[Point3], color: RGB) -> GroundPolygon:
    """Flatten vertices onto the ground and orient them counterclockwise."""
    flat = [Point3(vertex.x, vertex.y, 0.0) for vertex in vertices]
    if len(flat) >= 3 and signed_area([(p.x, p.y) for p in flat]) < 0:
        flat.reverse()
    return GroundPolygon(flat, color)


def build_polyline(
    vertices: Sequence[Point3], width_m: float, color: RGB
) -> list[GroundPolygon]:
    """Build one rectangle of ``width_m`` per non-degenerate segment."""
    if not math.isfinite(width_m) or width_m <= 0:
        raise ParameterError(f"Polyline width must be > 0, got {width_m}")
    half = width_m / 2
    polygons = []
    for start, end in zip(vertices, vertices[1:]):
        length = start.planar_distance_to(end)
        if length == 0:
            continue
        heading = math.atan2(end.y - start.y, end.x - start.x)
        local = [(0.0, -half), (length, -half), (length, half), (0.0, half)]
        polygons.append(GroundPolygon(_place(local, start, heading), color))
    return polygons


def distance_compensated_scale(
    anchor: Point3,
    lens_position: Point3,
    base_dims: ArrowDimensions,
    reference_distance_m: float,
    enabled: bool = True,
) -> ArrowDimensions:
    """Shrink an arrow in proportion to its distance from the projector lens.

    The factor ``reference / distance`` is clamped to ``[0.25, 1.0]``.

    Raises:
        ParameterError: If the reference distance is not positive or the
            anchor coincides with the lens
    """
    if not enabled:
        return base_dims
    if not math.isfinite(reference_distance_m) or reference_distance_m <= 0:
        raise ParameterError(
            f"Reference distance must be > 0, got {reference_distance_m}"
        )
    distance = anchor.distance_to(lens_position)
    if distance == 0:
        raise ParameterError("Anchor coincides with the projector lens")
    factor = min(max(reference_distance_m / distance, SCALE_CLAMP_MIN), SCALE_CLAMP_MAX)
    return base_dims.scaled(factor)


class MarkerKind(enum.Enum):
    """Supported marker shapes."""

    ARROW = "arrow"
    DISK = "disk"
    POLYGON = "polygon"
    POLYLINE = "polyline"


@frozen
class MarkerSpec:
    """A flat marker on the ground, ready to be turned into polygons."""

    kind: MarkerKind
    color: RGB
    position: Point3 = Point3(0.0, 0.0, 0.0)
    heading: float = 0.0
    arrow: ArrowDimensions | None = None
    diameter_m: float | None = None
    segments: int = DEFAULT_DISK_SEGMENTS
    vertices: tuple[Point3, ...] = field(default=(), converter=tuple)
    width_m: float | None = None

    def __attrs_post_init__(self) -> None:
        """Check that the fields needed by ``kind`` are present."""
        if self.position.z != 0.0:
            raise ParameterError("Ground markers must sit on z = 0")
        if self.kind is MarkerKind.ARROW and self.arrow is None:
            raise ParameterError("Arrow markers need arrow dimensions")
        if self.kind is MarkerKind.DISK and (
            self.diameter_m is None or self.diameter_m <= 0
        ):
            raise ParameterError("Disk markers need a diameter > 0")
        if self.kind is MarkerKind.POLYLINE and self.width_m is None:
            raise ParameterError("Polyline markers need a width")

    def polygons(self) -> list[GroundPolygon]:
        """Build the ground polygons for this marker."""
        if self.kind is MarkerKind.ARROW:
            assert self.arrow is not None
            return [build_arrow(self.position, self.heading, self.arrow, self.color)]
        if self.kind is MarkerKind.DISK:
            assert self.diameter_m is not None
            return [
                build_disk(self.position, self.diameter_m, self.segments, self.color)
            ]
        if self.kind is MarkerKind.POLYGON:
            return [build_polygon(self.vertices, self.color)]
        assert self.width_m is not None
        return build_polyline(self.vertices, self.width_m, self.color)


@frozen
class MarkerStyle:
    """Marker appearance, from the style configuration section."""

    arrow: ArrowDimensions = ArrowDimensions()
    arrow_color: RGB = DEFAULT_ARROW_COLOR
    destination_color: RGB = DEFAULT_DESTINATION_COLOR
    destination_segments: int = DEFAULT_DISK_SEGMENTS
    scale_compensation: bool = False
    reference_distance_m: float = DEFAULT_REFERENCE_DISTANCE_M
    path_line: bool = False
    path_line_width_m: float = DEFAULT_PATH_LINE_WIDTH_M
    path_line_color: RGB = DEFAULT_PATH_LINE_COLOR


def markers_for_anchors(
    anchors: Sequence[Anchor],
    style: MarkerStyle,
    destination_diameter_m: float,
    lens_position: Point3 | None = None,
) -> list[MarkerSpec]:
    """Turn anchors into markers, destination disk first.

    A zero destination diameter yields no disk. With scale compensation
    enabled, ``lens_position`` (in the anchors' frame) is required.

    Raises:
        ParameterError: If scale compensation is on and no lens position is given
    """
    if style.scale_compensation and lens_position is None and anchors:
        raise ParameterError("Scale compensation needs the lens position")

    markers: list[MarkerSpec] = []
    for anchor in anchors:
        ground = Point3(anchor.position.x, anchor.position.y, 0.0)
        if anchor.kind is AnchorKind.DESTINATION:
            if destination_diameter_m > 0:
                markers.append(
                    MarkerSpec(
                        MarkerKind.DISK,
                        style.destination_color,
                        ground,
                        anchor.heading,
                        diameter_m=destination_diameter_m,
                        segments=style.destination_segments,
                    )
                )
            continue

        dims = style.arrow
        if style.scale_compensation:
            assert lens_position is not None
            dims = distance_compensated_scale(
                ground, lens_position, style.arrow, style.reference_distance_m
            )
        markers.append(
            MarkerSpec(
                MarkerKind.ARROW, style.arrow_color, ground, anchor.heading, arrow=dims
            )
        )

    _LOGGER.debug("Built %d markers from %d anchors", len(markers), len(anchors))
    return markers


def path_line_marker(positions: Sequence[Point3], style: MarkerStyle) -> MarkerSpec:
    """Build the optional polyline drawn along the dense path."""
    return MarkerSpec(
        MarkerKind.POLYLINE,
        style.path_line_color,
        vertices=[Point3(p.x, p.y, 0.0) for p in positions],
        width_m=style.path_line_width_m,
    )


STYLE_SCHEMA = vol.Schema(
    {
        vol.Optional("arrow", default={}): {
            vol.Optional(
                "shaft_length", default=DEFAULT_SHAFT_LENGTH_M
            ): positive_float,
            vol.Optional(
                "shaft_diameter", default=DEFAULT_SHAFT_DIAMETER_M
            ): positive_float,
            vol.Optional("head_length", default=DEFAULT_HEAD_LENGTH_M): positive_float,
            vol.Optional(
                "head_diameter", default=DEFAULT_HEAD_DIAMETER_M
            ): positive_float,
            vol.Optional("color", default=list(DEFAULT_ARROW_COLOR)): rgb_color,
        },
        vol.Optional("destination", default={}): {
            vol.Optional("color", default=list(DEFAULT_DESTINATION_COLOR)): rgb_color,
            vol.Optional("segments", default=DEFAULT_DISK_SEGMENTS): vol.All(
                int, vol.Range(min=MIN_DISK_SEGMENTS)
            ),
        },
        vol.Optional("scale_compensation", default={}): {
            vol.Optional("enabled", default=False): bool,
            vol.Optional(
                "reference_distance_m", default=DEFAULT_REFERENCE_DISTANCE_M
            ): positive_float,
        },
        vol.Optional("path_line", default={}): {
            vol.Optional("enabled", default=False): bool,
            vol.Optional("width", default=DEFAULT_PATH_LINE_WIDTH_M): positive_float,
            vol.Optional("color", default=list(DEFAULT_PATH_LINE_COLOR)): rgb_color,
        },
    }
)


def style_from_dict(data: dict[str, Any] | None) -> MarkerStyle:
    """Validate a style section and build a ``MarkerStyle``."""
    config = validate(STYLE_SCHEMA, data or {})
    arrow = config["arrow"]
    try:
        dims = ArrowDimensions(
            arrow["shaft_length"],
            arrow["shaft_diameter"],
            arrow["head_length"],
            arrow["head_diameter"],
        )
    except ParameterError as err:
        raise ConfigParseError("arrow", str(err)) from err
    return MarkerStyle(
        arrow=dims,
        arrow_color=arrow["color"],
        destination_color=config["destination"]["color"],
        destination_segments=config["destination"]["segments"],
        scale_compensation=config["scale_compensation"]["enabled"],
        reference_distance_m=config["scale_compensation"]["reference_distance_m"],
        path_line=config["path_line"]["enabled"],
        path_line_width_m=config["path_line"]["width"],
        path_line_color=config["path_line"]["color"],
    )


def load_marker_style(text: str) -> MarkerStyle:
    """Parse a style configuration file."""
    return style_from_dict(parse_yaml(text, "style config"))
