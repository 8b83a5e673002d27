"""Evenly space out a navigation path into arrow anchors.

Planner paths come densely and unevenly sampled. Arrows have a physical size,
so placing one on every pose makes them overlap. The resampler walks the path
backward from the destination and keeps only poses that are far enough from
the previously kept one.
"""

from __future__ import annotations

import enum
import logging
import math

from attrs import Factory, field, frozen

from .exceptions import ParameterError
from .geometry import Point3, RigidTransform, UnitQuaternion

_LOGGER = logging.getLogger(__name__)


@frozen
class Pose:
    """A path pose: position plus orientation."""

    position: Point3
    orientation: UnitQuaternion = Factory(UnitQuaternion.identity)


@frozen
class NavPath:
    """Ordered poses from start (index 0) to destination (last index)."""

    frame: str
    poses: tuple[Pose, ...] = field(default=(), converter=tuple)

    def __len__(self) -> int:
        """Return the number of poses."""
        return len(self.poses)

    @property
    def positions(self) -> list[Point3]:
        """Positions of all poses, in order."""
        return [pose.position for pose in self.poses]

    def transformed(self, transform: RigidTransform) -> NavPath:
        """Re-express the path in ``transform.parent_frame``.

        Raises:
            ParameterError: If the path is not in ``transform.child_frame``
        """
        if transform.child_frame != self.frame:
            raise ParameterError(
                f"Path is in '{self.frame}', transform expects "
                f"'{transform.child_frame}'"
            )
        rotation = transform.rotation.as_rotation()
        poses = [
            Pose(
                transform.apply(pose.position),
                UnitQuaternion.from_rotation(
                    rotation * pose.orientation.as_rotation()
                ),
            )
            for pose in self.poses
        ]
        return NavPath(transform.parent_frame, poses)


@frozen
class ResampleParams:
    """Spacing ``D`` between arrows and destination circle diameter."""

    arrow_spacing_m: float = field(converter=float)
    destination_diameter_m: float = field(default=0.0, converter=float)

    def __attrs_post_init__(self) -> None:
        """Validate ranges."""
        if not math.isfinite(self.arrow_spacing_m) or self.arrow_spacing_m <= 0:
            raise ParameterError(
                f"Arrow spacing must be > 0, got {self.arrow_spacing_m}"
            )
        if (
            not math.isfinite(self.destination_diameter_m)
            or self.destination_diameter_m < 0
        ):
            raise ParameterError(
                "Destination diameter must be >= 0, got "
                f"{self.destination_diameter_m}"
            )


class AnchorKind(enum.Enum):
    """What a resampled anchor carries."""

    DESTINATION = "destination"
    ARROW = "arrow"


@frozen
class Anchor:
    """A kept path point, with the heading of the marker placed on it."""

    position: Point3
    kind: AnchorKind
    heading: float = 0.0
    source_index: int = -1


def resample(path: NavPath, params: ResampleParams) -> list[Anchor]:
    """Select evenly spaced anchors, destination first.

    From each kept pose the scan steps toward the start and keeps the first
    pose whose planar distance is at least the threshold: ``D`` plus the
    destination diameter for the gap next to the destination, ``D`` for every
    other gap. The scan ends once it runs past the start of the path.
    """
    poses = path.poses
    anchors: list[Anchor] = []
    if not poses:
        return anchors

    last = len(poses) - 1
    i = last
    while i >= 0:
        position = poses[i].position
        kind = AnchorKind.DESTINATION if i == last else AnchorKind.ARROW
        anchors.append(Anchor(position, kind, source_index=i))

        threshold = params.arrow_spacing_m
        if i == last:
            threshold += params.destination_diameter_m

        j = i - 1
        while j >= 0 and position.planar_distance_to(poses[j].position) < threshold:
            j -= 1
        i = j

    _LOGGER.debug(
        "Resampled %d poses into %d anchors (D=%s, diameter=%s)",
        len(poses),
        len(anchors),
        params.arrow_spacing_m,
        params.destination_diameter_m,
    )
    return anchors


def derive_headings(anchors: list[Anchor]) -> list[Anchor]:
    """Point every arrow at its neighbour nearer the destination.

    The destination takes the heading of the first arrow, or 0 when alone.
    """
    result: list[Anchor] = []
    for k, anchor in enumerate(anchors):
        if k == 0:
            result.append(anchor)
            continue
        target = anchors[k - 1].position
        heading = math.atan2(
            target.y - anchor.position.y, target.x - anchor.position.x
        )
        result.append(
            Anchor(anchor.position, anchor.kind, heading, anchor.source_index)
        )

    if result:
        destination = result[0]
        heading = result[1].heading if len(result) > 1 else 0.0
        result[0] = Anchor(
            destination.position, destination.kind, heading, destination.source_index
        )
    return result
