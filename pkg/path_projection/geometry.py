"""Rigid-body math and the static transform hierarchy.

Frames follow the static transform publisher convention: a transform with
``parent_frame`` P and ``child_frame`` C maps points expressed in C into P.
Euler angles are ``yaw pitch roll`` in radians, applied intrinsically
Z, then Y, then X, so the rotation matrix is ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``.

Projector lens frames use the camera convention: +Z along the projection
axis, +X to the right of the image and +Y down the image.
"""

from __future__ import annotations

import logging
import math
from typing import Any, Iterable, Iterator

import numpy as np
import voluptuous as vol
from attrs import field, frozen
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.transform import Rotation

from .config import finite_float, parse_yaml, validate
from .const import QUATERNION_NORM_TOLERANCE
from .exceptions import (ConfigParseError, FrameChainError, InvalidValueError,
                         TransformLookupError)

_LOGGER = logging.getLogger(__name__)


def _finite(instance: Any, attribute: Any, value: float) -> None:
    if not math.isfinite(value):
        raise InvalidValueError(f"{attribute.name} must be finite, got {value}")


@frozen
class Point3:
    """A point in meters, expressed in some named frame."""

    x: float = field(converter=float, validator=_finite)
    y: float = field(converter=float, validator=_finite)
    z: float = field(default=0.0, converter=float, validator=_finite)

    @classmethod
    def from_array(cls, values: ArrayLike) -> Point3:
        """Build a point from any three-element sequence."""
        x, y, z = (float(v) for v in np.asarray(values, dtype=np.float64).reshape(3))
        return cls(x, y, z)

    def as_array(self) -> NDArray[np.float64]:
        """Return the point as a float64 vector."""
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def distance_to(self, other: Point3) -> float:
        """Euclidean distance to another point."""
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))

    def planar_distance_to(self, other: Point3) -> float:
        """Distance to another point ignoring z."""
        return math.hypot(self.x - other.x, self.y - other.y)


@frozen
class UnitQuaternion:
    """A rotation as a unit quaternion ``(qx, qy, qz, qw)``.

    Components are re-normalized on construction. Inputs whose norm deviates
    from one by more than ``QUATERNION_NORM_TOLERANCE`` are rejected.
    """

    qx: float = field(default=0.0, converter=float, validator=_finite)
    qy: float = field(default=0.0, converter=float, validator=_finite)
    qz: float = field(default=0.0, converter=float, validator=_finite)
    qw: float = field(default=1.0, converter=float, validator=_finite)

    def __attrs_post_init__(self) -> None:
        """Check the norm and normalize in place."""
        norm = math.hypot(self.qx, self.qy, self.qz, self.qw)
        if abs(norm - 1.0) > QUATERNION_NORM_TOLERANCE:
            raise InvalidValueError(
                f"Quaternion norm {norm!r} deviates from 1 by more than "
                f"{QUATERNION_NORM_TOLERANCE}"
            )
        for name in ("qx", "qy", "qz", "qw"):
            object.__setattr__(self, name, getattr(self, name) / norm)

    @classmethod
    def identity(cls) -> UnitQuaternion:
        """Return the identity rotation."""
        return cls(0.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_rotation(cls, rotation: Rotation) -> UnitQuaternion:
        """Build from a scipy rotation."""
        qx, qy, qz, qw = rotation.as_quat()
        return cls(qx, qy, qz, qw)

    def as_rotation(self) -> Rotation:
        """Return the equivalent scipy rotation."""
        return Rotation.from_quat([self.qx, self.qy, self.qz, self.qw])

    def as_matrix(self) -> NDArray[np.float64]:
        """Return the 3x3 rotation matrix."""
        return np.asarray(self.as_rotation().as_matrix(), dtype=np.float64)

    def angle_to(self, other: UnitQuaternion) -> float:
        """Angle in radians of the rotation taking ``self`` to ``other``."""
        relative = self.as_rotation().inv() * other.as_rotation()
        return float(relative.magnitude())


@frozen
class RigidTransform:
    """A rigid transform mapping points from ``child_frame`` into ``parent_frame``."""

    translation: Point3
    rotation: UnitQuaternion
    parent_frame: str
    child_frame: str

    @classmethod
    def identity(
        cls, parent_frame: str, child_frame: str | None = None
    ) -> RigidTransform:
        """Return the identity between two frames (the same frame by default)."""
        return cls(
            Point3(0.0, 0.0, 0.0),
            UnitQuaternion.identity(),
            parent_frame,
            child_frame if child_frame is not None else parent_frame,
        )

    def as_matrix(self) -> NDArray[np.float64]:
        """Return the 4x4 homogeneous matrix."""
        matrix = np.eye(4, dtype=np.float64)
        matrix[:3, :3] = self.rotation.as_matrix()
        matrix[:3, 3] = self.translation.as_array()
        return matrix

    def apply(self, point: Point3) -> Point3:
        """Map a point from the child frame into the parent frame."""
        return Point3.from_array(self.apply_array(point.as_array())[0])

    def apply_array(self, points: ArrayLike) -> NDArray[np.float64]:
        """Map an ``(N, 3)`` array of child-frame points into the parent frame."""
        array = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        rotated = self.rotation.as_rotation().apply(array)
        return np.asarray(rotated, dtype=np.float64).reshape(-1, 3) + (
            self.translation.as_array()
        )

    def is_close(self, other: RigidTransform, tolerance: float = 1e-12) -> bool:
        """Compare translation (meters) and rotation angle (radians)."""
        return (
            self.translation.distance_to(other.translation) <= tolerance
            and self.rotation.angle_to(other.rotation) <= tolerance
        )


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Chain two transforms: points in ``b.child_frame`` into ``a.parent_frame``.

    Raises:
        FrameChainError: If ``a.child_frame`` is not ``b.parent_frame``
    """
    if a.child_frame != b.parent_frame:
        raise FrameChainError(
            f"Cannot compose {a.parent_frame}->{a.child_frame} with "
            f"{b.parent_frame}->{b.child_frame}"
        )
    rotation_a = a.rotation.as_rotation()
    translation = rotation_a.apply(b.translation.as_array()) + a.translation.as_array()
    return RigidTransform(
        Point3.from_array(translation),
        UnitQuaternion.from_rotation(rotation_a * b.rotation.as_rotation()),
        a.parent_frame,
        b.child_frame,
    )


def invert(t: RigidTransform) -> RigidTransform:
    """Return the inverse transform, with parent and child frames swapped."""
    inverse = t.rotation.as_rotation().inv()
    translation = -inverse.apply(t.translation.as_array())
    return RigidTransform(
        Point3.from_array(translation),
        UnitQuaternion.from_rotation(inverse),
        t.child_frame,
        t.parent_frame,
    )


def from_xyz_ypr(
    x: float,
    y: float,
    z: float,
    yaw: float,
    pitch: float,
    roll: float,
    parent_frame: str = "parent",
    child_frame: str = "child",
) -> RigidTransform:
    """Build a transform from static transform publisher arguments.

    Raises:
        InvalidValueError: If any input is not finite
    """
    values = (x, y, z, yaw, pitch, roll)
    if not all(math.isfinite(v) for v in values):
        raise InvalidValueError(f"Transform arguments must be finite: {values}")
    rotation = Rotation.from_euler("ZYX", [yaw, pitch, roll])
    return RigidTransform(
        Point3(x, y, z),
        UnitQuaternion.from_rotation(rotation),
        parent_frame,
        child_frame,
    )


class TransformTree:
    """A static forest of named frames joined by rigid transforms.

    Every child frame has at most one parent and the edges never form a
    cycle. The tree is filled once at load time and read afterwards.
    """

    def __init__(self, edges: Iterable[RigidTransform] = ()) -> None:
        """Initialize the tree with optional edges."""
        self._parents: dict[str, RigidTransform] = {}
        for edge in edges:
            self.add(edge)

    def __len__(self) -> int:
        """Return the number of edges."""
        return len(self._parents)

    def __iter__(self) -> Iterator[RigidTransform]:
        """Iterate over edges in insertion order."""
        return iter(self._parents.values())

    def __contains__(self, frame: object) -> bool:
        """Return True if the frame appears anywhere in the tree."""
        return isinstance(frame, str) and frame in self.frames()

    def frames(self) -> set[str]:
        """Return every frame name in the tree."""
        names: set[str] = set()
        for edge in self._parents.values():
            names.update((edge.parent_frame, edge.child_frame))
        return names

    def add(self, edge: RigidTransform) -> None:
        """Add an edge.

        Raises:
            FrameChainError: If the edge is a self loop, gives a frame a second
                parent, or closes a cycle
        """
        if edge.parent_frame == edge.child_frame:
            raise FrameChainError(f"Frame '{edge.child_frame}' cannot parent itself")
        if edge.child_frame in self._parents:
            existing = self._parents[edge.child_frame].parent_frame
            raise FrameChainError(
                f"Frame '{edge.child_frame}' already has parent '{existing}'"
            )
        if edge.child_frame in self._ancestors(edge.parent_frame):
            raise FrameChainError(
                f"Edge {edge.parent_frame}->{edge.child_frame} would create a cycle"
            )
        self._parents[edge.child_frame] = edge
        _LOGGER.debug("Added transform %s -> %s", edge.parent_frame, edge.child_frame)

    def _ancestors(self, frame: str) -> list[str]:
        """Return the frame followed by its ancestors up to the root."""
        chain = [frame]
        while chain[-1] in self._parents:
            chain.append(self._parents[chain[-1]].parent_frame)
        return chain

    def _from_root(self, frame: str, root: str) -> RigidTransform:
        """Return the transform mapping ``frame`` points into ``root``."""
        result = RigidTransform.identity(frame)
        current = frame
        while current != root:
            edge = self._parents[current]
            result = compose(edge, result)
            current = edge.parent_frame
        return result

    def lookup(self, from_frame: str, to_frame: str) -> RigidTransform:
        """Return the transform mapping ``to_frame`` points into ``from_frame``.

        Raises:
            TransformLookupError: If the frames are unknown or disconnected
        """
        if from_frame == to_frame:
            return RigidTransform.identity(from_frame)

        known = self.frames()
        for frame in (from_frame, to_frame):
            if frame not in known:
                raise TransformLookupError(
                    from_frame, to_frame, f"unknown frame '{frame}'"
                )

        from_chain = self._ancestors(from_frame)
        to_chain = self._ancestors(to_frame)
        common = next((frame for frame in to_chain if frame in from_chain), None)
        if common is None:
            raise TransformLookupError(
                from_frame, to_frame, "frames are in disconnected trees"
            )

        root_from = self._from_root(from_frame, common)
        root_to = self._from_root(to_frame, common)
        return compose(invert(root_from), root_to)


def lookup(tree: TransformTree, from_frame: str, to_frame: str) -> RigidTransform:
    """Look up the chained transform between two frames of ``tree``."""
    return tree.lookup(from_frame, to_frame)


def _frame_name(value: Any) -> str:
    if not isinstance(value, str) or not value.strip():
        raise vol.Invalid("frame names must be non-empty strings")
    return value.strip()


def _publisher_args(value: Any) -> dict[str, Any]:
    """Expand ``"x y z yaw pitch roll parent child"`` into a record."""
    if not isinstance(value, str):
        raise vol.Invalid("args must be a string")
    parts = value.split()
    if len(parts) != 8:
        raise vol.Invalid("args needs 'x y z yaw pitch roll parent child'")
    keys = ("x", "y", "z", "yaw", "pitch", "roll")
    record: dict[str, Any] = {
        key: finite_float(part) for key, part in zip(keys, parts)
    }
    record["parent"], record["child"] = parts[6], parts[7]
    return record


TRANSFORM_RECORD_SCHEMA = vol.Schema(
    {
        vol.Required("parent"): _frame_name,
        vol.Required("child"): _frame_name,
        vol.Optional("x", default=0.0): finite_float,
        vol.Optional("y", default=0.0): finite_float,
        vol.Optional("z", default=0.0): finite_float,
        vol.Optional("yaw", default=0.0): finite_float,
        vol.Optional("pitch", default=0.0): finite_float,
        vol.Optional("roll", default=0.0): finite_float,
    }
)


def _transform_record(value: Any) -> dict[str, Any]:
    if isinstance(value, dict) and set(value) == {"args"}:
        value = _publisher_args(value["args"])
    result: dict[str, Any] = TRANSFORM_RECORD_SCHEMA(value)
    return result


TRANSFORMS_SCHEMA = vol.Schema({vol.Required("transforms"): [_transform_record]})


def load_transform_tree(text: str) -> TransformTree:
    """Parse a transform configuration file into a tree.

    The file holds a ``transforms`` list. Each record is either
    ``{parent, child, x, y, z, yaw, pitch, roll}`` or
    ``{args: "x y z yaw pitch roll parent child"}``.

    Raises:
        ConfigParseError: On malformed records, self loops, or cycles
    """
    data = validate(TRANSFORMS_SCHEMA, parse_yaml(text, "transform config"))
    tree = TransformTree()
    for index, record in enumerate(data["transforms"]):
        edge = from_xyz_ypr(
            record["x"],
            record["y"],
            record["z"],
            record["yaw"],
            record["pitch"],
            record["roll"],
            record["parent"],
            record["child"],
        )
        try:
            tree.add(edge)
        except FrameChainError as err:
            raise ConfigParseError(f"transforms.{index}", str(err)) from err
    _LOGGER.debug(
        "Loaded %d transforms over frames %s", len(tree), sorted(tree.frames())
    )
    return tree
