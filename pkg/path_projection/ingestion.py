"""Navigation path records: parsing and serialization.

One record is a JSON object::

    {"seq": 7, "frame": "map", "poses": [{"p": [x, y, z], "q": [qx, qy, qz, qw]}]}

``q`` is optional and defaults to the identity orientation. ``seq`` is only
meaningful on a stream connection.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, TypedDict

from typing_extensions import NotRequired

from .exceptions import InvalidValueError, PathParseError
from .geometry import Point3, UnitQuaternion
from .resampler import NavPath, Pose

_LOGGER = logging.getLogger(__name__)


class PoseRecord(TypedDict):
    """Type for one pose of a path record."""

    p: list[float]
    q: NotRequired[list[float]]


class PathMessage(TypedDict):
    """Type for a path record on the wire or on disk."""

    frame: str
    poses: list[PoseRecord]
    seq: NotRequired[int]


def _numbers(value: Any, arity: int, position: str) -> list[float]:
    """Check a JSON array of exactly ``arity`` finite numbers."""
    if not isinstance(value, list) or len(value) != arity:
        raise PathParseError(f"expected {arity} numbers", position)
    numbers = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise PathParseError("expected a number", position)
        try:
            number = float(item)
        except OverflowError as err:
            raise PathParseError("number out of range", position) from err
        if not math.isfinite(number):
            raise PathParseError("numbers must be finite", position)
        numbers.append(number)
    return numbers


def _reject_constant(token: str) -> float:
    raise ValueError(f"non-finite number {token}")


def _decode(text: str) -> Any:
    """Decode JSON, reporting line and column on syntax errors."""
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as err:
        raise PathParseError(
            err.msg, f"line {err.lineno}, column {err.colno}"
        ) from err
    except ValueError as err:
        raise PathParseError(str(err)) from err


def _pose(record: Any, index: int) -> Pose:
    position = f"poses[{index}]"
    if not isinstance(record, dict) or "p" not in record:
        raise PathParseError("pose needs a 'p' position", position)
    p = _numbers(record["p"], 3, f"{position}.p")
    if "q" not in record or record["q"] is None:
        return Pose(Point3(*p))
    q = _numbers(record["q"], 4, f"{position}.q")
    try:
        orientation = UnitQuaternion(*q)
    except InvalidValueError as err:
        raise PathParseError(str(err), f"{position}.q") from err
    return Pose(Point3(*p), orientation)


def message_from_data(data: Any) -> tuple[int | None, NavPath]:
    """Validate a decoded record and return its sequence number and path."""
    if not isinstance(data, dict):
        raise PathParseError("expected a JSON object")
    frame = data.get("frame")
    if not isinstance(frame, str) or not frame:
        raise PathParseError("'frame' must be a non-empty string", "frame")
    poses = data.get("poses")
    if not isinstance(poses, list):
        raise PathParseError("'poses' must be an array", "poses")

    seq = data.get("seq")
    if seq is not None and (isinstance(seq, bool) or not isinstance(seq, int)):
        raise PathParseError("'seq' must be an integer", "seq")

    path = NavPath(frame, [_pose(record, i) for i, record in enumerate(poses)])
    return seq, path


def parse_path_message(text: str) -> tuple[int | None, NavPath]:
    """Parse one record, keeping its optional sequence number."""
    return message_from_data(_decode(text))


def parse_path_text(text: str) -> NavPath:
    """Parse one path record.

    Raises:
        PathParseError: On malformed text, non-finite numbers, wrong arity or a
            non-unit quaternion. The error carries the position.
    """
    _, path = parse_path_message(text)
    _LOGGER.debug("Parsed path with %d poses in '%s'", len(path), path.frame)
    return path


def path_to_message(path: NavPath, seq: int | None = None) -> PathMessage:
    """Build the record for a path."""
    poses: list[PoseRecord] = []
    for pose in path.poses:
        q = pose.orientation
        poses.append(
            {
                "p": [pose.position.x, pose.position.y, pose.position.z],
                "q": [q.qx, q.qy, q.qz, q.qw],
            }
        )
    message: PathMessage = {"frame": path.frame, "poses": poses}
    if seq is not None:
        message["seq"] = seq
    return message


def serialize_path(path: NavPath, seq: int | None = None) -> str:
    """Serialize a path as a single-line record."""
    return json.dumps(path_to_message(path, seq), separators=(",", ":"))


def load_path_file(path: str | Path) -> NavPath:
    """Read a path record from a file.

    Raises:
        PathParseError: If the file cannot be read or parsed
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise PathParseError(f"cannot read {path}: {err}") from err
    return parse_path_text(text)


class SequenceTracker:
    """Per-connection sequence numbers.

    Records without ``seq`` are numbered one past the last seen.
    """

    def __init__(self) -> None:
        """Initialize the tracker."""
        self.last: int | None = None

    def accept(self, seq: int | None) -> int:
        """Return the sequence number for a record, checking it increases.

        Raises:
            PathParseError: If ``seq`` does not increase
        """
        if seq is None:
            seq = 1 if self.last is None else self.last + 1
        elif self.last is not None and seq <= self.last:
            raise PathParseError(
                f"sequence number {seq} does not increase past {self.last}", "seq"
            )
        self.last = seq
        return seq
