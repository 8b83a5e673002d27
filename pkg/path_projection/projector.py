"""Pinhole projector model.

The projector is treated as a camera running backwards: a ground point that
projects to pixel ``(u, v)`` is lit by that pixel. Pixel coordinates put
``(0, 0)`` at the center of the top-left pixel, with ``u`` to the right and
``v`` down. Lens frames use the camera convention (+Z along the projection
axis, +X right, +Y down).
"""

from __future__ import annotations

import enum
import logging
import math
from typing import Any

import numpy as np
import voluptuous as vol
import yaml
from attrs import Factory, frozen
from numpy.typing import ArrayLike, NDArray

from .config import finite_float, parse_yaml, positive_float, validate
from .const import (DEFAULT_BASE_FRAME, DEFAULT_LENS_FRAME,
                    DEFAULT_THROW_MAX_M, DEFAULT_THROW_MIN_M,
                    DISTORTION_ALIASES, DISTORTION_NONE, DISTORTION_RADTAN,
                    MIN_LENS_DEPTH, UNDISTORT_MAX_ITERATIONS,
                    UNDISTORT_TOLERANCE)
from .exceptions import (BehindLensError, ConfigParseError,
                         FootprintUndefinedError, NoGroundIntersectionError,
                         ParameterError)
from .geometry import Point3, RigidTransform, compose, invert

_LOGGER = logging.getLogger(__name__)


@frozen
class Distortion:
    """Radial-tangential lens distortion ``(k1, k2, p1, p2, k3)``.

    Applied to normalized image coordinates before the intrinsic scaling.
    """

    model: str = DISTORTION_NONE
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    k3: float = 0.0

    def __attrs_post_init__(self) -> None:
        """Validate the model name."""
        if self.model not in (DISTORTION_NONE, DISTORTION_RADTAN):
            raise ParameterError(f"Unknown distortion model '{self.model}'")

    @property
    def coefficients(self) -> list[float]:
        """Coefficients in calibration-file order."""
        return [self.k1, self.k2, self.p1, self.p2, self.k3]

    @property
    def is_identity(self) -> bool:
        """True when distortion leaves coordinates untouched."""
        return self.model == DISTORTION_NONE or not any(self.coefficients)

    def distort(
        self, x: NDArray[np.float64], y: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Map ideal normalized coordinates to distorted ones."""
        if self.is_identity:
            return x, y
        r2 = x * x + y * y
        radial = 1 + self.k1 * r2 + self.k2 * r2**2 + self.k3 * r2**3
        xd = x * radial + 2 * self.p1 * x * y + self.p2 * (r2 + 2 * x * x)
        yd = y * radial + self.p1 * (r2 + 2 * y * y) + 2 * self.p2 * x * y
        return xd, yd

    def undistort(
        self, xd: NDArray[np.float64], yd: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Invert ``distort`` with Newton iterations."""
        if self.is_identity:
            return xd, yd
        x, y = xd.copy(), yd.copy()
        for _ in range(UNDISTORT_MAX_ITERATIONS):
            fx, fy = self.distort(x, y)
            rx, ry = fx - xd, fy - yd
            r2 = x * x + y * y
            radial = 1 + self.k1 * r2 + self.k2 * r2**2 + self.k3 * r2**3
            slope = self.k1 + 2 * self.k2 * r2 + 3 * self.k3 * r2**2
            a = radial + 2 * slope * x * x + 2 * self.p1 * y + 6 * self.p2 * x
            b = 2 * slope * x * y + 2 * self.p1 * x + 2 * self.p2 * y
            d = radial + 2 * slope * y * y + 6 * self.p1 * y + 2 * self.p2 * x
            det = a * d - b * b
            dx = (-rx * d + ry * b) / det
            dy = (-ry * a + rx * b) / det
            x, y = x + dx, y + dy
            step = np.hypot(dx, dy)
            if float(np.max(step, initial=0.0)) < UNDISTORT_TOLERANCE:
                break
        else:
            _LOGGER.warning("Undistortion did not converge")
        return x, y


@frozen
class Intrinsics:
    """Image size, focal lengths and principal point, all in pixels."""

    width_px: int
    height_px: int
    fx: float
    fy: float
    cx: float
    cy: float
    distortion: Distortion = Factory(Distortion)

    def __attrs_post_init__(self) -> None:
        """Validate ranges."""
        if self.width_px <= 0 or self.height_px <= 0:
            raise ParameterError("Image width and height must be > 0")
        if not all(math.isfinite(v) for v in (self.fx, self.fy, self.cx, self.cy)):
            raise ParameterError("Intrinsics must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise ParameterError("Focal lengths must be > 0")
        if not 0 <= self.cx < self.width_px or not 0 <= self.cy < self.height_px:
            raise ParameterError(
                f"Principal point ({self.cx}, {self.cy}) lies outside the image"
            )

    @property
    def camera_matrix(self) -> list[float]:
        """Row-major 3x3 ``K``."""
        return [self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0]


@frozen
class ProjectorConfig:
    """Calibrated projector: intrinsics, mount pose and rated throw range."""

    intrinsics: Intrinsics
    mount: RigidTransform = Factory(
        lambda: RigidTransform.identity(DEFAULT_BASE_FRAME, DEFAULT_LENS_FRAME)
    )
    throw_min_m: float = DEFAULT_THROW_MIN_M
    throw_max_m: float = DEFAULT_THROW_MAX_M

    def __attrs_post_init__(self) -> None:
        """Validate the throw range."""
        if not 0 < self.throw_min_m < self.throw_max_m:
            raise ParameterError(
                f"Throw range must satisfy 0 < min < max, got "
                f"[{self.throw_min_m}, {self.throw_max_m}]"
            )


@frozen
class GroundFootprint:
    """The lit region on the ground: image corners TL, TR, BR, BL."""

    corners: tuple[Point3, Point3, Point3, Point3]
    near_width_m: float
    far_width_m: float
    depth_m: float
    area_m2: float


class ThrowStatus(enum.Enum):
    """Outcome of a throw-distance check."""

    OK = "ok"
    TOO_CLOSE = "too_close"
    TOO_FAR = "too_far"
    UNDEFINED = "undefined"


@frozen
class ThrowReport:
    """Lens-to-ground distance along the optical axis against the rated range."""

    status: ThrowStatus
    distance_m: float | None
    throw_min_m: float
    throw_max_m: float
    message: str

    @property
    def ok(self) -> bool:
        """True when the projection will be in focus."""
        return self.status is ThrowStatus.OK


def lens_pose(cfg: ProjectorConfig, robot_pose: RigidTransform) -> RigidTransform:
    """Return the lens pose in the world: ``robot_pose`` chained with the mount."""
    return compose(robot_pose, cfg.mount)


def project_points(
    cfg: ProjectorConfig, robot_pose: RigidTransform, points_world: ArrayLike
) -> NDArray[np.float64]:
    """Project an ``(N, 3)`` array of world points to ``(N, 2)`` pixels.

    Raises:
        BehindLensError: If any point has depth at or below ``MIN_LENS_DEPTH``
    """
    world_to_lens = invert(lens_pose(cfg, robot_pose))
    lens_points = world_to_lens.apply_array(points_world)
    depth = lens_points[:, 2]
    if np.any(depth <= MIN_LENS_DEPTH):
        raise BehindLensError(
            f"{int(np.count_nonzero(depth <= MIN_LENS_DEPTH))} point(s) behind the lens"
        )
    intr = cfg.intrinsics
    x, y = intr.distortion.distort(lens_points[:, 0] / depth, lens_points[:, 1] / depth)
    return np.column_stack((intr.fx * x + intr.cx, intr.fy * y + intr.cy))


def project_point(
    cfg: ProjectorConfig, robot_pose: RigidTransform, p_world: Point3
) -> tuple[float, float]:
    """Project one world point to a pixel ``(u, v)``.

    The pixel may lie outside the image; callers clip.

    Raises:
        BehindLensError: If the point is not in front of the lens
    """
    u, v = project_points(cfg, robot_pose, p_world.as_array())[0]
    return float(u), float(v)


def _pixel_rays(
    cfg: ProjectorConfig, pixels: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Lens-frame ray directions ``(x, y, 1)`` through pixels."""
    intr = cfg.intrinsics
    x, y = intr.distortion.undistort(
        (pixels[:, 0] - intr.cx) / intr.fx, (pixels[:, 1] - intr.cy) / intr.fy
    )
    return np.column_stack((x, y, np.ones_like(x)))


def unproject_to_ground(
    cfg: ProjectorConfig, robot_pose: RigidTransform, pixel: tuple[float, float]
) -> Point3:
    """Intersect the ray through ``pixel`` with the ground plane ``z = 0``.

    Raises:
        NoGroundIntersectionError: If the ray is level or rises, or the lens is
            not above the ground
    """
    pose = lens_pose(cfg, robot_pose)
    ray = _pixel_rays(cfg, np.array([pixel], dtype=np.float64))[0]
    direction = pose.rotation.as_rotation().apply(ray)
    origin = pose.translation.as_array()
    if direction[2] >= 0:
        raise NoGroundIntersectionError(
            f"Ray through pixel {pixel} does not descend to the ground"
        )
    t = -origin[2] / direction[2]
    if t <= 0:
        raise NoGroundIntersectionError(
            f"Lens at height {origin[2]} is not above the ground"
        )
    hit = origin + t * direction
    return Point3(hit[0], hit[1], 0.0)


def _midpoint(a: Point3, b: Point3) -> Point3:
    return Point3((a.x + b.x) / 2, (a.y + b.y) / 2, 0.0)


def ground_footprint(
    cfg: ProjectorConfig, robot_pose: RigidTransform
) -> GroundFootprint:
    """Unproject the four image corners onto the ground.

    Image corners are the outer edges of the corner pixels, so the footprint
    spans exactly ``width_px`` by ``height_px`` pixels.

    Raises:
        FootprintUndefinedError: If any corner ray misses the ground
    """
    intr = cfg.intrinsics
    left, top = -0.5, -0.5
    right, bottom = intr.width_px - 0.5, intr.height_px - 0.5
    pixels = ((left, top), (right, top), (right, bottom), (left, bottom))
    corners = []
    names = ("top-left", "top-right", "bottom-right", "bottom-left")
    for name, pixel in zip(names, pixels):
        try:
            corners.append(unproject_to_ground(cfg, robot_pose, pixel))
        except NoGroundIntersectionError as err:
            raise FootprintUndefinedError(
                f"The {name} image corner does not reach the ground: {err}"
            ) from err
    tl, tr, br, bl = corners

    lens = lens_pose(cfg, robot_pose).translation
    foot = Point3(lens.x, lens.y, 0.0)
    top_mid, bottom_mid = _midpoint(tl, tr), _midpoint(bl, br)
    top_width, bottom_width = tl.distance_to(tr), bl.distance_to(br)
    if top_mid.distance_to(foot) >= bottom_mid.distance_to(foot):
        far_width, near_width = top_width, bottom_width
    else:
        far_width, near_width = bottom_width, top_width

    xs = np.array([c.x for c in corners])
    ys = np.array([c.y for c in corners])
    area = 0.5 * abs(float(np.dot(xs, np.roll(ys, -1)) - np.dot(np.roll(xs, -1), ys)))
    footprint = GroundFootprint(
        (tl, tr, br, bl),
        near_width_m=near_width,
        far_width_m=far_width,
        depth_m=top_mid.distance_to(bottom_mid),
        area_m2=area,
    )
    _LOGGER.debug("Ground footprint: %s", footprint)
    return footprint


def validate_throw(cfg: ProjectorConfig, robot_pose: RigidTransform) -> ThrowReport:
    """Check the lens-to-ground distance along the optical axis.

    Both range limits are inclusive. Outside the range the projection blurs.
    """
    pose = lens_pose(cfg, robot_pose)
    axis = pose.rotation.as_rotation().apply([0.0, 0.0, 1.0])
    origin = pose.translation.as_array()
    low, high = cfg.throw_min_m, cfg.throw_max_m

    if axis[2] >= 0 or origin[2] <= 0:
        report = ThrowReport(
            ThrowStatus.UNDEFINED,
            None,
            low,
            high,
            "Optical axis never meets the ground; throw distance is undefined",
        )
    else:
        distance = float(-origin[2] / axis[2] * np.linalg.norm(axis))
        if distance < low:
            status = ThrowStatus.TOO_CLOSE
            message = (
                f"Throw distance {distance:.3f} m is below the minimum {low} m; "
                "projection will be blurred"
            )
        elif distance > high:
            status = ThrowStatus.TOO_FAR
            message = (
                f"Throw distance {distance:.3f} m exceeds the maximum {high} m; "
                "projection will be blurred"
            )
        else:
            status = ThrowStatus.OK
            message = f"Throw distance {distance:.3f} m is within [{low}, {high}] m"
        report = ThrowReport(status, distance, low, high, message)

    if report.ok:
        _LOGGER.debug(report.message)
    else:
        _LOGGER.warning(report.message)
    return report


def _matrix_data(size: int, rows: int, cols: int) -> Any:
    """Accept a flat list, nested rows, or a ``{rows, cols, data}`` mapping."""

    def _validate(value: Any) -> list[float]:
        if isinstance(value, dict):
            if value.get("rows") != rows or value.get("cols") != cols:
                raise vol.Invalid(f"expected a {rows}x{cols} matrix")
            value = value.get("data")
        if isinstance(value, list) and value and all(
            isinstance(row, list) for row in value
        ):
            value = [item for row in value for item in row]
        if not isinstance(value, list) or len(value) != size:
            raise vol.Invalid(f"expected {size} numbers")
        return [finite_float(item) for item in value]

    return _validate


def _distortion_model(value: Any) -> str:
    if not isinstance(value, str):
        raise vol.Invalid("expected a model name")
    model = DISTORTION_ALIASES.get(value.lower(), value.lower())
    if model not in (DISTORTION_NONE, DISTORTION_RADTAN):
        raise vol.Invalid(f"unsupported distortion model '{value}'")
    return model


def _image_size(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise vol.Invalid("expected a positive integer")
    return value


PROJECTOR_SCHEMA = vol.Schema(
    {
        vol.Required("image_width"): _image_size,
        vol.Required("image_height"): _image_size,
        vol.Optional("camera_name"): str,
        vol.Optional("camera_matrix"): _matrix_data(9, 3, 3),
        vol.Optional("fx"): positive_float,
        vol.Optional("fy"): positive_float,
        vol.Optional("cx"): finite_float,
        vol.Optional("cy"): finite_float,
        vol.Optional("distortion_model", default=DISTORTION_NONE): _distortion_model,
        vol.Optional("distortion_coefficients"): _matrix_data(5, 1, 5),
        vol.Optional("throw_min_m", default=DEFAULT_THROW_MIN_M): positive_float,
        vol.Optional("throw_max_m", default=DEFAULT_THROW_MAX_M): positive_float,
    },
    extra=vol.ALLOW_EXTRA,
)

_EXPLICIT_KEYS = ("fx", "fy", "cx", "cy")


def _focal_and_center(config: dict[str, Any]) -> tuple[float, float, float, float]:
    """Read ``fx, fy, cx, cy`` from ``K`` or from explicit fields."""
    explicit = [key for key in _EXPLICIT_KEYS if key in config]
    if "camera_matrix" in config:
        if explicit:
            raise ConfigParseError(
                explicit[0], "give either camera_matrix or fx/fy/cx/cy, not both"
            )
        k = config["camera_matrix"]
        if k[1] != 0:
            raise ConfigParseError("camera_matrix", "nonzero skew is not supported")
        if k[3] != 0 or k[6] != 0 or k[7] != 0 or k[8] != 1:
            raise ConfigParseError(
                "camera_matrix", "expected [fx 0 cx; 0 fy cy; 0 0 1]"
            )
        if k[0] <= 0 or k[4] <= 0:
            raise ConfigParseError("camera_matrix", "focal lengths must be > 0")
        return k[0], k[4], k[2], k[5]

    for key in _EXPLICIT_KEYS:
        if key not in config:
            raise ConfigParseError(
                key if explicit else "camera_matrix", "required key not provided"
            )
    return config["fx"], config["fy"], config["cx"], config["cy"]


def projector_config_from_dict(
    data: Any, mount: RigidTransform | None = None
) -> ProjectorConfig:
    """Validate a calibration mapping and build a ``ProjectorConfig``."""
    config = validate(PROJECTOR_SCHEMA, data)
    fx, fy, cx, cy = _focal_and_center(config)

    coefficients = config.get("distortion_coefficients", [0.0] * 5)
    if config["distortion_model"] == DISTORTION_NONE and any(coefficients):
        raise ConfigParseError(
            "distortion_coefficients", "coefficients given with model 'none'"
        )

    try:
        intrinsics = Intrinsics(
            config["image_width"],
            config["image_height"],
            fx,
            fy,
            cx,
            cy,
            Distortion(config["distortion_model"], *coefficients),
        )
        kwargs: dict[str, Any] = {
            "throw_min_m": config["throw_min_m"],
            "throw_max_m": config["throw_max_m"],
        }
        if mount is not None:
            kwargs["mount"] = mount
        return ProjectorConfig(intrinsics, **kwargs)
    except ParameterError as err:
        raise ConfigParseError("", str(err)) from err


def load_projector_config(
    text: str, mount: RigidTransform | None = None
) -> ProjectorConfig:
    """Parse a projector calibration file.

    Accepts either ``camera_matrix`` (row-major 3x3 ``K``, flat, nested or in
    ``{rows, cols, data}`` form) or explicit ``fx``, ``fy``, ``cx``, ``cy``.

    Raises:
        ConfigParseError: On a missing field, a non-finite value or an
            inconsistent ``K``
    """
    cfg = projector_config_from_dict(parse_yaml(text, "projector config"), mount)
    _LOGGER.debug("Loaded projector config: %s", cfg.intrinsics)
    return cfg


def dump_projector_config(cfg: ProjectorConfig) -> str:
    """Serialize the calibration part of a config (the mount is not included)."""
    intr = cfg.intrinsics
    data = {
        "image_width": intr.width_px,
        "image_height": intr.height_px,
        "camera_matrix": {"rows": 3, "cols": 3, "data": intr.camera_matrix},
        "distortion_model": intr.distortion.model,
        "distortion_coefficients": {
            "rows": 1,
            "cols": 5,
            "data": intr.distortion.coefficients,
        },
        "throw_min_m": cfg.throw_min_m,
        "throw_max_m": cfg.throw_max_m,
    }
    return str(yaml.safe_dump(data, sort_keys=False))
