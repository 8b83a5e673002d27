"""Deterministic software rasterizer for the projector framebuffer.

``fill_polygon`` works in raster coordinates whose origin is the top-left
corner of the image, so the center of pixel ``(i, j)`` sits at
``(i + 0.5, j + 0.5)``. Projected pixel coordinates put pixel centers on
integers and are shifted by half a pixel before filling.
"""

from __future__ import annotations

import io
import logging
import math
from pathlib import Path

import numpy as np
from attrs import define, field, frozen
from numpy.typing import ArrayLike, NDArray
from PIL import Image

from .const import (DEFAULT_BACKGROUND, FORMAT_PNG, FORMAT_PPM,
                    FRAME_NAME_TEMPLATE, IMAGE_FORMATS)
from .exceptions import BehindLensError, ParameterError
from .geometry import RigidTransform
from .markers import RGB, MarkerSpec
from .projector import ProjectorConfig, project_points

_LOGGER = logging.getLogger(__name__)


@define(eq=False)
class Framebuffer:
    """Row-major RGB image, 8 bits per channel, shaped ``(height, width, 3)``."""

    width_px: int
    height_px: int
    pixels: NDArray[np.uint8] = field()

    @pixels.default
    def _blank(self) -> NDArray[np.uint8]:
        return np.zeros((self.height_px, self.width_px, 3), dtype=np.uint8)

    def __attrs_post_init__(self) -> None:
        """Check the buffer shape against the declared size."""
        if self.pixels.shape != (self.height_px, self.width_px, 3):
            raise ParameterError(
                f"Pixel buffer shape {self.pixels.shape} does not match "
                f"{self.width_px}x{self.height_px}"
            )
        if self.pixels.dtype != np.uint8:
            raise ParameterError("Pixel buffer must be uint8")

    @classmethod
    def filled(cls, width_px: int, height_px: int, color: RGB) -> Framebuffer:
        """Allocate a frame painted with one color."""
        fb = cls(width_px, height_px)
        fb.pixels[:, :] = color
        return fb

    def pixel(self, u: int, v: int) -> RGB:
        """Color of the pixel in column ``u``, row ``v``."""
        r, g, b = (int(c) for c in self.pixels[v, u])
        return (r, g, b)

    def same_pixels(self, other: Framebuffer) -> bool:
        """True if both frames hold identical pixels."""
        return bool(np.array_equal(self.pixels, other.pixels))


@frozen
class Scene:
    """Markers in paint order plus the robot pose they are seen from."""

    markers: tuple[MarkerSpec, ...] = field(converter=tuple)
    robot_pose: RigidTransform
    background: RGB = DEFAULT_BACKGROUND


def fill_polygon(
    fb: Framebuffer, vertices: ArrayLike, color: RGB
) -> Framebuffer:
    """Paint a polygon with the even-odd rule, overwriting earlier colors.

    A pixel is painted when its center is inside. Centers exactly on an edge
    follow the top-left rule, so polygons sharing an edge never double-paint
    or leave a gap. Fewer than three vertices is a no-op.
    """
    points = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    if len(points) < 3:
        return fb

    x0, y0 = points[:, 0], points[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    keep = y0 != y1
    # orient every edge downward so shared edges interpolate identically
    swap = y0 > y1
    ex0 = np.where(swap, x1, x0)[keep]
    ey0 = np.where(swap, y1, y0)[keep]
    ex1 = np.where(swap, x0, x1)[keep]
    ey1 = np.where(swap, y0, y1)[keep]
    if ex0.size == 0:
        return fb

    first_row = max(0, math.ceil(float(ey0.min()) - 0.5))
    last_row = min(fb.height_px, math.ceil(float(ey1.max()) - 0.5))
    for row in range(first_row, last_row):
        center_y = row + 0.5
        active = (ey0 <= center_y) & (center_y < ey1)
        if not np.any(active):
            continue
        t = (center_y - ey0[active]) / (ey1[active] - ey0[active])
        crossings = np.sort(ex0[active] + t * (ex1[active] - ex0[active]))
        for left, right in zip(crossings[0::2], crossings[1::2]):
            start = max(0, math.ceil(float(left) - 0.5))
            stop = min(fb.width_px, math.ceil(float(right) - 0.5))
            if start < stop:
                fb.pixels[row, start:stop] = color
    return fb


def _raster_polygons(
    marker: MarkerSpec, cfg: ProjectorConfig, robot_pose: RigidTransform
) -> list[NDArray[np.float64]] | None:
    """Project a marker's polygons into raster coordinates.

    Returns None when any vertex lies behind the lens.
    """
    rasters = []
    for polygon in marker.polygons():
        world = np.array([[p.x, p.y, p.z] for p in polygon.vertices])
        try:
            pixels = project_points(cfg, robot_pose, world)
        except BehindLensError:
            _LOGGER.debug("Skipping %s marker behind the lens", marker.kind.value)
            return None
        rasters.append(pixels + 0.5)
    return rasters


def render_frame(scene: Scene, cfg: ProjectorConfig) -> Framebuffer:
    """Render a scene into the image the projector displays.

    Markers are painted in list order. A marker with any vertex behind the
    lens is skipped whole.
    """
    intr = cfg.intrinsics
    fb = Framebuffer.filled(intr.width_px, intr.height_px, scene.background)
    painted = 0
    for marker in scene.markers:
        rasters = _raster_polygons(marker, cfg, scene.robot_pose)
        if rasters is None:
            continue
        for raster in rasters:
            fill_polygon(fb, raster, marker.color)
        painted += 1
    _LOGGER.debug("Rendered %d of %d markers", painted, len(scene.markers))
    return fb


def encode_image(fb: Framebuffer, fmt: str = FORMAT_PNG) -> bytes:
    """Encode a frame as PNG or binary PPM (P6, maxval 255).

    Raises:
        ParameterError: If the format is unknown
    """
    if fmt == FORMAT_PPM:
        header = f"P6\n{fb.width_px} {fb.height_px}\n255\n".encode("ascii")
        return header + np.ascontiguousarray(fb.pixels).tobytes()
    if fmt == FORMAT_PNG:
        buffer = io.BytesIO()
        Image.fromarray(np.ascontiguousarray(fb.pixels)).save(buffer, format="PNG")
        return buffer.getvalue()
    raise ParameterError(
        f"Unknown image format '{fmt}', expected one of {IMAGE_FORMATS}"
    )


def decode_image(data: bytes) -> Framebuffer:
    """Decode PNG or PPM bytes into a frame."""
    with Image.open(io.BytesIO(data)) as image:
        pixels = np.array(image.convert("RGB"), dtype=np.uint8)
    height, width = pixels.shape[:2]
    return Framebuffer(width, height, pixels)


def write_image(fb: Framebuffer, path: str | Path, fmt: str = FORMAT_PNG) -> Path:
    """Encode a frame and write it to ``path``."""
    target = Path(path)
    target.write_bytes(encode_image(fb, fmt))
    _LOGGER.info("Wrote frame %s", target)
    return target


class FrameSequenceWriter:
    """Write frames to a directory as ``frame_000001.png``, ``frame_000002.png``..."""

    def __init__(self, directory: str | Path, fmt: str = FORMAT_PNG) -> None:
        """Initialize the writer, creating the directory if needed."""
        if fmt not in IMAGE_FORMATS:
            raise ParameterError(f"Unknown image format '{fmt}'")
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.fmt = fmt
        self.count = 0

    def write(self, fb: Framebuffer) -> Path:
        """Write the next frame in the sequence."""
        self.count += 1
        name = FRAME_NAME_TEMPLATE.format(index=self.count, ext=self.fmt)
        return write_image(fb, self.directory / name, self.fmt)
