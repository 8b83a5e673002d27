"""Constants for the path projection package."""

from __future__ import annotations

DOMAIN = "path_projection"

# Frames
DEFAULT_WORLD_FRAME = "map"
DEFAULT_BASE_FRAME = "base_link"
DEFAULT_LENS_FRAME = "projector_lens"

# Resampling
DEFAULT_ARROW_SPACING_M = 0.5
DEFAULT_DESTINATION_DIAMETER_M = 0.3

# Arrow shaft and head share one length
DEFAULT_SHAFT_LENGTH_M = 0.2
DEFAULT_HEAD_LENGTH_M = DEFAULT_SHAFT_LENGTH_M
DEFAULT_SHAFT_DIAMETER_M = 0.1
DEFAULT_HEAD_DIAMETER_M = 0.2

DEFAULT_ARROW_COLOR = (128, 0, 128)
DEFAULT_DESTINATION_COLOR = (0, 160, 0)
DEFAULT_PATH_LINE_COLOR = (0, 0, 160)
DEFAULT_PATH_LINE_WIDTH_M = 0.03
DEFAULT_BACKGROUND = (0, 0, 0)

DEFAULT_DISK_SEGMENTS = 64
MIN_DISK_SEGMENTS = 8

# Distance compensation clamp, as fractions of the base dimensions
SCALE_CLAMP_MIN = 0.25
SCALE_CLAMP_MAX = 1.0
DEFAULT_REFERENCE_DISTANCE_M = 1.2

# ViewSonic PA503W rated throw distance
DEFAULT_THROW_MIN_M = 0.99
DEFAULT_THROW_MAX_M = 10.98

# Numerics
QUATERNION_NORM_TOLERANCE = 1e-6
MIN_LENS_DEPTH = 1e-9
UNDISTORT_TOLERANCE = 1e-10
UNDISTORT_MAX_ITERATIONS = 50

# Distortion models
DISTORTION_NONE = "none"
DISTORTION_RADTAN = "radtan"
DISTORTION_ALIASES = {"plumb_bob": DISTORTION_RADTAN}

# Output
FORMAT_PNG = "png"
FORMAT_PPM = "ppm"
IMAGE_FORMATS = (FORMAT_PNG, FORMAT_PPM)
FRAME_NAME_TEMPLATE = "frame_{index:06d}.{ext}"
DEFAULT_RENDER_OUT = "frame.png"

# Serving
DEFAULT_LISTEN = "127.0.0.1:7777"
MAX_RECORD_BYTES = 16 * 1024 * 1024

# Configuration keys
CONF_PROJECTOR = "projector"
CONF_TRANSFORMS = "transforms"
CONF_STYLE = "style"
CONF_SPACING = "spacing"
CONF_CIRCLE_DIAMETER = "circle_diameter"
CONF_OUT = "out"
CONF_FORMAT = "format"
CONF_LISTEN = "listen"
CONF_HTTP = "http"
CONF_WORLD_FRAME = "world_frame"
CONF_BASE_FRAME = "base_frame"
CONF_LENS_FRAME = "lens_frame"
CONF_LOGGER = "logger"

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
