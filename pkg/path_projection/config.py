"""Shared configuration helpers.

Every configuration file is YAML checked against a voluptuous schema. The
helpers here turn YAML and schema failures into ``ConfigParseError`` with the
dotted path of the offending field.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Callable

import voluptuous as vol
import yaml

from .const import DOMAIN
from .exceptions import ConfigParseError

_LOGGER = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"

LOG_LEVELS = {
    "critical": logging.CRITICAL,
    "fatal": logging.FATAL,
    "error": logging.ERROR,
    "warning": logging.WARNING,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
    "notset": logging.NOTSET,
}


def finite_float(value: Any) -> float:
    """Coerce a value to a finite float."""
    if isinstance(value, bool):
        raise vol.Invalid("expected a number")
    try:
        number = float(value)
    except (TypeError, ValueError) as err:
        raise vol.Invalid("expected a number") from err
    if not math.isfinite(number):
        raise vol.Invalid("value must be finite")
    return number


def positive_float(value: Any) -> float:
    """Coerce a value to a strictly positive finite float."""
    number = finite_float(value)
    if number <= 0:
        raise vol.Invalid("value must be greater than zero")
    return number


def non_negative_float(value: Any) -> float:
    """Coerce a value to a finite float that is zero or more."""
    number = finite_float(value)
    if number < 0:
        raise vol.Invalid("value must not be negative")
    return number


def rgb_color(value: Any) -> tuple[int, int, int]:
    """Validate an ``[r, g, b]`` triple with 8-bit channels."""
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise vol.Invalid("expected three channel values")
    channels = []
    for channel in value:
        if isinstance(channel, bool) or not isinstance(channel, int):
            raise vol.Invalid("channels must be integers")
        if not 0 <= channel <= 255:
            raise vol.Invalid("channels must be within 0-255")
        channels.append(channel)
    return (channels[0], channels[1], channels[2])


def number_list(length: int) -> Callable[[Any], list[float]]:
    """Build a validator for a list of exactly ``length`` finite numbers."""

    def _validate(value: Any) -> list[float]:
        if not isinstance(value, (list, tuple)):
            raise vol.Invalid("expected a list of numbers")
        if len(value) != length:
            raise vol.Invalid(f"expected {length} numbers, got {len(value)}")
        return [finite_float(item) for item in value]

    return _validate


def parse_yaml(text: str, source: str = "<string>") -> Any:
    """Parse YAML text, raising ``ConfigParseError`` on syntax errors."""
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigParseError("", f"invalid YAML in {source}: {err}") from err


def read_text(path: str | Path) -> str:
    """Read a configuration file."""
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigParseError("", f"cannot read {path}: {err}") from err


def validate(schema: vol.Schema, data: Any) -> Any:
    """Run a schema, converting voluptuous errors into ``ConfigParseError``."""
    try:
        return schema(data)
    except vol.MultipleInvalid as err:
        first = err.errors[0]
        raise ConfigParseError(_format_path(first.path), first.msg) from err
    except vol.Invalid as err:
        raise ConfigParseError(_format_path(err.path), err.msg) from err


def _format_path(path: list[Any]) -> str:
    return ".".join(str(part) for part in path)


LOGGER_SCHEMA = vol.Schema(
    {
        vol.Optional("default", default="info"): vol.All(
            str, vol.Lower, vol.In(LOG_LEVELS)
        ),
        vol.Optional("logs", default={}): {
            str: vol.All(str, vol.Lower, vol.In(LOG_LEVELS))
        },
    }
)


def setup_logging(
    logger_config: dict[str, Any] | None, verbose: bool = False
) -> None:
    """Configure logging from a ``logger:`` configuration section.

    The section holds a ``default`` level for the root logger and a ``logs``
    mapping from logger names to levels. Levels are case-insensitive names
    such as ``debug`` or ``warning``.
    """
    config = validate(LOGGER_SCHEMA, logger_config or {})
    logging.basicConfig(format=LOG_FORMAT, level=LOG_LEVELS[config["default"]])
    logging.getLogger().setLevel(LOG_LEVELS[config["default"]])
    for name, level in config["logs"].items():
        logging.getLogger(name).setLevel(LOG_LEVELS[level])
    if verbose:
        logging.getLogger(DOMAIN).setLevel(logging.DEBUG)
    _LOGGER.debug("Logging configured: %s", config)
