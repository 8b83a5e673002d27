"""Exceptions raised by the path projection package."""

from __future__ import annotations


class PathProjectionError(Exception):
    """Base exception for path projection errors."""


class InvalidValueError(PathProjectionError):
    """A numeric input is non-finite or otherwise unusable."""


class ParameterError(PathProjectionError):
    """A parameter is outside its valid range."""


class FrameChainError(PathProjectionError):
    """Two transforms do not share the frame needed to chain them."""


class TransformLookupError(PathProjectionError):
    """No chain of transforms connects two frames."""

    def __init__(self, from_frame: str, to_frame: str, reason: str = "") -> None:
        """Initialize the error with the two frames that could not be joined."""
        message = f"Cannot look up transform from '{from_frame}' to '{to_frame}'"
        if reason:
            message = f"{message}: {reason}"
        super().__init__(message)
        self.from_frame = from_frame
        self.to_frame = to_frame


class BehindLensError(PathProjectionError):
    """A point lies on or behind the projector lens plane."""


class NoGroundIntersectionError(PathProjectionError):
    """A pixel ray never descends to the ground plane."""


class FootprintUndefinedError(PathProjectionError):
    """At least one image corner does not land on the ground."""


class ConfigParseError(PathProjectionError):
    """A configuration file could not be parsed or validated."""

    def __init__(self, field: str, message: str) -> None:
        """Initialize the error.

        Args:
            field: Dotted path of the offending field, empty for the whole file
            message: Human readable reason
        """
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class PathParseError(PathProjectionError):
    """A navigation path record could not be parsed."""

    def __init__(self, message: str, position: str = "") -> None:
        """Initialize the error with optional position information."""
        super().__init__(f"{message} (at {position})" if position else message)
        self.position = position


class ServerStartupError(PathProjectionError):
    """The ingestion server could not bind its endpoint."""
