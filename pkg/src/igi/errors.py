"""Exception hierarchy shared across the package."""

from __future__ import annotations


class IGIError(Exception):
    """Base class for all package errors."""


class ConfigError(IGIError, ValueError):
    """Invalid configuration value or unknown configuration key."""


class ShapeError(IGIError, ValueError):
    """Array dimensions disagree."""


class InsufficientDataError(IGIError, ValueError):
    """Too few measurements for the requested estimator."""


class FormatError(IGIError, ValueError):
    """Malformed recording, image or config file."""


class DegenerateMaskError(IGIError, ValueError):
    """Mask lacks either foreground or background pixels."""


class FixedPointOverflow(IGIError, ArithmeticError):
    """A fixed-point datapath stage exceeded its declared width.

    ``stage`` is one of ``"input"``, ``"difference"``, ``"product"`` or
    ``"accumulate"``. ``pixel`` is ``(row, col)`` or ``None`` for the scalar
    bucket path, and ``index`` is the 1-based measurement index of the push.
    """

    def __init__(self, stage: str, pixel: tuple[int, int] | None, index: int,
                 value: int, width: int):
        self.stage = stage
        self.pixel = pixel
        self.index = index
        self.value = value
        self.width = width
        where = "bucket" if pixel is None else f"pixel (row={pixel[0]}, col={pixel[1]})"
        super().__init__(
            f"fixed-point overflow at {stage} stage, {where}, measurement {index}: "
            f"value {value} does not fit {width} bits"
        )
