"""Object masks: built-in glyphs, rectangles, disks and thresholded PGM files.

Mask specs are short strings::

    glyph:TH              centred text, scaled to fill most of the frame
    rect:ROW0,COL0,ROW1,COL1   half-open box [ROW0, ROW1) x [COL0, COL1)
    disk:ROW,COL,RADIUS   pixels within RADIUS of (ROW, COL)
    full / empty          all ones / all zeros
    file:PATH             P5 graymap, foreground where value >= maxval / 2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .pgm import read_pgm

# 5x7 bitmap font
_FONT = {
    "A": ["01110", "10001", "10001", "11111", "10001", "10001", "10001"],
    "C": ["01110", "10001", "10000", "10000", "10000", "10001", "01110"],
    "E": ["11111", "10000", "10000", "11110", "10000", "10000", "11111"],
    "G": ["01110", "10001", "10000", "10111", "10001", "10001", "01111"],
    "H": ["10001", "10001", "10001", "11111", "10001", "10001", "10001"],
    "I": ["11111", "00100", "00100", "00100", "00100", "00100", "11111"],
    "L": ["10000", "10000", "10000", "10000", "10000", "10000", "11111"],
    "O": ["01110", "10001", "10001", "10001", "10001", "10001", "01110"],
    "S": ["01111", "10000", "10000", "01110", "00001", "00001", "11110"],
    "T": ["11111", "00100", "00100", "00100", "00100", "00100", "00100"],
    "U": ["10001", "10001", "10001", "10001", "10001", "10001", "01110"],
    "X": ["10001", "10001", "01010", "00100", "01010", "10001", "10001"],
    " ": ["00000"] * 7,
}


@dataclass(frozen=True)
class ObjectMask:
    transmissivity: np.ndarray
    name: str = ""

    def __post_init__(self):
        t = self.transmissivity
        if t.ndim != 2:
            raise ShapeError("mask must be a 2-D grid")
        if t.size and (t.min() < 0 or t.max() > 1):
            raise ConfigError("transmissivity values must lie in [0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.transmissivity.shape

    @property
    def foreground_fraction(self) -> float:
        return float(np.mean(self.transmissivity > 0.5))


def glyph_bitmap(text: str) -> np.ndarray:
    """Unscaled bitmap of ``text``: 7 rows, 6 columns per character minus one."""
    rows = []
    try:
        glyphs = [_FONT[ch] for ch in text.upper()]
    except KeyError as exc:
        raise ConfigError(f"no glyph for character {exc.args[0]!r}") from None
    if not glyphs:
        raise ConfigError("glyph text is empty")
    for r in range(7):
        rows.append("0".join(g[r] for g in glyphs))
    return np.array([[c == "1" for c in row] for row in rows], dtype=bool)


def glyph_mask(text: str, height: int, width: int, fill: float = 0.8) -> ObjectMask:
    bitmap = glyph_bitmap(text)
    bh, bw = bitmap.shape
    scale = max(1, int(min(fill * height / bh, fill * width / bw)))
    if bh * scale > height or bw * scale > width:
        raise ConfigError(f"glyph {text!r} does not fit in {width}x{height}")
    big = np.kron(bitmap, np.ones((scale, scale), dtype=bool))
    out = np.zeros((height, width))
    r0 = (height - big.shape[0]) // 2
    c0 = (width - big.shape[1]) // 2
    out[r0:r0 + big.shape[0], c0:c0 + big.shape[1]] = big
    return ObjectMask(out, f"glyph:{text}")


def rect_mask(height: int, width: int, row0: int, col0: int, row1: int, col1: int) -> ObjectMask:
    out = np.zeros((height, width))
    out[max(row0, 0):max(row1, 0), max(col0, 0):max(col1, 0)] = 1.0
    return ObjectMask(out, f"rect:{row0},{col0},{row1},{col1}")


def disk_mask(height: int, width: int, row: float, col: float, radius: float) -> ObjectMask:
    rr, cc = np.mgrid[0:height, 0:width]
    out = ((rr - row) ** 2 + (cc - col) ** 2 <= radius * radius).astype(np.float64)
    return ObjectMask(out, f"disk:{row},{col},{radius}")


def file_mask(path: str, height: int | None = None, width: int | None = None) -> ObjectMask:
    image, maxval = read_pgm(path)
    if height is not None and image.shape != (height, width):
        raise ShapeError(f"mask file {path} is {image.shape[1]}x{image.shape[0]}, "
                         f"expected {width}x{height}")
    return ObjectMask((image >= 0.5 * maxval).astype(np.float64), f"file:{path}")


def _numbers(body: str, count: int, spec: str) -> list[float]:
    parts = body.split(",")
    if len(parts) != count:
        raise ConfigError(f"mask spec {spec!r} needs {count} comma-separated numbers")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"mask spec {spec!r} has a non-numeric field") from None


def make_object_mask(spec: str, height: int, width: int) -> ObjectMask:
    """Build a binary mask from a spec string (see module docstring)."""
    kind, _, body = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "glyph":
        return glyph_mask(body, height, width)
    if kind == "rect":
        r0, c0, r1, c1 = (int(v) for v in _numbers(body, 4, spec))
        return rect_mask(height, width, r0, c0, r1, c1)
    if kind == "disk":
        r, c, radius = _numbers(body, 3, spec)
        return disk_mask(height, width, r, c, radius)
    if kind == "full":
        return ObjectMask(np.ones((height, width)), "full")
    if kind == "empty":
        return ObjectMask(np.zeros((height, width)), "empty")
    if kind == "file":
        return file_mask(body, height, width)
    raise ConfigError(f"unknown mask spec {spec!r}")
