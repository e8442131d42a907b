"""Binary portable graymap (P5) reading and writing."""

from __future__ import annotations

import os

import numpy as np

from .errors import FormatError


def write_pgm(path: str | os.PathLike, image: np.ndarray, maxval: int = 255) -> None:
    image = np.asarray(image)
    if image.ndim != 2:
        raise FormatError("PGM images must be 2-D")
    if not 1 <= maxval <= 65535:
        raise FormatError(f"maxval {maxval} out of range")
    h, w = image.shape
    dtype = ">u2" if maxval > 255 else np.uint8
    payload = np.clip(image, 0, maxval).astype(dtype).tobytes()
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        f.write(payload)


def _tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated header integers, skipping comments."""
    values = []
    pos = 2
    while len(values) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FormatError("malformed PGM header")
        values.append(int(data[start:pos]))
    # exactly one whitespace byte separates the header from the raster
    return values, pos + 1


def read_pgm(path: str | os.PathLike) -> tuple[np.ndarray, int]:
    """Return ``(image, maxval)`` for a P5 file."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if data[:2] != b"P5":
        raise FormatError(f"{path} is not a binary PGM (P5) file")
    (w, h, maxval), offset = _tokens(data, 3)
    if w < 1 or h < 1 or not 1 <= maxval <= 65535:
        raise FormatError(f"invalid PGM header in {path}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    need = w * h * dtype.itemsize
    raster = data[offset:offset + need]
    if len(raster) != need:
        raise FormatError(f"{path}: truncated raster ({len(raster)} of {need} bytes)")
    return np.frombuffer(raster, dtype=dtype).reshape(h, w).astype(np.int64), maxval


def to_display(values: np.ndarray, bits: int = 8) -> tuple[np.ndarray, float, float]:
    """Min-max scale ``values`` to ``[0, 2**bits - 1]``; returns ``(codes, vmin, vmax)``."""
    values = np.asarray(values, dtype=np.float64)
    vmin = float(values.min())
    vmax = float(values.max())
    top = (1 << bits) - 1
    if vmax > vmin:
        codes = np.floor((values - vmin) * (top / (vmax - vmin)) + 0.5)
    else:
        codes = np.zeros_like(values)
    return codes.astype(np.int64), vmin, vmax
