"""Binary stream recordings.

Layout (all multi-byte fields little-endian)::

    offset  size  field
    0       4     magic  b"IGIS"
    4       2     version (1)
    6       2     pixel_bits (1..16)
    8       4     width
    12      4     height
    16      8     M (number of records)
    24      8     seed
    32      ...   M records: S as float64, then width*height pixels row-major,
                  one byte each when pixel_bits <= 8, else two bytes

so a file is exactly ``32 + M * (8 + width * height * container_bytes)`` long.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import FormatError
from .stream import MeasurementStream

MAGIC = b"IGIS"
VERSION = 1
_HEADER = struct.Struct("<4sHHIIQQ")
HEADER_SIZE = _HEADER.size


def container_bytes(pixel_bits: int) -> int:
    return 1 if pixel_bits <= 8 else 2


def record_dtype(height: int, width: int, pixel_bits: int) -> np.dtype:
    pixel = np.dtype("u1") if pixel_bits <= 8 else np.dtype("<u2")
    return np.dtype([("s", "<f8"), ("frame", pixel, (height, width))])


def expected_size(height: int, width: int, measurements: int, pixel_bits: int) -> int:
    return HEADER_SIZE + measurements * (8 + height * width * container_bytes(pixel_bits))


class RecordingWriter:
    """Write a recording block by block; the record count is fixed up front."""

    def __init__(self, path: str | os.PathLike, height: int, width: int, measurements: int,
                 pixel_bits: int, seed: int = 0):
        if not 1 <= pixel_bits <= 16:
            raise FormatError(f"pixel_bits must be in [1, 16], got {pixel_bits}")
        self.path = path
        self.height, self.width = int(height), int(width)
        self.measurements = int(measurements)
        self.pixel_bits = int(pixel_bits)
        self._dtype = record_dtype(self.height, self.width, self.pixel_bits)
        self._written = 0
        self._file = open(path, "wb")
        self._file.write(_HEADER.pack(MAGIC, VERSION, self.pixel_bits, self.width, self.height,
                                      self.measurements, int(seed)))

    def write(self, buckets, frames) -> None:
        frames = np.asarray(frames)
        buckets = np.asarray(buckets, dtype=np.float64)
        k = frames.shape[0]
        if frames.shape[1:] != (self.height, self.width) or buckets.shape != (k,):
            raise FormatError("block shape does not match the recording header")
        if self._written + k > self.measurements:
            raise FormatError("more records than declared in the header")
        limit = (1 << self.pixel_bits) - 1
        if frames.size and (frames.min() < 0 or frames.max() > limit):
            raise FormatError(f"pixel values exceed {self.pixel_bits} bits")
        block = np.empty(k, dtype=self._dtype)
        block["s"] = buckets
        block["frame"] = frames
        self._file.write(block.tobytes())
        self._written += k

    def close(self) -> None:
        if self._file.closed:
            return
        self._file.close()
        if self._written != self.measurements:
            raise FormatError(f"wrote {self._written} of {self.measurements} declared records")

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self._file.close()


def write_recording(path, stream: MeasurementStream, pixel_bits: int, seed: int = 0) -> None:
    h, w = stream.dims
    with RecordingWriter(path, h, w, len(stream), pixel_bits, seed) as writer:
        writer.write(stream.buckets, stream.frames)


def read_header(path) -> dict:
    try:
        with open(path, "rb") as f:
            raw = f.read(HEADER_SIZE)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if len(raw) != HEADER_SIZE:
        raise FormatError(f"{path}: truncated header")
    magic, version, pixel_bits, width, height, m, seed = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if not 1 <= pixel_bits <= 16 or width < 1 or height < 1:
        raise FormatError(f"{path}: invalid header fields")
    return {"version": version, "pixel_bits": pixel_bits, "width": width, "height": height,
            "measurements": m, "seed": seed}


def read_recording(path) -> tuple[MeasurementStream, dict]:
    """Memory-map a recording; returns the stream and its header."""
    header = read_header(path)
    h, w, m, bits = header["height"], header["width"], header["measurements"], header["pixel_bits"]
    size = os.path.getsize(path)
    if size != expected_size(h, w, m, bits):
        raise FormatError(f"{path}: {size} bytes, header implies {expected_size(h, w, m, bits)}")
    if m == 0:
        dtype = record_dtype(h, w, bits)
        records = np.empty(0, dtype=dtype)
    else:
        records = np.memmap(path, dtype=record_dtype(h, w, bits), mode="r",
                            offset=HEADER_SIZE, shape=(m,))
    return MeasurementStream(np.array(records["s"]), records["frame"]), header
