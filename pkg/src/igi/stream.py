"""Measurement streams and reconstructions shared by the oracles and the engine."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, ShapeError


class Algorithm(str, enum.Enum):
    GI = "gi"
    IGI = "igi"
    IGI_S = "igi_s"
    IGI_I = "igi_i"
    IGI_S_NEG = "igi_s_neg"
    IGI_I_NEG = "igi_i_neg"
    HBT = "hbt"
    HBT_IGI = "hbt_igi"

    @classmethod
    def parse(cls, name: "str | Algorithm") -> "Algorithm":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown algorithm {name!r}") from None


@dataclass(frozen=True)
class MeasurementStream:
    """Ordered measurements: ``buckets[n]`` is S_{n+1}, ``frames[n]`` is I_{n+1}(x).

    ``frames`` may be any real or unsigned integer dtype (quantised readouts
    stay compact); consumers convert to float64 chunk by chunk.
    """

    buckets: np.ndarray
    frames: np.ndarray

    def __post_init__(self):
        if self.frames.ndim != 3:
            raise ShapeError("frames must have shape (M, H, W)")
        if self.buckets.shape != (self.frames.shape[0],):
            raise ShapeError(
                f"{self.buckets.shape[0] if self.buckets.ndim else 0} bucket values "
                f"for {self.frames.shape[0]} frames"
            )

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dims(self) -> tuple[int, int]:
        return tuple(self.frames.shape[1:])

    def prefix(self, m: int) -> "MeasurementStream":
        return MeasurementStream(self.buckets[:m], self.frames[:m])

    def __iter__(self):
        for s, frame in zip(self.buckets, self.frames):
            yield s, frame

    def require(self, minimum: int = 2) -> None:
        if len(self) < minimum:
            raise InsufficientDataError(f"need at least {minimum} measurements, got {len(self)}")

    @classmethod
    def from_records(cls, records) -> "MeasurementStream":
        records = list(records)
        if not records:
            raise InsufficientDataError("empty stream")
        buckets = np.array([float(s) for s, _ in records])
        frames = np.stack([np.asarray(getattr(f, "intensities", f)) for _, f in records])
        return cls(buckets, frames)


def hbt_stream(frames_test: np.ndarray, frames_ref: np.ndarray,
               x_t0: tuple[int, int]) -> MeasurementStream:
    """Stream whose bucket slot carries the fixed test pixel ``I_n(x_t0)``.

    ``x_t0`` is ``(row, col)``.
    """
    frames_test = np.asarray(frames_test)
    frames_ref = np.asarray(frames_ref)
    if frames_test.shape[0] != frames_ref.shape[0]:
        raise ShapeError(
            f"test and reference sequences differ in length "
            f"({frames_test.shape[0]} vs {frames_ref.shape[0]})"
        )
    row, col = x_t0
    h, w = frames_test.shape[1:]
    if not (0 <= row < h and 0 <= col < w):
        raise ShapeError(f"x_t0 {x_t0} outside the {w}x{h} test grid")
    return MeasurementStream(frames_test[:, row, col].astype(np.float64), frames_ref)


@dataclass
class Reconstruction:
    """Image estimate with the divisor applied to its raw sum."""

    values: np.ndarray
    algorithm: Algorithm
    n_used: int
    divisor: float
    meta: dict = field(default_factory=dict)

    @property
    def dims(self) -> tuple[int, int]:
        return self.values.shape
