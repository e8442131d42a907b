"""Image-quality metrics, accumulator growth and memory accounting."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMaskError, InsufficientDataError, ShapeError
from .stream import MeasurementStream, Reconstruction

CNR_CAP = 1e6


@dataclass
class QualityReport:
    """Comparison metrics; ``pearson_r`` is ``None`` when either input is flat."""

    pearson_r: float | None
    nrmsd: float
    cnr: float | None = None
    degenerate: bool = False

    CSV_FIELDS = ("pearson_r", "nrmsd", "cnr", "degenerate")

    def as_row(self) -> dict:
        return {
            "pearson_r": _fmt(self.pearson_r),
            "nrmsd": _fmt(self.nrmsd),
            "cnr": _fmt(self.cnr),
            "degenerate": int(self.degenerate),
        }


@dataclass
class GrowthSeries:
    n: list[int] = field(default_factory=list)
    gi_accum_mean: list[float] = field(default_factory=list)
    igi_accum_mean: list[float] = field(default_factory=list)
    gi_bits: list[int] = field(default_factory=list)
    igi_bits: list[int] = field(default_factory=list)

    CSV_FIELDS = ("n", "gi_accum_mean", "igi_accum_mean", "gi_bits", "igi_bits")

    def rows(self):
        for row in zip(self.n, self.gi_accum_mean, self.igi_accum_mean, self.gi_bits, self.igi_bits):
            yield dict(zip(self.CSV_FIELDS, row))

    def __len__(self) -> int:
        return len(self.n)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _values(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=np.float64)


def pearson_r(a, b) -> float | None:
    """Pearson correlation of two images, ``None`` if either has zero variance."""
    a = _values(a).ravel()
    b = _values(b).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"images differ in size: {a.size} vs {b.size}")
    a = a - a.mean()
    b = b - b.mean()
    saa = float(a @ a)
    sbb = float(b @ b)
    if saa == 0.0 or sbb == 0.0:
        return None
    return float(np.clip((a @ b) / math.sqrt(saa * sbb), -1.0, 1.0))


def compare_reconstructions(a: Reconstruction | np.ndarray, b: Reconstruction | np.ndarray) -> QualityReport:
    """Pearson r and NRMSD of the mean-subtracted images.

    NRMSD is the RMS difference divided by the pooled value range of both
    mean-subtracted images, which keeps it symmetric in ``a`` and ``b``.
    """
    va = _values(a)
    vb = _values(b)
    if va.shape != vb.shape:
        raise ShapeError(f"images differ in shape: {va.shape} vs {vb.shape}")
    ca = va - va.mean()
    cb = vb - vb.mean()
    r = pearson_r(ca, cb)
    span = max(ca.max(), cb.max()) - min(ca.min(), cb.min())
    rms = float(np.sqrt(np.mean((ca - cb) ** 2)))
    nrmsd = rms / span if span > 0 else 0.0
    return QualityReport(r, nrmsd, None, r is None)


def contrast_to_noise(recon, mask) -> float:
    """``(mean_fg - mean_bg) / sqrt(var_fg + var_bg)``, capped at +-1e6."""
    values = _values(recon)
    fg = np.asarray(getattr(mask, "transmissivity", mask)) > 0.5
    if values.shape != fg.shape:
        raise ShapeError(f"image {values.shape} and mask {fg.shape} differ")
    if fg.all() or not fg.any():
        raise DegenerateMaskError("mask needs both foreground and background pixels")
    a, b = values[fg], values[~fg]
    contrast = float(a.mean() - b.mean())
    noise = math.sqrt(float(a.var() + b.var()))
    if noise == 0.0 or abs(contrast) >= CNR_CAP * noise:
        return math.copysign(CNR_CAP, contrast) if contrast else 0.0
    return contrast / noise


def reconstruction_quality(recon, mask) -> QualityReport:
    """CNR against the mask plus Pearson r between image and mask."""
    cnr = contrast_to_noise(recon, mask)
    transmissivity = np.asarray(getattr(mask, "transmissivity", mask), dtype=np.float64)
    report = compare_reconstructions(recon, transmissivity)
    report.cnr = cnr
    return report


def bits_needed(value: float) -> int:
    """Unsigned width for ``floor(value)``: ``ceil(log2(floor(value) + 1))``."""
    if value < 0:
        raise ValueError("bits_needed takes a magnitude")
    return int(math.floor(value)).bit_length()


def growth_series(stream: MeasurementStream, sample_points) -> GrowthSeries:
    """Replay ``stream`` tracking both running sums, sampled after the given pushes.

    At sample point n the conventional sum covers ``S_i I_i(x)`` for
    i = 1..n; the differential sum holds the n-1 pairs formed by those
    same n measurements. Both are reduced to a per-pixel mean, the
    differential one as a mean magnitude.
    """
    if len(stream) == 0:
        raise InsufficientDataError("empty stream")
    points = [int(p) for p in sample_points]
    if points != sorted(points) or (points and (points[0] < 1 or points[-1] > len(stream))):
        raise ValueError(f"sample points must be sorted within [1, {len(stream)}]")
    out = GrowthSeries()
    if not points:
        return out
    wanted = set(points)
    acc_si = np.zeros(stream.dims)
    acc_g = np.zeros(stream.dims)
    s_prev = i_prev = None
    for n, (s, frame) in enumerate(stream, start=1):
        if n > points[-1]:
            break
        s = float(s)
        frame = np.asarray(frame, dtype=np.float64)
        acc_si += s * frame
        if i_prev is not None:
            acc_g += (s - s_prev) * (frame - i_prev)
        s_prev, i_prev = s, frame
        if n in wanted:
            gi_mean = float(acc_si.mean())
            igi_mean = float(np.abs(acc_g).mean())
            out.n.append(n)
            out.gi_accum_mean.append(gi_mean)
            out.igi_accum_mean.append(igi_mean)
            out.gi_bits.append(bits_needed(max(gi_mean, 0.0)))
            out.igi_bits.append(bits_needed(igi_mean))
    return out


def memory_report(dims, measurements: int, pixel_bits: int) -> tuple[int, int]:
    """Frame-storage bits for the batch method (all frames) and the streaming one (one frame)."""
    h, w = (int(d) for d in dims)
    if min(h, w, measurements, pixel_bits) < 1:
        raise ValueError("memory_report arguments must be positive")
    frame_bits = h * w * int(pixel_bits)
    return int(measurements) * frame_bits, frame_bits


def write_csv(path: str | os.PathLike, fieldnames, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_growth_csv(path, series: GrowthSeries) -> None:
    rows = ({k: _fmt(v) for k, v in row.items()} for row in series.rows())
    write_csv(path, GrowthSeries.CSV_FIELDS, rows)


def write_quality_csv(path, reports: dict[str, QualityReport]) -> None:
    """One row per labelled report, label first."""
    rows = ({"label": label, **report.as_row()} for label, report in reports.items())
    write_csv(path, ("label",) + QualityReport.CSV_FIELDS, rows)
