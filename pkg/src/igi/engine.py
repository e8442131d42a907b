"""One-pass, constant-memory differential correlation engine.

The engine mirrors a three-register datapath: ``r_s`` holds the previous
bucket value, ``r_i`` the previous reference frame and ``r_g`` the running
per-pixel sum of differential products. Each push reads the old registers,
adds one product term into ``r_g`` and overwrites ``r_s``/``r_i`` with the
new sample. Nothing else is kept, so the state size depends on the frame
dimensions and register widths only.

Two arithmetic modes are available. ``"float64"`` accumulates in double
precision. A :class:`FixedPointConfig` switches to exact integer arithmetic
in which every stage (input, difference, product, accumulate) is checked
against a declared two's-complement width, emulating the on-chip datapath.

Instances are single-writer: callers must serialise :meth:`push` and
:meth:`snapshot` on one engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FixedPointOverflow, ShapeError
from .stream import Algorithm, MeasurementStream, Reconstruction

FLOAT64 = "float64"
FLOAT_BITS = 64
COUNTER_BITS = 64

ENGINE_ALGORITHMS = (Algorithm.IGI, Algorithm.IGI_S, Algorithm.IGI_I, Algorithm.HBT_IGI)

# which of R_S / R_I each update rule reads
_USES_RS = {Algorithm.IGI: True, Algorithm.IGI_S: True, Algorithm.IGI_I: False, Algorithm.HBT_IGI: True}
_USES_RI = {Algorithm.IGI: True, Algorithm.IGI_S: False, Algorithm.IGI_I: True, Algorithm.HBT_IGI: True}

OVERFLOW_POLICIES = ("error", "saturate")


@dataclass(frozen=True)
class FixedPointConfig:
    """Register widths for the integer datapath.

    ``s_bits`` and ``i_bits`` are unsigned input widths of the bucket and
    reference pixels; differences are carried one bit wider, signed. The
    product stage defaults to full precision (``s_bits + i_bits + 2``);
    ``p_bits`` narrows it. ``g_bits`` is the signed accumulator width.
    """

    s_bits: int = 40
    i_bits: int = 8
    g_bits: int = 32
    overflow_policy: str = "error"
    p_bits: int | None = None

    def __post_init__(self):
        for name in ("s_bits", "i_bits", "g_bits"):
            value = getattr(self, name)
            if not 2 <= int(value) <= 64:
                raise ConfigError(f"{name} must be in [2, 64], got {value}")
        if self.p_bits is not None and not 2 <= int(self.p_bits) <= 130:
            raise ConfigError(f"p_bits must be in [2, 130], got {self.p_bits}")
        if self.overflow_policy not in OVERFLOW_POLICIES:
            raise ConfigError(f"overflow_policy must be one of {OVERFLOW_POLICIES}, "
                              f"got {self.overflow_policy!r}")

    @property
    def product_bits(self) -> int:
        return self.p_bits if self.p_bits is not None else self.s_bits + self.i_bits + 2

    @property
    def fits_int64(self) -> bool:
        # every intermediate (and acc + product before the range check) stays inside int64
        return self.s_bits + self.i_bits + 2 <= 62 and self.product_bits <= 62 and self.g_bits <= 62


@dataclass
class Snapshot:
    image: Reconstruction
    n_pairs: int
    overflow_count: int = 0


def _signed_range(width: int) -> tuple[int, int]:
    return -(1 << (width - 1)), (1 << (width - 1)) - 1


class StreamingEngine:
    """Register-level differential correlator for IGI, its variants and HBT-IGI.

    ``dims`` is ``(height, width)``; ``mode`` is ``"float64"`` or a
    :class:`FixedPointConfig`. For ``hbt_igi`` the bucket argument of
    :meth:`push` carries the fixed test pixel ``I_k(x_t0)``.
    """

    __slots__ = ("dims", "algorithm", "fixed", "r_s", "r_i", "r_g",
                 "n_pairs", "overflow_count", "_loaded", "_dtype")

    def __init__(self, dims, algorithm: Algorithm | str = Algorithm.IGI, mode=FLOAT64):
        h, w = (int(d) for d in dims)
        if h < 1 or w < 1:
            raise ConfigError(f"invalid engine dims {dims}")
        algorithm = Algorithm.parse(algorithm)
        if algorithm not in ENGINE_ALGORITHMS:
            raise ConfigError(f"the streaming engine does not run {algorithm.value}")
        if isinstance(mode, str):
            if mode != FLOAT64:
                raise ConfigError(f"unknown engine mode {mode!r}")
            mode = None
        elif not isinstance(mode, FixedPointConfig):
            raise ConfigError(f"unknown engine mode {mode!r}")
        self.dims = (h, w)
        self.algorithm = algorithm
        self.fixed = mode
        if mode is None:
            self._dtype = np.float64
        else:
            self._dtype = np.int64 if mode.fits_int64 else object
        self.r_s = None
        self.r_i = None
        self.r_g = np.zeros(self.dims, dtype=self._dtype)
        if self._dtype is object:
            self.r_g[...] = 0
        self.n_pairs = 0
        self.overflow_count = 0
        self._loaded = False

    @property
    def mode(self):
        return FLOAT64 if self.fixed is None else self.fixed

    @property
    def measurements(self) -> int:
        return self.n_pairs + 1 if self._loaded else 0

    @property
    def divisor(self) -> int:
        factor = 2 if self.algorithm in (Algorithm.IGI, Algorithm.HBT_IGI) else 1
        return factor * self.n_pairs

    # fixed-point stage checks

    def _check(self, stage: str, value, lo: int, hi: int, index: int, scalar: bool):
        if scalar:
            if lo <= value <= hi:
                return value
            if self.fixed.overflow_policy == "error":
                raise FixedPointOverflow(stage, None, index, int(value), _width_of(lo, hi))
            self.overflow_count += 1
            return min(max(value, lo), hi)
        bad = (value < lo) | (value > hi)
        if not bad.any():
            return value
        if self.fixed.overflow_policy == "error":
            flat = int(np.flatnonzero(bad)[0])
            pixel = tuple(int(v) for v in np.unravel_index(flat, self.dims))
            raise FixedPointOverflow(stage, pixel, index, int(value.reshape(-1)[flat]),
                                     _width_of(lo, hi))
        self.overflow_count += int(np.count_nonzero(bad))
        return np.minimum(np.maximum(value, lo), hi)

    def _fixed_inputs(self, s, frame: np.ndarray, index: int):
        cfg = self.fixed
        s_value = float(s) if not isinstance(s, (int, np.integer)) else int(s)
        if isinstance(s_value, float):
            if not s_value.is_integer():
                raise ConfigError(f"fixed-point bucket value {s!r} is not an integer")
            s_value = int(s_value)
        s_value = self._check("input", s_value, 0, (1 << cfg.s_bits) - 1, index, True)
        if frame.dtype.kind == "f":
            if not np.all(np.floor(frame) == frame):
                raise ConfigError("fixed-point reference frame has non-integer pixels")
        elif frame.dtype.kind not in "iuO":
            raise ConfigError(f"unsupported frame dtype {frame.dtype}")
        if self._dtype is object:
            pixels = np.empty(self.dims, dtype=object)
            pixels[...] = [[int(v) for v in row] for row in frame.tolist()]
        else:
            pixels = frame.astype(np.int64)
        pixels = self._check("input", pixels, 0, (1 << cfg.i_bits) - 1, index, False)
        return s_value, pixels

    def push(self, s, frame) -> "StreamingEngine":
        """Absorb measurement ``(S_k, I_k)``; the first push only loads registers."""
        frame = np.asarray(getattr(frame, "intensities", frame))
        if frame.shape != self.dims:
            raise ShapeError(f"frame {frame.shape} does not match engine dims {self.dims}")
        index = self.measurements + 1
        if self.fixed is None:
            s_new, i_new = float(s), frame.astype(np.float64, copy=False)
            if self._loaded:
                self.r_g += self._float_term(s_new, i_new)
        else:
            s_new, i_new = self._fixed_inputs(s, frame, index)
            if self._loaded:
                self.r_g = self._fixed_accumulate(s_new, i_new, index)
        self._store(s_new, i_new)
        return self

    def _float_term(self, s, frame):
        algo = self.algorithm
        if algo is Algorithm.IGI_S:
            return (s - self.r_s) * frame
        if algo is Algorithm.IGI_I:
            return s * (frame - self.r_i)
        term = frame - self.r_i
        term *= s - self.r_s
        return term

    def _fixed_accumulate(self, s, pixels, index):
        cfg = self.fixed
        algo = self.algorithm
        d_lo, d_hi = _signed_range(cfg.s_bits + 1)
        if _USES_RS[algo]:
            ds = self._check("difference", s - self.r_s, d_lo, d_hi, index, True)
        if _USES_RI[algo]:
            lo, hi = _signed_range(cfg.i_bits + 1)
            di = self._check("difference", pixels - self.r_i, lo, hi, index, False)
        if algo is Algorithm.IGI_S:
            product = ds * pixels
        elif algo is Algorithm.IGI_I:
            product = s * di
        else:
            product = ds * di
        lo, hi = _signed_range(cfg.product_bits)
        product = self._check("product", product, lo, hi, index, False)
        lo, hi = _signed_range(cfg.g_bits)
        return self._check("accumulate", self.r_g + product, lo, hi, index, False)

    def _store(self, s, frame):
        if _USES_RS[self.algorithm]:
            self.r_s = s
        if _USES_RI[self.algorithm]:
            if self.r_i is None:
                self.r_i = np.array(frame, dtype=self._dtype, copy=True)
            else:
                self.r_i[...] = frame
        if self._loaded:
            self.n_pairs += 1
        self._loaded = True

    def accumulator(self) -> np.ndarray:
        """Copy of the raw ``r_g`` register (integer in fixed-point mode)."""
        return self.r_g.copy()

    def snapshot(self) -> Snapshot:
        """Current estimate ``r_g / divisor``; all zeros before the first pair."""
        if self.n_pairs == 0:
            values = np.zeros(self.dims)
        else:
            values = self.r_g.astype(np.float64) / self.divisor
        rec = Reconstruction(values, self.algorithm, self.n_pairs, float(self.divisor),
                             {"mode": "float64" if self.fixed is None else "fixed"})
        return Snapshot(rec, self.n_pairs, self.overflow_count)

    def register_bits(self) -> dict[str, int]:
        """Bit budget of each register; independent of how many samples were pushed."""
        h, w = self.dims
        pixels = h * w
        if self.fixed is None:
            s_bits = i_bits = g_bits = FLOAT_BITS
        else:
            s_bits, i_bits, g_bits = self.fixed.s_bits, self.fixed.i_bits, self.fixed.g_bits
        return {
            "R_S": s_bits if _USES_RS[self.algorithm] else 0,
            "R_I": pixels * i_bits if _USES_RI[self.algorithm] else 0,
            "R_G": pixels * g_bits,
            "counter": COUNTER_BITS,
        }

    def memory_footprint(self) -> int:
        return sum(self.register_bits().values())


def _width_of(lo: int, hi: int) -> int:
    return (hi - lo + 1).bit_length() - 1


def engine_run(stream: MeasurementStream, algorithm: Algorithm | str = Algorithm.IGI,
               mode=FLOAT64, snapshot_every: int = 125):
    """Feed ``stream`` through a fresh engine.

    Returns ``(final, intermediates)``: a snapshot after every
    ``snapshot_every``-th push, and the state after the last push.
    """
    if snapshot_every < 1:
        raise ConfigError(f"snapshot_every must be >= 1, got {snapshot_every}")
    engine = StreamingEngine(stream.dims, algorithm, mode)
    intermediates = []
    for k, (s, frame) in enumerate(stream, start=1):
        engine.push(s, frame)
        if k % snapshot_every == 0:
            intermediates.append(engine.snapshot())
    return engine.snapshot(), intermediates
