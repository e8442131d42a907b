"""Seeded pseudo-thermal speckle synthesis and detector readout.

Every frame is a function of ``(seed, frame_index)`` only. Randomness comes
from the Philox counter-based generator keyed on ``(seed, n)``; the counter
position inside a key walks the pixels in row-major order, and the top
counter word separates independent streams (field, per-arm detector noise).
Frames are therefore i.i.d. in time and any frame can be produced without
its predecessors, in any order, with bit-identical results.

The spatial model is fully developed speckle: white circular complex
Gaussian noise, circularly convolved with a uniform disk of radius
``grain_radius``, squared in magnitude and scaled to ``mean_intensity``.
The single-pixel intensity is then negative-exponential with contrast 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, ShapeError

_U64 = (1 << 64) - 1

# top word of the Philox counter selects the stream
STREAM_FIELD = 0
STREAM_NOISE_REFERENCE = 1
STREAM_NOISE_TEST = 2


@dataclass(frozen=True)
class FieldConfig:
    width: int
    height: int
    grain_radius: float = 0.0
    mean_intensity: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise ConfigError(f"field dimensions must be >= 1, got {self.width}x{self.height}")
        if not self.grain_radius >= 0:
            raise ConfigError(f"grain_radius must be >= 0, got {self.grain_radius}")
        if not self.mean_intensity > 0:
            raise ConfigError(f"mean_intensity must be > 0, got {self.mean_intensity}")
        if not 0 <= int(self.seed) <= _U64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.height), int(self.width))


@dataclass(frozen=True)
class DetectorConfig:
    quant_bits: int = 8
    noise_sigma: float = 0.0

    def __post_init__(self):
        if not 1 <= int(self.quant_bits) <= 16:
            raise ConfigError(f"quant_bits must be in [1, 16], got {self.quant_bits}")
        if not self.noise_sigma >= 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")

    @property
    def max_code(self) -> int:
        return (1 << int(self.quant_bits)) - 1

    @property
    def mid_code(self) -> int:
        """Code that a pixel at the configured mean intensity maps to."""
        return 1 << (int(self.quant_bits) - 1)


@dataclass(frozen=True)
class SpeckleFrame:
    intensities: np.ndarray
    frame_index: int

    def __post_init__(self):
        if self.frame_index < 1:
            raise ConfigError(f"frame_index must be >= 1, got {self.frame_index}")
        if self.intensities.ndim != 2:
            raise ShapeError("frame intensities must be a 2-D grid")

    @property
    def shape(self) -> tuple[int, int]:
        return self.intensities.shape


def _generator(seed: int, n: int, stream: int) -> np.random.Generator:
    key = np.array([int(seed) & _U64, int(n) & _U64], dtype=np.uint64)
    counter = np.array([0, 0, 0, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@lru_cache(maxsize=16)
def _kernel_spectrum(height: int, width: int, radius: float) -> np.ndarray:
    """FFT of the unit-energy disk kernel, centred on pixel (0, 0) with wraparound."""
    dy = np.fft.fftfreq(height, 1.0 / height)
    dx = np.fft.fftfreq(width, 1.0 / width)
    r2 = dy[:, None] ** 2 + dx[None, :] ** 2
    kernel = (r2 <= radius * radius).astype(np.float64)
    kernel /= np.sqrt(np.sum(kernel * kernel))
    spectrum = np.fft.fft2(kernel)
    spectrum.setflags(write=False)
    return spectrum


def _white_field(cfg: FieldConfig, n: int) -> np.ndarray:
    rng = _generator(cfg.seed, n, STREAM_FIELD)
    h, w = cfg.shape
    # row-major: pixel p consumes normals 2p (real) and 2p+1 (imag)
    z = rng.standard_normal((h, w, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def _intensity_from_white(cfg: FieldConfig, white: np.ndarray) -> np.ndarray:
    if cfg.grain_radius >= 1:
        h, w = cfg.shape
        spectrum = _kernel_spectrum(h, w, float(cfg.grain_radius))
        field = np.fft.ifft2(np.fft.fft2(white, axes=(-2, -1)) * spectrum, axes=(-2, -1))
    else:
        # radius < 1 keeps only the centre tap: uncorrelated pixels
        field = white
    return cfg.mean_intensity * (field.real ** 2 + field.imag ** 2)


def generate_frame(cfg: FieldConfig, n: int) -> SpeckleFrame:
    """Return speckle frame ``n`` (1-based) of the sequence defined by ``cfg``."""
    if n < 1:
        raise ConfigError(f"frame index must be >= 1, got {n}")
    return SpeckleFrame(_intensity_from_white(cfg, _white_field(cfg, n)), int(n))


def generate_frames(cfg: FieldConfig, start: int, count: int) -> np.ndarray:
    """Intensities of frames ``start .. start+count-1`` as a ``(count, H, W)`` array.

    Bit-identical to stacking :func:`generate_frame` calls; the FFT is batched.
    """
    if start < 1 or count < 0:
        raise ConfigError(f"invalid frame range start={start} count={count}")
    h, w = cfg.shape
    white = np.empty((count, h, w), dtype=np.complex128)
    for k in range(count):
        white[k] = _white_field(cfg, start + k)
    return _intensity_from_white(cfg, white)


def bucket_signal(frame: SpeckleFrame | np.ndarray, mask) -> float:
    """Total transmitted intensity ``sum_x I(x) T(x)``."""
    intensities = frame.intensities if isinstance(frame, SpeckleFrame) else np.asarray(frame)
    transmissivity = getattr(mask, "transmissivity", mask)
    transmissivity = np.asarray(transmissivity)
    if intensities.shape[-2:] != transmissivity.shape:
        raise ShapeError(
            f"frame {intensities.shape[-2:]} and mask {transmissivity.shape} differ"
        )
    return float(np.sum(intensities * transmissivity, dtype=np.float64))


def bucket_signals(frames: np.ndarray, mask) -> np.ndarray:
    """Vectorised :func:`bucket_signal` over a ``(count, H, W)`` stack."""
    transmissivity = np.asarray(getattr(mask, "transmissivity", mask))
    if frames.shape[-2:] != transmissivity.shape:
        raise ShapeError(f"frames {frames.shape[-2:]} and mask {transmissivity.shape} differ")
    flat = frames.reshape(frames.shape[0], -1).astype(np.float64, copy=False)
    return flat @ transmissivity.reshape(-1).astype(np.float64)


def quantize_intensities(intensities: np.ndarray, det: DetectorConfig, mean_intensity: float,
                         noise: np.ndarray | None = None) -> np.ndarray:
    """Map intensities to integer codes.

    ``code = floor(I * mid_code / mean_intensity + 0.5)`` clipped to
    ``[0, max_code]``, i.e. round half up with the configured mean landing on
    ``2**(quant_bits-1)``. ``noise`` (same units as ``I``) is added and the
    result clamped at zero before scaling.
    """
    values = np.asarray(intensities, dtype=np.float64)
    if noise is not None:
        values = np.maximum(values + noise, 0.0)
    codes = np.floor(values * (det.mid_code / mean_intensity) + 0.5)
    np.clip(codes, 0, det.max_code, out=codes)
    dtype = np.uint8 if det.quant_bits <= 8 else np.uint16
    return codes.astype(dtype)


def quantize_frame(frame: SpeckleFrame, det: DetectorConfig, n: int | None = None, *,
                   field: FieldConfig, stream: int = STREAM_NOISE_REFERENCE) -> SpeckleFrame:
    """Detector readout of ``frame``: additive noise, clamp, scale, round half up.

    The noise draw is keyed on ``(field.seed, n)`` and ``stream`` so the two
    arms of one measurement receive independent noise.
    """
    n = frame.frame_index if n is None else int(n)
    noise = None
    if det.noise_sigma > 0:
        noise = det.noise_sigma * _generator(field.seed, n, stream).standard_normal(frame.shape)
    return SpeckleFrame(quantize_intensities(frame.intensities, det, field.mean_intensity, noise), n)


def detector_noise(field: FieldConfig, det: DetectorConfig, start: int, count: int,
                   stream: int) -> np.ndarray | None:
    """Noise stack matching :func:`quantize_frame` for frames ``start..start+count-1``."""
    if det.noise_sigma <= 0:
        return None
    out = np.empty((count,) + field.shape)
    for k in range(count):
        out[k] = det.noise_sigma * _generator(field.seed, start + k, stream).standard_normal(field.shape)
    return out
