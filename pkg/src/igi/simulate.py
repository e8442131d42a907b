"""Two-arm measurement simulation built on :mod:`igi.speckle`.

One speckle field drives both arms. The test arm passes the object and is
summed into the bucket value; the reference arm is recorded pixel by pixel.
With a detector config each arm gets its own noise draw and is quantised;
without one the raw intensities are used.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .masks import ObjectMask
from .speckle import (STREAM_NOISE_REFERENCE, STREAM_NOISE_TEST, DetectorConfig, FieldConfig,
                      bucket_signals, detector_noise, generate_frames, quantize_intensities)
from .stream import MeasurementStream

CHUNK = 256


def iter_arm_blocks(field: FieldConfig, det: DetectorConfig | None, count: int,
                    start: int = 1, chunk: int = CHUNK) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(test_block, reference_block)`` frame stacks in measurement order."""
    for first in range(start, start + count, chunk):
        k = min(chunk, start + count - first)
        raw = generate_frames(field, first, k)
        if det is None:
            yield raw, raw
            continue
        noise_t = detector_noise(field, det, first, k, STREAM_NOISE_TEST)
        noise_r = detector_noise(field, det, first, k, STREAM_NOISE_REFERENCE)
        test = quantize_intensities(raw, det, field.mean_intensity, noise_t)
        ref = quantize_intensities(raw, det, field.mean_intensity, noise_r)
        yield test, ref


def _frame_dtype(det: DetectorConfig | None):
    if det is None:
        return np.float64
    return np.uint8 if det.quant_bits <= 8 else np.uint16


def simulate_stream(field: FieldConfig, mask: ObjectMask | np.ndarray, measurements: int,
                    det: DetectorConfig | None = None) -> MeasurementStream:
    """Ghost-imaging stream: bucket sums of the masked test arm plus reference frames."""
    frames = np.empty((measurements,) + field.shape, dtype=_frame_dtype(det))
    buckets = np.empty(measurements)
    pos = 0
    for test, ref in iter_arm_blocks(field, det, measurements):
        k = ref.shape[0]
        buckets[pos:pos + k] = bucket_signals(test, mask)
        frames[pos:pos + k] = ref
        pos += k
    return MeasurementStream(buckets, frames)


def simulate_arms(field: FieldConfig, measurements: int,
                  det: DetectorConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Full test and reference frame sequences for HBT experiments (no object)."""
    shape = (measurements,) + field.shape
    ref = np.empty(shape, dtype=_frame_dtype(det))
    # without detector noise both arms are the same field; keep one copy
    test = ref if det is None else np.empty(shape, dtype=_frame_dtype(det))
    pos = 0
    for t, r in iter_arm_blocks(field, det, measurements):
        k = r.shape[0]
        ref[pos:pos + k] = r
        if det is not None:
            test[pos:pos + k] = t
        pos += k
    return test, ref
