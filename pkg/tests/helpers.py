"""Shared test helpers: random stream corpora and tolerance checks."""

import numpy as np

from igi.stream import MeasurementStream


def random_stream(rng, max_dim=8, max_m=64, integer=False):
    h = int(rng.integers(1, max_dim + 1))
    w = int(rng.integers(1, max_dim + 1))
    m = int(rng.integers(2, max_m + 1))
    if integer:
        frames = rng.integers(0, 256, size=(m, h, w)).astype(np.uint8)
        buckets = rng.integers(0, 1 << 20, size=m).astype(np.float64)
    else:
        frames = rng.exponential(1.0, size=(m, h, w))
        buckets = rng.exponential(10.0, size=m) + frames.sum(axis=(1, 2))
    return MeasurementStream(buckets, frames)


def stream_corpus(count=100, seed=20240917, **kw):
    rng = np.random.default_rng(seed)
    return [random_stream(rng, **kw) for _ in range(count)]


def rel_err(a, b):
    """Max absolute difference relative to the largest reference magnitude."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    diff = float(np.max(np.abs(a - b))) if a.size else 0.0
    return diff / scale if scale > 0 else diff
