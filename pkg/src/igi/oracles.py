"""Batch reference correlators over a fully stored measurement stream.

These are the ground truth that the streaming engine is checked against.
All sums run in float64, pixel-wise, in ascending measurement order, so a
given stream always produces the same bits on one platform.

Normalisation follows each estimator's own definition: covariance forms
divide by M, the symmetric differential forms by 2N and the one-sided
variants by N, where N = M - 1 is the number of consecutive pairs.
"""

from __future__ import annotations

from typing import Callable, Iterator

import numpy as np

from .errors import ShapeError
from .stream import Algorithm, MeasurementStream, Reconstruction, hbt_stream

_CHUNK = 512


def _float_records(stream: MeasurementStream) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(S_n, I_n)`` in order with frames converted to float64 in chunks."""
    for start in range(0, len(stream), _CHUNK):
        block = np.asarray(stream.frames[start:start + _CHUNK], dtype=np.float64)
        buckets = np.asarray(stream.buckets[start:start + _CHUNK], dtype=np.float64)
        for s, frame in zip(buckets, block):
            yield float(s), frame


def _pairs(stream: MeasurementStream) -> Iterator[tuple[float, float, np.ndarray, np.ndarray]]:
    """Yield ``(S_n, S_{n+1}, I_n, I_{n+1})`` for n = 1 .. M-1."""
    records = _float_records(stream)
    s_prev, i_prev = next(records)
    for s_next, i_next in records:
        yield s_prev, s_next, i_prev, i_next
        s_prev, i_prev = s_next, i_next


def gi_background_subtraction(stream: MeasurementStream) -> Reconstruction:
    """Covariance estimate ``<S I(x)> - <S><I(x)>`` over all M measurements."""
    stream.require(2)
    m = len(stream)
    acc_si = np.zeros(stream.dims)
    acc_i = np.zeros(stream.dims)
    acc_s = 0.0
    for s, frame in _float_records(stream):
        acc_si += s * frame
        acc_i += frame
        acc_s += s
    values = acc_si / m - (acc_s / m) * (acc_i / m)
    return Reconstruction(values, Algorithm.GI, m, float(m))


def _pair_sum(stream: MeasurementStream, term: Callable) -> tuple[np.ndarray, int]:
    stream.require(2)
    acc = np.zeros(stream.dims)
    n = 0
    for s0, s1, i0, i1 in _pairs(stream):
        acc += term(s0, s1, i0, i1)
        n += 1
    return acc, n


def igi_offline(stream: MeasurementStream) -> Reconstruction:
    """``(1/2N) sum (S_{n+1} - S_n)(I_{n+1}(x) - I_n(x))``."""
    acc, n = _pair_sum(stream, lambda s0, s1, i0, i1: (s1 - s0) * (i1 - i0))
    return Reconstruction(acc / (2 * n), Algorithm.IGI, n, float(2 * n))


def igi_four_term_expansion(stream: MeasurementStream) -> list[Reconstruction]:
    """The four signed pieces of the differential product, each over 2N.

    In order: ``+S_{n+1}I_{n+1}``, ``+S_n I_n``, ``-S_{n+1}I_n``, ``-S_n I_{n+1}``.
    Their pixel-wise sum equals :func:`igi_offline` up to round-off.
    """
    stream.require(2)
    acc = [np.zeros(stream.dims) for _ in range(4)]
    n = 0
    for s0, s1, i0, i1 in _pairs(stream):
        acc[0] += s1 * i1
        acc[1] += s0 * i0
        acc[2] += s1 * i0
        acc[3] += s0 * i1
        n += 1
    d = float(2 * n)
    signs = (1.0, 1.0, -1.0, -1.0)
    return [
        Reconstruction(sign * a / d, Algorithm.IGI, n, d, {"term": k + 1})
        for k, (sign, a) in enumerate(zip(signs, acc))
    ]


_VARIANT_TERMS = {
    Algorithm.IGI_S: lambda s0, s1, i0, i1: (s1 - s0) * i1,
    Algorithm.IGI_I: lambda s0, s1, i0, i1: s1 * (i1 - i0),
    Algorithm.IGI_S_NEG: lambda s0, s1, i0, i1: -(s1 - s0) * i0,
    Algorithm.IGI_I_NEG: lambda s0, s1, i0, i1: -s0 * (i1 - i0),
}


def variant_offline(stream: MeasurementStream, which: Algorithm | str) -> Reconstruction:
    """One-sided differential variants, averaged over the N pairs.

    ``igi_s``: differential bucket times the newer frame; ``igi_i``: newer
    bucket times the differential frame; the ``_neg`` forms use the older
    sample with the sign flipped.
    """
    which = Algorithm.parse(which)
    if which not in _VARIANT_TERMS:
        raise ValueError(f"{which.value} is not a one-sided variant")
    acc, n = _pair_sum(stream, _VARIANT_TERMS[which])
    return Reconstruction(acc / n, which, n, float(n))


def _check_hbt(frames_test, frames_ref, x_t0) -> MeasurementStream:
    frames_test = np.asarray(frames_test)
    frames_ref = np.asarray(frames_ref)
    if frames_test.ndim != 3 or frames_ref.ndim != 3:
        raise ShapeError("HBT inputs must be (M, H, W) frame sequences")
    return hbt_stream(frames_test, frames_ref, x_t0)


def hbt_offline(frames_test, frames_ref, x_t0: tuple[int, int]) -> Reconstruction:
    """Intensity covariance between test pixel ``x_t0`` and every reference pixel."""
    rec = gi_background_subtraction(_check_hbt(frames_test, frames_ref, x_t0))
    rec.algorithm = Algorithm.HBT
    rec.meta["x_t0"] = tuple(x_t0)
    return rec


def hbt_igi_offline(frames_test, frames_ref, x_t0: tuple[int, int]) -> Reconstruction:
    rec = igi_offline(_check_hbt(frames_test, frames_ref, x_t0))
    rec.algorithm = Algorithm.HBT_IGI
    rec.meta["x_t0"] = tuple(x_t0)
    return rec


def offline(stream: MeasurementStream, algorithm: Algorithm | str) -> Reconstruction:
    """Dispatch to the batch estimator for ``algorithm`` on a bucket stream.

    For ``hbt`` and ``hbt_igi`` the bucket slot must already hold the test
    pixel (see :func:`igi.stream.hbt_stream`).
    """
    algorithm = Algorithm.parse(algorithm)
    if algorithm in (Algorithm.GI, Algorithm.HBT):
        rec = gi_background_subtraction(stream)
    elif algorithm in (Algorithm.IGI, Algorithm.HBT_IGI):
        rec = igi_offline(stream)
    else:
        return variant_offline(stream, algorithm)
    rec.algorithm = algorithm
    return rec
