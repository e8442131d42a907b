import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import rel_err, stream_corpus
from igi import oracles
from igi.engine import (COUNTER_BITS, FLOAT64, FixedPointConfig, StreamingEngine, engine_run)
from igi.errors import ConfigError, FixedPointOverflow, ShapeError
from igi.stream import Algorithm, MeasurementStream, hbt_stream


@st.composite
def streams(draw):
    h = draw(st.integers(1, 16))
    w = draw(st.integers(1, 16))
    m = draw(st.integers(2, 500))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return MeasurementStream(rng.exponential(size=m) * rng.uniform(0.1, 50),
                             rng.exponential(size=(m, h, w)))


@settings(max_examples=60, deadline=None)
@given(streams(), st.sampled_from(["igi", "igi_s", "igi_i"]))
def test_streaming_equals_batch_property(stream, algorithm):
    final, _ = engine_run(stream, algorithm, FLOAT64, snapshot_every=10**9)
    assert rel_err(final.image.values, oracles.offline(stream, algorithm).values) <= 1e-9
    assert final.n_pairs == len(stream) - 1


@settings(max_examples=30, deadline=None)
@given(streams(), st.data())
def test_streaming_hbt_igi_property(stream, data):
    h, w = stream.dims
    x_t0 = (data.draw(st.integers(0, h - 1)), data.draw(st.integers(0, w - 1)))
    hs = hbt_stream(stream.frames, stream.frames, x_t0)
    final, _ = engine_run(hs, "hbt_igi", FLOAT64, snapshot_every=10**9)
    expected = oracles.hbt_igi_offline(stream.frames, stream.frames, x_t0).values
    assert rel_err(final.image.values, expected) <= 1e-9


def test_tiny_igi_example(tiny_stream):
    engine = StreamingEngine((1, 1), "igi")
    for s, frame in tiny_stream:
        engine.push(s, frame)
    snap = engine.snapshot()
    assert snap.image.values[0, 0] == 1.75
    assert snap.n_pairs == 2 and engine.divisor == 4


def test_tiny_igi_s_example(tiny_stream):
    final, _ = engine_run(tiny_stream, "igi_s", FLOAT64, 1000)
    assert final.image.values[0, 0] == 3.5
    assert final.image.divisor == 2


def test_new_engine_snapshot_is_zero():
    snap = StreamingEngine((3, 4), "igi").snapshot()
    assert np.all(snap.image.values == 0) and snap.n_pairs == 0


def test_single_push_gives_zero_image():
    engine = StreamingEngine((2, 2), "igi")
    engine.push(5.0, np.ones((2, 2)))
    snap = engine.snapshot()
    assert snap.n_pairs == 0 and np.all(snap.image.values == 0)
    assert engine.measurements == 1


@pytest.mark.parametrize("g_bits", [2, 64])
def test_width_bounds_accepted(g_bits):
    StreamingEngine((2, 2), "igi", FixedPointConfig(g_bits=g_bits))


@pytest.mark.parametrize("kwargs", [dict(g_bits=1), dict(g_bits=65), dict(s_bits=0),
                                    dict(overflow_policy="wrap")])
def test_width_bounds_rejected(kwargs):
    with pytest.raises(ConfigError):
        FixedPointConfig(**kwargs)


def test_engine_rejects_bad_setup():
    with pytest.raises(ConfigError):
        StreamingEngine((0, 3))
    with pytest.raises(ConfigError):
        StreamingEngine((2, 2), "gi")
    with pytest.raises(ConfigError):
        StreamingEngine((2, 2), "igi", "float32")
    with pytest.raises(ShapeError):
        StreamingEngine((2, 2)).push(1.0, np.ones((2, 3)))
    with pytest.raises(ConfigError):
        engine_run(MeasurementStream(np.ones(3), np.ones((3, 1, 1))), "igi", FLOAT64, 0)


def _plus_eight_stream(m):
    # every pair contributes d_S * d_I = (+-2) * (+-4) = +8
    s = np.array([0, 2] * m)[:m]
    frames = np.array([0, 4] * m)[:m].reshape(m, 1, 1)
    return MeasurementStream(s.astype(np.float64), frames.astype(np.int64))


@pytest.mark.parametrize("g_bits, index", [(4, 2), (5, 3), (6, 5)])
def test_accumulate_overflow_index(g_bits, index):
    engine = StreamingEngine((1, 1), "igi", FixedPointConfig(8, 8, g_bits))
    with pytest.raises(FixedPointOverflow) as info:
        for s, frame in _plus_eight_stream(10):
            engine.push(s, frame)
    err = info.value
    assert err.stage == "accumulate"
    assert err.index == index
    assert err.pixel == (0, 0)
    assert "accumulate" in str(err) and f"measurement {index}" in str(err)


def test_input_and_difference_overflow():
    cfg = FixedPointConfig(4, 4, 32)
    engine = StreamingEngine((1, 1), "igi", cfg)
    with pytest.raises(FixedPointOverflow) as info:
        engine.push(16, np.zeros((1, 1), dtype=np.int64))
    assert info.value.stage == "input" and info.value.pixel is None
    # a narrowed product stage trips before the accumulator does
    narrow = StreamingEngine((1, 1), "igi", FixedPointConfig(8, 8, 32, p_bits=4))
    with pytest.raises(FixedPointOverflow) as info:
        for s, frame in _plus_eight_stream(3):
            narrow.push(s, frame)
    assert info.value.stage == "product"


def test_fixed_rejects_fractional_inputs():
    engine = StreamingEngine((1, 1), "igi", FixedPointConfig())
    with pytest.raises(ConfigError):
        engine.push(1.5, np.zeros((1, 1)))
    with pytest.raises(ConfigError):
        engine.push(1, np.full((1, 1), 0.5))


def test_saturate_counts_and_clamps():
    engine = StreamingEngine((1, 1), "igi", FixedPointConfig(8, 8, 5, "saturate"))
    for s, frame in _plus_eight_stream(6):
        engine.push(s, frame)
    snap = engine.snapshot()
    assert engine.accumulator()[0, 0] == 15
    assert snap.overflow_count == 4  # pairs 2..5 each clamp


def _integer_stream(rng, m, h, w, s_max=5000, i_max=255):
    return MeasurementStream(rng.integers(0, s_max, size=m).astype(np.float64),
                             rng.integers(0, i_max + 1, size=(m, h, w)))


@pytest.mark.parametrize("algorithm", ["igi", "igi_s", "igi_i"])
def test_fixed_point_matches_float_exactly(algorithm):
    rng = np.random.default_rng(5)
    for _ in range(20):
        stream = _integer_stream(rng, int(rng.integers(2, 80)), 3, 4)
        fixed = StreamingEngine((3, 4), algorithm, FixedPointConfig(16, 8, 48))
        flt = StreamingEngine((3, 4), algorithm)
        for s, frame in stream:
            fixed.push(s, frame)
            flt.push(s, frame)
        # values stay far below 2**53, so the float sum is exact too
        assert np.array_equal(fixed.accumulator(), flt.accumulator().astype(np.int64))
        assert fixed.snapshot().overflow_count == 0


def test_wide_registers_use_python_ints():
    rng = np.random.default_rng(2)
    stream = _integer_stream(rng, 30, 2, 2, s_max=2**40)
    fixed = StreamingEngine((2, 2), "igi", FixedPointConfig(60, 8, 64))
    assert not fixed.fixed.fits_int64
    for s, frame in stream:
        fixed.push(int(s), frame)
    s = [int(v) for v in stream.buckets]
    f = stream.frames.astype(object)
    expected = sum((s[k] - s[k - 1]) * (f[k] - f[k - 1]) for k in range(1, len(s)))
    assert fixed.accumulator().tolist() == expected.tolist()


def _overflows(stream, cfg):
    engine = StreamingEngine(stream.dims, "igi", cfg)
    try:
        for s, frame in stream:
            engine.push(s, frame)
    except FixedPointOverflow:
        return True
    return False


def test_overflow_monotone_in_widths():
    rng = np.random.default_rng(13)
    corpus = [_integer_stream(rng, 40, 2, 2, s_max=int(rng.integers(2, 600)),
                              i_max=int(rng.integers(1, 63))) for _ in range(40)]
    widths = [(6, 4, 10), (8, 5, 14), (10, 6, 18), (12, 8, 24)]
    previous = None
    for s_bits, i_bits, g_bits in widths:
        failing = {k for k, stream in enumerate(corpus)
                   if _overflows(stream, FixedPointConfig(s_bits, i_bits, g_bits))}
        if previous is not None:
            assert failing <= previous
        previous = failing
    assert previous == set()


def test_footprint_layout():
    engine = StreamingEngine((1, 1), "igi", FixedPointConfig(8, 8, 27))
    assert engine.memory_footprint() == 8 + 8 + 27 + COUNTER_BITS
    big = StreamingEngine((280, 400), "igi", FixedPointConfig(40, 8, 32))
    assert big.register_bits()["R_I"] == 896_000
    flt = StreamingEngine((2, 3), "igi")
    assert flt.memory_footprint() == 64 + 6 * 64 + 6 * 64 + COUNTER_BITS


def test_variant_register_elision():
    cfg = FixedPointConfig(8, 8, 27)
    assert StreamingEngine((2, 2), "igi_s", cfg).register_bits()["R_I"] == 0
    assert StreamingEngine((2, 2), "igi_i", cfg).register_bits()["R_S"] == 0


def test_footprint_constant_across_pushes():
    rng = np.random.default_rng(1)
    engine = StreamingEngine((4, 4), "igi")
    before = engine.memory_footprint()
    sizes = []
    for k in range(500):
        engine.push(rng.exponential(), rng.exponential(size=(4, 4)))
        if k in (9, 499):
            sizes.append(engine.memory_footprint())
    assert sizes == [before, before]


def test_snapshot_cadence():
    rng = np.random.default_rng(0)
    stream = MeasurementStream(rng.exponential(size=1000), rng.exponential(size=(1000, 2, 2)))
    final, inter = engine_run(stream, "igi", FLOAT64, 125)
    assert len(inter) == 8
    assert [s.n_pairs for s in inter] == [125 * k - 1 for k in range(1, 9)]
    assert inter[-1].image.values.tolist() == final.image.values.tolist()
    _, none = engine_run(stream, "igi", FLOAT64, 10**9)
    assert none == []


def test_intermediate_equals_prefix_oracle():
    stream = stream_corpus(1, seed=4, max_dim=5, max_m=64)[0]
    _, inter = engine_run(stream, "igi", FLOAT64, 7)
    for snap in inter:
        prefix = stream.prefix(snap.n_pairs + 1)
        assert rel_err(snap.image.values, oracles.igi_offline(prefix).values) <= 1e-9


def test_snapshot_is_pure_and_continuable():
    rng = np.random.default_rng(9)
    stream = MeasurementStream(rng.exponential(size=60), rng.exponential(size=(60, 3, 3)))
    engine = StreamingEngine((3, 3), "igi")
    for k, (s, frame) in enumerate(stream):
        engine.push(s, frame)
        if k == 30:
            a = engine.snapshot().image.values
            b = engine.snapshot().image.values
            assert np.array_equal(a, b)
    assert rel_err(engine.snapshot().image.values, oracles.igi_offline(stream).values) <= 1e-9


def test_engine_accepts_frame_objects():
    from igi.speckle import FieldConfig, generate_frame
    cfg = FieldConfig(3, 2, 0, 1.0, seed=1)
    engine = StreamingEngine((2, 3), Algorithm.IGI)
    engine.push(1.0, generate_frame(cfg, 1))
    engine.push(2.0, generate_frame(cfg, 2))
    expected = 0.5 * (generate_frame(cfg, 2).intensities - generate_frame(cfg, 1).intensities)
    np.testing.assert_allclose(engine.snapshot().image.values, expected, rtol=1e-15)
