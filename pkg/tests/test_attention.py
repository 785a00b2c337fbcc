import math

import numpy as np
import pytest

from gazeintent.attention import (
    FRAME_75HZ,
    AttentionConfig,
    EmptyTraceError,
    GazeSample,
    GazeTrace,
    attention_sample,
    compute_vap,
    compute_vap_matrix,
    gaze_distance,
    sample_from_json,
    sample_to_json,
)

CFG = AttentionConfig()


def make_trace(positions, t0=0.0, valid=None, n=None):
    """Trace of n frame-aligned samples; positions may be one point or a list."""
    if n is None:
        n = len(positions)
    samples = []
    for i in range(n):
        pos = positions if isinstance(positions[0], (int, float)) else positions[i]
        v = True if valid is None else valid[i]
        samples.append(GazeSample(t0 + i * FRAME_75HZ, pos[0], pos[1], v))
    return GazeTrace.from_samples(samples, capacity=max(len(samples), 1200))


def test_gaze_distance_basics():
    assert gaze_distance((0, 0), (0, 0)) == 0
    assert gaze_distance((3, 4), (0, 0)) == 5
    assert gaze_distance((10, 0), (-10, 0)) == 20
    assert gaze_distance((1, 2), (4, 6)) == gaze_distance((4, 6), (1, 2))


def test_attention_sample_values():
    # hand-evaluated exp(-d^2 / 2 sigma^2)
    assert attention_sample(0, 60) == 1.0
    assert attention_sample(60, 60) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert attention_sample(120, 60) == pytest.approx(math.exp(-2.0), abs=1e-15)
    assert attention_sample(60, 60) == pytest.approx(0.6065306597126334, abs=1e-12)
    assert attention_sample(120, 60) == pytest.approx(0.1353352832366127, abs=1e-12)


def test_attention_sample_strictly_decreasing():
    ds = np.linspace(0, 500, 200)
    vals = [attention_sample(d, 60) for d in ds]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(0 < v <= 1 for v in vals)


def test_attention_config_validation():
    with pytest.raises(ValueError):
        AttentionConfig(sigma=0)
    with pytest.raises(ValueError):
        AttentionConfig(samples_per_window=299)
    # the printed 13.333 ms period also rounds to 300 slots
    AttentionConfig(frame=0.013333, samples_per_window=300)


def test_trace_rejects_time_reversal():
    trace = GazeTrace()
    trace.append(GazeSample(1.0, 0, 0))
    with pytest.raises(ValueError):
        trace.append(GazeSample(0.5, 0, 0))
    trace.append(GazeSample(1.0, 1, 1))  # equal t allowed


def test_trace_ring_eviction():
    trace = GazeTrace(capacity=10)
    for i in range(25):
        trace.append(GazeSample(i * FRAME_75HZ, float(i), 0.0))
    assert len(trace) == 10
    t, x, _, _ = trace.snapshot()
    assert list(x) == [float(i) for i in range(15, 25)]
    assert np.all(np.diff(t) > 0)
    assert trace.earliest_time() == pytest.approx(15 * FRAME_75HZ)
    assert trace.latest_time() == pytest.approx(24 * FRAME_75HZ)


def test_vap_constant_fixation_at_center():
    trace = make_trace((100.0, 100.0), n=310)
    vap = compute_vap(trace, (100.0, 100.0), 309 * FRAME_75HZ, CFG)
    assert vap.values.shape == (300,)
    assert np.allclose(vap.values, 1.0)


def test_vap_constant_fixation_at_sigma():
    trace = make_trace((160.0, 100.0), n=310)
    vap = compute_vap(trace, (100.0, 100.0), 309 * FRAME_75HZ, CFG)
    assert np.allclose(vap.values, math.exp(-0.5), atol=1e-12)


def test_vap_dropout_zeroes_slots():
    # 0.5 s dropout in the middle of the window: ~37-38 zero slots
    n = 310
    valid = [True] * n
    for i in range(150, 150 + 38):
        valid[i] = False
    trace = make_trace((100.0, 100.0), valid=valid, n=n)
    vap = compute_vap(trace, (100.0, 100.0), 309 * FRAME_75HZ, CFG)
    zeros = int((vap.values == 0).sum())
    assert 35 <= zeros <= 40
    assert np.all((vap.values == 0) | np.isclose(vap.values, 1.0))


def test_vap_empty_trace_raises():
    with pytest.raises(EmptyTraceError):
        compute_vap(GazeTrace(), (0, 0), 1.0, CFG)


def test_vap_all_invalid_gives_zeros():
    trace = make_trace((0.0, 0.0), valid=[False] * 310, n=310)
    vap = compute_vap(trace, (0.0, 0.0), 309 * FRAME_75HZ, CFG)
    assert np.all(vap.values == 0)


def test_vap_shift_property():
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 400, size=(400, 2))
    trace = GazeTrace.from_samples(
        [GazeSample(i * FRAME_75HZ, p[0], p[1]) for i, p in enumerate(pts)]
    )
    end = 350 * FRAME_75HZ
    before = compute_vap(trace, (200.0, 200.0), end, CFG)
    after = compute_vap(trace, (200.0, 200.0), end + FRAME_75HZ, CFG)
    assert np.array_equal(before.values[1:], after.values[:-1])


def test_vap_monotone_in_distance():
    trace = make_trace((0.0, 0.0), n=310)
    near = compute_vap(trace, (30.0, 0.0), 309 * FRAME_75HZ, CFG)
    far = compute_vap(trace, (90.0, 0.0), 309 * FRAME_75HZ, CFG)
    assert np.all(near.values >= far.values)
    assert near.values.mean() > far.values.mean()


def test_vap_bounded_and_finite_for_junk_input():
    rng = np.random.default_rng(0)
    samples = []
    for i in range(400):
        x, y = rng.uniform(-1e5, 1e5, 2)
        if i % 17 == 0:
            x = float("nan")
        if i % 23 == 0:
            y = float("inf")
        samples.append(GazeSample(i * FRAME_75HZ, x, y, valid=i % 5 != 0))
    trace = GazeTrace.from_samples(samples)
    vap = compute_vap(trace, (123.0, -456.0), 399 * FRAME_75HZ, CFG)
    assert np.all(np.isfinite(vap.values))
    assert np.all(vap.values >= 0)
    assert np.all(vap.values <= 1)


def test_vap_deterministic():
    rng = np.random.default_rng(9)
    pts = rng.uniform(0, 400, size=(350, 2))
    samples = [GazeSample(i * FRAME_75HZ, p[0], p[1]) for i, p in enumerate(pts)]
    a = compute_vap(GazeTrace.from_samples(samples), (10, 10), 349 * FRAME_75HZ, CFG)
    b = compute_vap(GazeTrace.from_samples(samples), (10, 10), 349 * FRAME_75HZ, CFG)
    assert np.array_equal(a.values, b.values)


def test_vap_matrix_rows_match_single_object_calls():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 400, size=(320, 2))
    trace = GazeTrace.from_samples(
        [GazeSample(i * FRAME_75HZ, p[0], p[1]) for i, p in enumerate(pts)]
    )
    objs = np.array([[50.0, 50.0], [200.0, 100.0], [333.0, 40.0]])
    end = 319 * FRAME_75HZ
    mat = compute_vap_matrix(trace, objs, end, CFG)
    for i, pos in enumerate(objs):
        solo = compute_vap(trace, pos, end, CFG)
        assert np.array_equal(mat[i], solo.values)


def test_vap_window_shorter_trace_zero_prefix():
    # only 1 s of data: the first ~225 slots have no sample in range
    trace = make_trace((0.0, 0.0), t0=3.0, n=75)
    end = trace.latest_time()
    vap = compute_vap(trace, (0.0, 0.0), end, CFG)
    assert np.all(vap.values[:220] == 0)
    assert np.all(vap.values[-70:] > 0.99)


def test_gaze_sample_jsonl_roundtrip():
    s = GazeSample(1.2345, 10.5, -3.25, False)
    line = sample_to_json(s)
    assert sample_from_json(line) == s
    doc_keys = set(line.replace("{", "").replace("}", "").split(","))
    assert len(doc_keys) == 4
