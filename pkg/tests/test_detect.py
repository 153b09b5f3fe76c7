import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazetrace import kernels
from gazetrace.config import DetectionConfig
from gazetrace.detect import (
    FIXATION,
    SACCADE,
    OrderingError,
    classify_ivt,
    detect_events,
    dispersion,
    finalize_cluster,
    run_detection,
    summarize_saccade,
    velocity,
)
from gazetrace.ingest import AoiMap, AoiRect, GazeSample
from gazetrace.synth import SynthCluster, SynthSpec, generate_session, oracle_ivt

from .helpers import stream

CFG = DetectionConfig()


def test_velocity_examples():
    assert velocity(GazeSample(0, 0, 0), GazeSample(1000, 300, 400)) == 500.0
    assert velocity(GazeSample(0, 5, 5), GazeSample(37, 5, 5)) == 0.0
    assert velocity(GazeSample(0, 100, 100), GazeSample(100, 100, 172.1)) == pytest.approx(721.0, abs=1e-9)
    assert velocity(GazeSample(5, 1, 1), GazeSample(5, 2, 2)) == math.inf
    with pytest.raises(OrderingError):
        velocity(GazeSample(10, 0, 0), GazeSample(9, 0, 0))


def test_ivt_boundary_is_inclusive(backend):
    s = stream([(0, 0, 0), (721, 0, 1000), (1443, 0, 2000)])
    labels = classify_ivt(s, CFG, backend=backend)
    assert [(lab.index, lab.kind) for lab in labels] == [(1, FIXATION), (2, SACCADE)]
    assert [lab.velocity for lab in labels] == [721.0, 722.0]


def test_ivt_constant_stream_and_short_input(backend):
    assert [lab.kind for lab in classify_ivt(stream([(5, 5)] * 10), CFG, backend)] == [FIXATION] * 9
    assert classify_ivt(stream([(5, 5)]), CFG, backend) == []
    assert classify_ivt([], CFG, backend) == []


def test_ivt_zero_interval_is_saccade(backend):
    labels = classify_ivt(stream([(0, 0, 0), (0, 0, 0)]), CFG, backend)
    assert labels[0].kind == SACCADE and math.isinf(labels[0].velocity)


def test_negative_interval_raises(backend):
    with pytest.raises(OrderingError):
        classify_ivt(stream([(0, 0, 10), (0, 0, 5)]), CFG, backend)


@st.composite
def random_streams(draw):
    n = draw(st.integers(2, 80))
    dts = draw(st.lists(st.integers(0, 60), min_size=n - 1, max_size=n - 1))
    xs = draw(st.lists(st.floats(0, 1919, allow_nan=False), min_size=n, max_size=n))
    ys = draw(st.lists(st.floats(0, 1079, allow_nan=False), min_size=n, max_size=n))
    t = np.concatenate([[0], np.cumsum(dts)])
    return [GazeSample(int(ti), x, y) for ti, x, y in zip(t, xs, ys)]


@settings(max_examples=200)
@given(random_streams(), st.floats(1, 5000))
def test_ivt_agrees_with_oracle(samples, v):
    cfg = DetectionConfig(v_basic=v, v_advanced=min(v, 300))
    for b in kernels.BACKENDS:
        assert [lab.kind for lab in classify_ivt(samples, cfg, backend=b)] == oracle_ivt(samples, v)


@settings(max_examples=200)
@given(random_streams(), st.floats(10, 2000), st.floats(1, 200))
def test_backends_bit_identical(samples, v_adv, tau):
    x = np.array([s.x for s in samples])
    y = np.array([s.y for s in samples])
    t = np.array([s.timestamp for s in samples], dtype=np.int64)
    results = []
    for b in kernels.BACKENDS:
        vel = kernels.velocities(x, y, t, backend=b)
        results.append((vel.tobytes(), kernels.ivt_labels(vel, 721, backend=b).tolist(),
                        kernels.cluster_starts(x, y, vel, v_adv, tau, backend=b).tolist()))
    assert all(r == results[0] for r in results)


def _slow_cluster(cx, cy, n, dt, t0=0, jitter=1.0):
    pts = [(cx + jitter * math.cos(k), cy + jitter * math.sin(k), t0 + k * dt) for k in range(n)]
    return pts


def test_detect_single_fixation(backend):
    pts = _slow_cluster(500, 500, 5, 100)  # 400 ms, within a 10 px disc
    fix, sac = detect_events(stream(pts), CFG, backend=backend)
    assert len(fix) == 1 and sac == []
    cx = sum(p[0] for p in pts) / 5
    cy = sum(p[1] for p in pts) / 5
    assert abs(fix[0].center.x - cx) < 1 and abs(fix[0].center.y - cy) < 1
    assert fix[0].duration == 400 and fix[0].sample_count == 5


def test_detect_rejects_small_and_short_clusters(backend):
    assert detect_events(stream(_slow_cluster(500, 500, 2, 100)), CFG, backend=backend)[0] == []
    short = _slow_cluster(500, 500, 4, 26, jitter=0.5)  # 78 ms
    assert detect_events(stream(short), CFG, backend=backend)[0] == []
    assert detect_events([], CFG, backend=backend) == ([], [])


def test_detect_two_fixations_and_saccade(backend):
    a = _slow_cluster(200, 200, 6, 40)
    b = _slow_cluster(800, 200, 6, 40, t0=a[-1][2] + 40)
    fix, sac = detect_events(stream(a + b), CFG, backend=backend)
    assert len(fix) == 2 and len(sac) == 1
    s = sac[0]
    assert s.start == a[-1][2] and s.end == b[0][2]
    assert s.amplitude == pytest.approx(math.dist(a[-1][:2], b[0][:2]))
    assert s.peak_velocity == pytest.approx(math.dist(a[-1][:2], b[0][:2]) / 0.04)


def test_rejected_cluster_absorbed_into_saccade(backend):
    a = _slow_cluster(200, 200, 6, 40)
    mid = _slow_cluster(500, 500, 2, 40, t0=a[-1][2] + 40)
    b = _slow_cluster(800, 200, 6, 40, t0=mid[-1][2] + 40)
    fix, sac = detect_events(stream(a + mid + b), CFG, backend=backend)
    assert len(fix) == 2 and len(sac) == 1
    assert sac[0].start == a[-1][2] and sac[0].end == b[0][2]


def test_leading_and_trailing_segments(backend):
    lead = [(1000, 900, 0), (1500, 100, 20)]
    a = _slow_cluster(200, 200, 6, 40, t0=40)
    tail = [(900, 900, a[-1][2] + 20)]
    fix, sac = detect_events(stream(lead + a + tail), CFG, backend=backend)
    assert len(fix) == 1 and len(sac) == 2
    assert sac[0].start == 0 and sac[0].end == a[0][2]
    assert sac[1].start == a[-1][2] and sac[1].end == tail[0][2]


def test_finalize_cluster_examples():
    f = finalize_cluster(stream([(7, 7, 0), (7, 7, 150), (7, 7, 300)]))
    assert f.dispersion == 0 and f.duration == 300
    f = finalize_cluster(stream([(0, 0), (10, 0), (0, 10)]))
    assert f.center.x == pytest.approx(10 / 3) and f.center.y == pytest.approx(10 / 3)
    assert f.dispersion == 20
    m = AoiMap((AoiRect("paper_bin", 0, 0, 100, 100),), 0)
    assert finalize_cluster(stream([(10, 10), (20, 20), (30, 30)]), m).dominant_aoi == "paper_bin"
    with pytest.raises(AssertionError):
        finalize_cluster(stream([(0, 0), (1, 1)]), cfg=CFG)


def test_dispersion_is_range_sum():
    assert dispersion([1, 4, 2], [10, 10, 13]) == 6


def test_summarize_saccade_examples():
    s = summarize_saccade(stream([(0, 0, 0), (600, 0, 100)]))
    assert (s.amplitude, s.peak_velocity, s.duration) == (600, 6000, 100)
    loop = summarize_saccade(stream([(0, 0, 0), (300, 0, 50), (0, 0, 100)]))
    assert loop.amplitude == 0 and loop.peak_velocity > 0
    d = summarize_saccade(stream([(3, 3)]))
    assert d.degenerate and d.amplitude == 0
    z = summarize_saccade(stream([(0, 0, 0), (50, 0, 0), (60, 0, 10)]))
    assert z.peak_velocity == 1000  # zero-interval pair excluded


def _planted_spec(seed, n_clusters, rng):
    centers = []
    while len(centers) < n_clusters:
        c = (float(rng.uniform(100, 1800)), float(rng.uniform(100, 980)))
        if all(math.dist(c, o) > 150 for o in centers):
            centers.append(c)
    clusters = []
    for c in centers:
        n = int(rng.integers(2, 12))
        dwell = n * float(rng.uniform(20, 40))
        clusters.append(SynthCluster(c, float(rng.uniform(0, 2.5)), n, dwell))
    return SynthSpec(seed=seed, clusters=tuple(clusters))


@pytest.mark.parametrize("seed", range(10))
def test_planted_recovery_and_event_invariants(seed, backend):
    rng = np.random.default_rng(1000 + seed)
    spec = _planted_spec(seed, int(rng.integers(1, 9)), rng)
    session, truth = generate_session(spec)
    d = run_detection(session.samples, CFG, backend=backend)
    want = truth.recoverable(CFG.min_cluster_size, CFG.min_duration)
    assert len(d.fixations) == len(want)
    for f, p in zip(d.fixations, want):
        assert math.dist(f.center, p.center) <= 5
        assert abs(f.duration - p.duration) <= spec.interval
    for f in d.fixations:
        assert f.sample_count >= CFG.min_cluster_size and f.duration >= CFG.min_duration
    for a, b in zip(d.fixations, d.fixations[1:]):
        assert a.end < b.start
    # saccades sit between fixations
    for s, (a, b) in zip(d.saccades[1 if d.fixations and d.fixations[0].start > 0 else 0:],
                         zip(d.fixations, d.fixations[1:])):
        assert s.start == a.end and s.end == b.start


def test_every_rejected_cluster_violates_a_minimum(backend):
    rng = np.random.default_rng(5)
    spec = _planted_spec(5, 8, rng)
    session, _ = generate_session(spec)
    d = run_detection(session.samples, CFG, backend=backend)
    starts = sorted(set(d.cluster_id.tolist()))
    ts = [s.timestamp for s in session.samples]
    accepted = {a for a, _ in d.fixation_spans}
    for cid in starts:
        idx = np.flatnonzero(d.cluster_id == cid)
        first, last = int(idx[0]), int(idx[-1])
        ok = len(idx) >= CFG.min_cluster_size and ts[last] - ts[first] >= CFG.min_duration
        assert ok == (first in accepted)


def test_detection_is_deterministic(backend):
    session, _ = generate_session(_planted_spec(3, 5, np.random.default_rng(3)))
    a = detect_events(session.samples, CFG, backend=backend)
    b = detect_events(session.samples, CFG, backend=backend)
    assert a == b
