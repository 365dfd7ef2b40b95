import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorloc.evaluation import (
    AXES,
    angle_error_deg,
    binned_percentiles,
    cdf_points,
    error_vs_time,
    evaluate,
    monte_carlo_sweep,
    percentile,
)
from anchorloc.exceptions import ConfigurationError
from anchorloc.fusion import Pose6DoF
from anchorloc.geometry import EulerAngles, euler_to_rotation
from anchorloc.scenario import GroundTruthTrack, Scenario, Trajectory


def brute_percentile(values, q):
    # smallest sorted value covering at least q percent of the sample
    v = sorted(values)
    for k in range(1, len(v) + 1):
        if 100 * k >= q * len(v):
            return v[k - 1]
    return v[-1]


def truth_track(times, positions=None, angles=None):
    n = len(times)
    return GroundTruthTrack(
        times,
        np.zeros((n, 3)) if positions is None else positions,
        np.zeros((n, 3)) if angles is None else angles,
    )


def pose(t, p, e=(0.0, 0.0, 0.0)):
    return Pose6DoF(t, np.asarray(p, float), euler_to_rotation(EulerAngles(*e)))


@settings(max_examples=200)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), st.sampled_from([0, 1, 10, 25, 50, 90, 99, 100]))
def test_percentile_matches_brute_force(values, q):
    assert percentile(values, q) == brute_percentile(values, q)


def test_percentile_small_cases():
    assert percentile([5.0], 50) == 5.0
    assert percentile([1, 2, 3, 4], 50) == 2
    assert percentile(range(1, 11), 90) == 9
    assert percentile(range(1, 11), 10) == 1
    with pytest.raises(ValueError):
        percentile([], 50)


def test_identical_poses_give_zero_table():
    truth = truth_track([0.0, 1.0], [[1, 2, 3], [1, 2, 3]], [[0.1, 0.2, 0.3]] * 2)
    report = evaluate([pose(0.5, [1, 2, 3], (0.1, 0.2, 0.3))], truth)
    for axis in AXES:
        assert report.table()[axis] == {"p10": pytest.approx(0, abs=1e-12), "p50": pytest.approx(0, abs=1e-12),
                                        "p90": pytest.approx(0, abs=1e-12)}


def test_three_four_five_offset():
    truth = truth_track([0.0, 1.0])
    report = evaluate([pose(0.5, [0.03, 0.04, 0.0])], truth)
    t = report.table()
    assert t["3D"]["p50"] == pytest.approx(0.05, abs=1e-15)
    assert t["X"]["p50"] == pytest.approx(0.03)
    assert t["Y"]["p50"] == pytest.approx(0.04)


def test_yaw_wrap_error():
    assert angle_error_deg(math.radians(359), math.radians(1)) == pytest.approx(2.0)
    truth = truth_track([0.0, 1.0], angles=[[0, 0, math.radians(1)]] * 2)
    report = evaluate([pose(0.5, [0, 0, 0], (0, 0, math.radians(359)))], truth)
    assert report.table()["yaw"]["p50"] == pytest.approx(2.0)


@given(st.floats(-4 * math.pi, 4 * math.pi), st.floats(-4 * math.pi, 4 * math.pi))
def test_angle_error_is_in_half_turn(a, b):
    e = angle_error_deg(a, b)
    assert 0.0 <= e <= 180.0


def test_poses_outside_truth_are_excluded_and_counted():
    truth = truth_track([1.0, 2.0])
    report = evaluate([pose(0.5, [0, 0, 0]), pose(1.5, [0.1, 0, 0]), pose(2.5, [0, 0, 0])], truth)
    assert report.n_poses == 1
    assert report.n_excluded == 2


def test_constant_error_gives_flat_series():
    truth = truth_track(np.arange(0, 10.01, 0.5))
    poses = [pose(t, [0.05, 0, 0]) for t in np.arange(0.1, 10, 0.2)]
    bins = error_vs_time(poses, truth, 2.0)
    assert len(bins) == 5
    for b in bins:
        assert b["p10"] == b["p50"] == b["p90"] == pytest.approx(0.05)


def test_single_bin_for_full_width():
    truth = truth_track(np.arange(0, 10.01, 1.0))
    bins = error_vs_time([pose(t, [0.01, 0, 0]) for t in range(10)], truth, 10.0)
    assert len(bins) == 1
    assert bins[0]["n"] == 10


def test_linear_error_ramp():
    truth = truth_track(np.linspace(0, 100, 101))
    ts = np.arange(0.005, 100, 0.01)
    poses = [pose(t, [0.1 * t / 100, 0, 0]) for t in ts]
    bins = error_vs_time(poses, truth, 10.0)
    assert len(bins) == 10
    assert bins[0]["p50"] == pytest.approx(0.005, abs=1e-5)
    assert bins[-1]["p50"] == pytest.approx(0.095, abs=1e-5)


def test_empty_bins_are_gaps():
    bins = binned_percentiles([0.5, 2.5], [1.0, 2.0], 1.0, 0.0, 3.0)
    assert [b["n"] for b in bins] == [1, 0, 1]
    assert bins[1]["p50"] is None


def test_cdf_is_non_decreasing():
    pts = cdf_points(np.random.default_rng(1).exponential(size=200))
    e, f = zip(*pts)
    assert all(np.diff(e) >= 0) and all(np.diff(f) > 0)
    assert f[-1] == 1.0


@settings(max_examples=30, deadline=None)
@given(st.tuples(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50)), st.integers(0, 2**31))
def test_evaluate_is_translation_consistent(offset, seed):
    rng = np.random.default_rng(seed)
    ts = np.linspace(0, 5, 21)
    truth = truth_track(ts, rng.normal(size=(21, 3)), rng.uniform(-1, 1, (21, 3)))
    poses = [pose(t, rng.normal(size=3), rng.uniform(-1, 1, 3)) for t in rng.uniform(0, 5, 15)]
    shifted = [Pose6DoF(p.timestamp, p.position + offset, p.attitude) for p in poses]
    a = evaluate(poses, truth).table()
    b = evaluate(shifted, truth.translated(offset)).table()
    for axis in AXES:
        for k in ("p10", "p50", "p90"):
            assert b[axis][k] == pytest.approx(a[axis][k], abs=1e-9)


def small_scenario(**kw):
    traj = Trajectory("hover", {"position": [0.3, -2.0, 0.2]})
    return Scenario(duration=1.5, trajectory=traj, **kw)


def test_sweep_rejects_bad_requests():
    with pytest.raises(ConfigurationError):
        monte_carlo_sweep(small_scenario(), "chirp_slope", [1.0], 1)
    with pytest.raises(ConfigurationError):
        monte_carlo_sweep(small_scenario(), "noise_power", [], 1)


def test_sweep_noise_free_point_and_determinism():
    a = monte_carlo_sweep(small_scenario(), "noise_power", [0.0, 1.0], 2)
    b = monte_carlo_sweep(small_scenario(), "noise_power", [0.0, 1.0], 2)
    assert len(a.points) == 2
    assert a.summary() == b.summary()
    for pa, pb in zip(a.points, b.points):
        np.testing.assert_array_equal(pa.report.errors["3D"], pb.report.errors["3D"])
    assert a.points[0].report.table()["3D"]["p50"] <= 0.08
    assert a.points[0].diagnostics["yield"] == 1.0
