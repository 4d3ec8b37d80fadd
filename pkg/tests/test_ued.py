import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from uedyn.errors import DegenerateHomeBaseError, InsufficientDataError, ValidationError
from uedyn.synth import oracle_displacements, oracle_perimeter_distance
from uedyn.trajectory import Trajectory
from uedyn.ued import (
    HomeBase2D,
    chi2_quantile_2dof,
    detect_displacements,
    distance_to_perimeter,
    home_base_1d,
    home_base_2d,
    nearest_perimeter_points,
    summarize_profile,
    variability,
)


def _direct_band(x, alpha):
    # independent evaluation: explicit loops, population variance
    n = len(x)
    m = sum(x) / n
    var = sum((v - m) ** 2 for v in x) / n
    q = stats.t.ppf((1 + alpha) / 2, df=n - 1)
    return m - q * math.sqrt(var / n), m + q * math.sqrt(var / n)


def test_home_base_1d_matches_direct():
    rng = np.random.default_rng(3)
    for _ in range(200):
        x = rng.normal(rng.uniform(0, 1), rng.uniform(0.01, 0.3), size=int(rng.integers(2, 80)))
        hb = home_base_1d(x)
        lo, hi = _direct_band(list(x), 0.68)
        assert hb.lower == pytest.approx(lo, abs=1e-12)
        assert hb.upper == pytest.approx(hi, abs=1e-12)


def test_home_base_1d_constant_series_zero_width():
    hb = home_base_1d([0.4] * 12)
    assert hb.lower == hb.upper == pytest.approx(0.4, abs=1e-15)


def test_home_base_1d_errors():
    with pytest.raises(InsufficientDataError):
        home_base_1d([0.1])
    with pytest.raises(ValidationError):
        home_base_1d([0.1, 0.2], alpha=1.0)


@pytest.mark.parametrize("c", [0.5, 0.68, 0.9, 0.95, 0.99])
def test_chi2_closed_form_vs_integration(c):
    q = chi2_quantile_2dof(c)
    mass, _ = integrate.quad(lambda x: 0.5 * math.exp(-x / 2), 0, q, epsabs=1e-13, limit=200)
    assert mass == pytest.approx(c, abs=1e-10)


def test_home_base_2d_population_covariance():
    xy = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [2.0, 1.0]])
    hb = home_base_2d(xy, 0.68)
    np.testing.assert_allclose(hb.center, [1.0, 0.5])
    np.testing.assert_allclose(hb.eigenvalues, [1.0, 0.25])
    assert hb.semi_major == pytest.approx(math.sqrt(-2 * math.log(0.32)))
    np.testing.assert_allclose(hb.covariance, [[1.0, 0.0], [0.0, 0.25]], atol=1e-15)


def test_home_base_2d_degenerate():
    with pytest.raises(DegenerateHomeBaseError):
        home_base_2d(np.column_stack([np.linspace(0, 1, 10), np.linspace(0, 1, 10)]))
    with pytest.raises(InsufficientDataError):
        home_base_2d(np.zeros((2, 2)))


def test_coverage_of_bivariate_normal():
    rng = np.random.default_rng(11)
    xy = rng.multivariate_normal([0.5, 0.5], [[0.02, 0.006], [0.006, 0.01]], size=100_000)
    for c, band in ((0.68, (0.66, 0.70)), (0.95, (0.94, 0.96))):
        frac = home_base_2d(xy, c).contains(xy).mean()
        assert band[0] <= frac <= band[1]


def _hb(a, b, angle=0.0, center=(0.0, 0.0)):
    """Home base with given semi-axes at chi2 = 1."""
    u = np.array([math.cos(angle), math.sin(angle)])
    w = np.array([-u[1], u[0]])
    return HomeBase2D(np.array(center, float), np.array([a * a, b * b]), np.column_stack([u, w]), 1.0, 0.39, 10)


def test_circle_distance_exact():
    assert distance_to_perimeter((2.0, 0.0), _hb(1, 1)) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("p", [(0.0, 3.0), (4.0, 0.0), (0.0, 0.0), (0.0, 0.5)])
def test_axis_points(p):
    hb = _hb(2.0, 1.0)
    assert distance_to_perimeter(p, hb) == pytest.approx(oracle_perimeter_distance(p, hb), abs=1e-6)


def test_newton_against_dense_sampling():
    rng = np.random.default_rng(5)
    for _ in range(60):
        a = rng.uniform(0.02, 0.5)
        b = a / rng.uniform(1, 50)
        hb = _hb(a, b, rng.uniform(0, np.pi), rng.uniform(0, 1, 2))
        p = hb.center + rng.normal(0, 2 * a, 2)
        res = nearest_perimeter_points([p], hb)[0]
        assert not res.degraded
        assert res.distance == pytest.approx(oracle_perimeter_distance(p, hb, 200_000), abs=1e-4)
        # the returned point lies on the ellipse
        assert hb.mahalanobis2(res.point)[0] == pytest.approx(1.0, abs=1e-6)


@given(st.floats(0.05, 1), st.floats(1, 50), st.floats(-3, 3), st.floats(-3, 3))
def test_distance_nonnegative_and_bounded(a, ratio, x, y):
    hb = _hb(a, a / ratio)
    d = distance_to_perimeter((x, y), hb)
    assert d >= 0
    # never farther than the distance to the nearest vertex on the major axis
    assert d <= min(math.hypot(x - a, y), math.hypot(x + a, y)) + 1e-9


def test_variability_mean_of_sds():
    xy = np.array([[0, 0], [2, 0], [0, 2], [2, 2]], float)
    assert variability(xy) == pytest.approx(1.0)
    assert variability(xy, squared=True) == pytest.approx(1.0)
    xy2 = np.array([[0, 0], [4, 0], [0, 2], [4, 2]], float)
    assert variability(xy2) == pytest.approx(1.5)
    assert variability(xy2, squared=True) == pytest.approx(2.5)


def _traj(xy):
    xy = np.asarray(xy, float)
    return Trajectory.from_scores(xy[:, 0], xy[:, 1])


def test_excursion_along_major_axis():
    hb = _hb(1.0, 0.5)
    xs = [0, 0, 1.2, 1.5, 1.8, 1.5, 1.2, 0, 0]
    (d,) = detect_displacements(_traj([[x, 0.0] for x in xs]), hb)
    assert (d.exit_index, d.peak_index, d.return_index) == (2, 4, 7)
    assert (d.rise_words, d.recovery_words, d.length_words) == (2, 3, 6)
    assert d.peak_distance == pytest.approx(0.8, abs=1e-12)


def test_worked_example_rates():
    hb = _hb(1.0, 1.0)
    xs = [0, 1.5, 2.0, 1.5, 0]
    (d,) = detect_displacements(_traj([[x, 0] for x in xs]), hb)
    assert (d.exit_index, d.peak_index, d.return_index) == (1, 2, 4)
    assert d.rise_rate == pytest.approx(1.0)
    assert d.recovery_rate == pytest.approx(0.5)
    assert d.length_words == 4 and d.complete


@pytest.mark.parametrize("rise", [1, 2, 3, 5, 8])
def test_symmetric_rates_exact(rise):
    # as many words from exit to peak as from peak to return
    hb = _hb(1.0, 1.0)
    ramp = list(np.linspace(1.1, 2.7, rise + 1))
    xs = [0.0] + ramp + ramp[-2:0:-1] + [0.0]
    (d,) = detect_displacements(_traj([[x, 0] for x in xs]), hb)
    assert d.rise_words == d.recovery_words == rise
    assert d.rise_rate == pytest.approx(d.recovery_rate, abs=1e-12)


def test_front_and_trailing_excursions():
    hb = _hb(1.0, 1.0)
    xs = [2.0, 0.0, 0.0, 3.0, 2.0]
    ds = detect_displacements(_traj([[x, 0] for x in xs]), hb)
    assert [d.complete for d in ds] == [False, False]
    assert ds[0].front_truncated and ds[0].rise_rate is None
    assert ds[1].return_index is None and ds[1].recovery_rate is None


trajectories = st.lists(
    st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=40
)


@given(trajectories, st.floats(0.2, 2.0), st.floats(1.0, 8.0), st.floats(0, 3.2))
def test_displacements_match_oracle(pts, a, ratio, angle):
    hb = _hb(a, a / ratio, angle)
    got = detect_displacements(_traj(pts), hb)
    want = oracle_displacements(pts, hb, samples=4000)
    assert [(d.exit_index, d.return_index, d.complete) for d in got] == [
        (w["exit_index"], w["return_index"], w["complete"]) for w in want
    ]
    for d, w in zip(got, want):
        assert d.peak_distance == pytest.approx(w["peak_distance"], abs=2e-3 * a)


@given(trajectories, st.floats(0.2, 2.0), st.floats(1.0, 8.0))
def test_displacement_invariants(pts, a, ratio):
    hb = _hb(a, a / ratio)
    traj = _traj(pts)
    inside = hb.contains(traj.xy)
    prev_end = -1
    for d in detect_displacements(traj, hb):
        assert d.exit_index > prev_end
        assert d.exit_index == 0 or inside[d.exit_index - 1]
        assert not inside[d.exit_index] and not inside[d.peak_index]
        assert d.peak_distance >= 0
        if d.return_index is not None:
            assert inside[d.return_index]
            assert d.rise_words + d.recovery_words >= d.length_words - 1
            prev_end = d.return_index
        else:
            prev_end = len(pts)


def test_summary_requires_min_complete():
    hb = _hb(1.0, 1.0)
    xs = [0, 2, 0] * 3 + [0]
    traj = _traj([[x, 0] for x in xs])
    ds = detect_displacements(traj, hb)
    assert len(ds) == 3
    p = summarize_profile(traj, hb, ds, min_displacements=5)
    assert p.displacement_count == 3 and p.avg_rise_rate is None
    p = summarize_profile(traj, hb, ds, min_displacements=3)
    assert p.avg_peak_distance == pytest.approx(1.0)
    assert p.avg_displacement_length == pytest.approx(2.0)
