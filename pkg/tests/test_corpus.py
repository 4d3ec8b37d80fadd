import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uedyn.corpus import (
    BENCHMARK_METRICS,
    benchmark,
    binned_states,
    correlate,
    density_trend,
    discordance,
    discordance_trend,
    movie_discordance,
    peak_density_map,
    rank,
)
from uedyn.errors import InsufficientDataError, PresenceFilterError
from uedyn.screenplay import select_main_characters
from uedyn.synth import SynthSpec, generate
from uedyn.trajectory import Trajectory


def _traj(v, a, times, name="A", first=0.0, last=1.0):
    t = Trajectory.from_scores(v, a, times=times, character=name, movie="m")
    return Trajectory(t.character, t.movie, t.window, t.n_matched_words, t.word_index,
                      t.narrative_time, t.v, t.a, t.token_index, first, last)


def test_benchmark_population_sd_and_missing():
    rows = [{"variability": "0.1"}, {"variability": "0.3"}, {"variability": ""}]
    (b,) = benchmark(rows, ["variability"])
    assert (b.mean, b.n) == (pytest.approx(0.2), 2)
    assert b.sd == pytest.approx(0.1)


def test_benchmark_default_metrics_cover_table_columns():
    assert "density_negative" in BENCHMARK_METRICS and "avg_recovery_rate" in BENCHMARK_METRICS
    with pytest.raises(InsufficientDataError):
        benchmark([])


def test_rank_descending_ties_by_name():
    rows = [
        {"character": "ZED", "movie": "a", "variability": 0.2},
        {"character": "AMY", "movie": "b", "variability": 0.2},
        {"character": "BOB", "movie": "c", "variability": 0.5},
        {"character": "CAL", "movie": "d", "variability": None},
    ]
    assert [r["character"] for r in rank(rows, "variability", 5)] == ["BOB", "AMY", "ZED"]
    assert [r["character"] for r in rank(rows, "variability", 2, ascending=True)] == ["AMY", "ZED"]


def test_discordance_identical_is_zero():
    rng = np.random.default_rng(0)
    t = np.sort(rng.uniform(0, 1, 300))
    v, a = rng.uniform(size=300), rng.uniform(size=300)
    s = discordance(_traj(v, a, t, "A"), _traj(v, a, t, "B"))
    assert np.nanmax(s.distance) == 0.0


def test_discordance_constant_offset():
    t = np.linspace(0, 1, 500)
    s = discordance(_traj(np.full(500, 0.4), np.full(500, 0.5), t, "A"),
                    _traj(np.full(500, 0.4), np.full(500, 0.65), t, "B"))
    assert s.coverage.all()
    np.testing.assert_allclose(s.distance, 0.15, atol=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_discordance_symmetric(seed):
    rng = np.random.default_rng(seed)
    ta, tb = np.sort(rng.uniform(0, 1, 80)), np.sort(rng.uniform(0, 1, 120))
    a = _traj(rng.uniform(size=80), rng.uniform(size=80), ta, "A")
    b = _traj(rng.uniform(size=120), rng.uniform(size=120), tb, "B")
    ab = discordance(a, b, presence_window=None).distance
    ba = discordance(b, a, presence_window=None).distance
    np.testing.assert_array_equal(np.isnan(ab), np.isnan(ba))
    np.testing.assert_allclose(ab[~np.isnan(ab)], ba[~np.isnan(ba)], atol=1e-12)


def test_binned_states_mean_per_bin():
    tr = _traj([0.2, 0.4, 0.9], [0.1, 0.3, 0.5], [0.003, 0.007, 0.995])
    st_ = binned_states(tr, 100)
    assert st_[0].tolist() == pytest.approx([0.3, 0.2])
    assert st_[99].tolist() == pytest.approx([0.9, 0.5])
    assert np.isnan(st_[50]).all()


def test_presence_filter():
    t = np.linspace(0, 1, 50)
    late = _traj(np.full(50, 0.5), np.full(50, 0.5), t, "LATE", first=0.3, last=1.0)
    ok = _traj(np.full(50, 0.5), np.full(50, 0.5), t, "OK")
    with pytest.raises(PresenceFilterError):
        discordance(late, ok)
    md = movie_discordance([late, ok, _traj(np.full(50, 0.1), np.full(50, 0.5), t, "OK2")])
    assert md.skipped == [("LATE", "presence filter")]
    assert [(s.char_a, s.char_b) for s in md.series] == [("OK", "OK2")]


def test_discordance_trend_band_contains_mean():
    rng = np.random.default_rng(2)
    t = np.linspace(0, 1, 400)
    series = [
        discordance(_traj(rng.uniform(size=400), rng.uniform(size=400), t, "A"),
                    _traj(rng.uniform(size=400), rng.uniform(size=400), t, "B"))
        for _ in range(10)
    ]
    tr = discordance_trend(series, n_boot=50, seed=0)
    ok = ~np.isnan(tr.mean)
    assert np.all(tr.lo[ok] <= tr.mean[ok]) and np.all(tr.mean[ok] <= tr.hi[ok])


def test_correlate_exact_line():
    x = np.linspace(-3, 7, 50)
    assert correlate(x, 2 * x + 1) == 1.0


def test_correlate_errors():
    with pytest.raises(InsufficientDataError):
        correlate([1, 2], [3, 4])
    with pytest.raises(InsufficientDataError):
        correlate([1, 1, 1], [1, 2, 3])


@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=3, max_size=40))
def test_correlate_matches_numpy(pairs):
    x, y = np.array(pairs).T
    if np.ptp(x) < 1e-6 or np.ptp(y) < 1e-6:
        return
    try:
        r = correlate(x, y)
    except InsufficientDataError:
        return
    assert -1.0 <= r <= 1.0
    assert r == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-9)


def test_peak_map_normalized():
    rng = np.random.default_rng(0)
    m = peak_density_map(rng.normal([0.3, 0.7], 0.05, size=(500, 2)))
    assert m.density.shape == (50, 50)
    assert m.density.max() == pytest.approx(1.0) and m.density.min() >= 0
    i, j = np.unravel_index(np.argmax(m.density), m.density.shape)
    assert abs((i + 0.5) / 50 - 0.3) < 0.06 and abs((j + 0.5) / 50 - 0.7) < 0.06


def test_density_trend_band_and_shape():
    spec = SynthSpec(seed=3, n_characters=60, tokens_per_character=1500,
                     tag_probs={"negative": [[0.0, 0.10], [0.9, 0.30], [1.0, 0.20]]})
    corpus = generate(spec)
    ds = [d for s in corpus.scripts for d in select_main_characters(s, 1)]
    curve = density_trend(ds, corpus.categories, "negative", n_boot=20)
    assert curve.extremum_kind == "max"
    assert 0.8 <= curve.extremum_time <= 0.97
    assert np.all(curve.lo <= curve.estimate) and np.all(curve.estimate <= curve.hi)
    assert curve.estimate[0] < curve.estimate[np.argmax(curve.estimate)]
    assert math.isclose(curve.grid[-1], 1.0)
