"""Corpus-level aggregation: benchmarks, density trends, discordance and peak maps."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from uedyn.errors import InsufficientDataError, PresenceFilterError, ValidationError
from uedyn.lexicons import CATEGORIES, CategoryLexicon
from uedyn.screenplay import CharacterDialogue
from uedyn.smoothing import Stats, fit_pspline, knot_vector, sufficient_stats
from uedyn.trajectory import Trajectory, presence_span, rolling_density

# categories whose trend extremum of interest is a minimum
LOW_POINT_CATEGORIES = frozenset({"positive", "joy", "trust", "anticipation"})

BENCHMARK_METRICS = (
    *(f"density_{c}" for c in CATEGORIES),
    "mean_v",
    "mean_a",
    "hb_semi_major",
    "hb_semi_minor",
    "variability",
    "displacement_count",
    "avg_displacement_length",
    "avg_peak_distance",
    "avg_rise_rate",
    "avg_recovery_rate",
)


# --- benchmarks ----------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkRow:
    metric: str
    mean: float
    sd: float
    n: int


def _as_float(value):
    if value is None or value == "":
        return None
    x = float(value)
    return None if math.isnan(x) else x


def benchmark(profiles, metrics=BENCHMARK_METRICS) -> list[BenchmarkRow]:
    """Mean and population SD of each metric over the profiles that report it.

    ``profiles`` are flat row dicts (see ``uedyn.report.profile_row``); rows
    with a missing value for a metric are left out of that metric only.
    """
    profiles = list(profiles)
    if not profiles:
        raise InsufficientDataError("benchmark needs at least one profile")
    rows = []
    for metric in metrics:
        vals = [_as_float(p.get(metric)) for p in profiles]
        vals = np.array([v for v in vals if v is not None])
        if len(vals) == 0:
            rows.append(BenchmarkRow(metric, float("nan"), float("nan"), 0))
            continue
        mean = float(vals.mean())
        sd = float(np.sqrt(np.mean((vals - mean) ** 2)))
        rows.append(BenchmarkRow(metric, mean, sd, len(vals)))
    return rows


def rank(profiles, metric: str, top_n: int = 5, ascending: bool = False) -> list[dict]:
    """Profiles ordered by ``metric`` (descending by default), ties by character name.

    Profiles without a value for the metric are excluded.
    """
    kept = [p for p in profiles if _as_float(p.get(metric)) is not None]
    sign = 1.0 if ascending else -1.0
    kept.sort(key=lambda p: (sign * _as_float(p[metric]), p["character"], p.get("movie", "")))
    out = []
    for i, p in enumerate(kept[:top_n] if top_n else kept, start=1):
        out.append({"rank": i, "character": p["character"], "movie": p.get("movie", ""), metric: _as_float(p[metric])})
    return out


# --- density trends ------------------------------------------------------


def passes_presence(first: float, last: float, window: float = 0.10) -> bool:
    return first <= window and last >= 1.0 - window


@dataclass(frozen=True)
class TrendCurve:
    category: str
    grid: np.ndarray
    estimate: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    extremum_time: float
    extremum_kind: str
    lam: float
    edf: float
    n_characters: int
    n_samples: int


def _extremum(grid, values, kind):
    k = int(np.argmin(values) if kind == "min" else np.argmax(values))
    return float(grid[k])


def density_trend(
    dialogues: list[CharacterDialogue],
    lex: CategoryLexicon,
    category: str,
    window: int = 30,
    presence_window: float | None = None,
    time_basis: str = "character",
    n_knots: int = 20,
    grid_size: int = 200,
    n_boot: int = 200,
    seed: int = 0,
    equal_weight: bool = False,
    extremum: str | None = None,
) -> TrendCurve:
    """Pooled P-spline trend of rolling category density over narrative time.

    Every rolling-window sample counts once unless ``equal_weight`` gives each
    character the same total weight. The 95% band comes from resampling
    whole characters.
    """
    if category not in CATEGORIES:
        raise ValidationError(f"unknown category {category!r}")
    kind = extremum or ("min" if category in LOW_POINT_CATEGORIES else "max")
    knots = knot_vector(n_knots)
    groups: list[Stats] = []
    n_samples = 0
    for d in dialogues:
        if presence_window is not None and not passes_presence(*presence_span(d), presence_window):
            continue
        series = rolling_density(d, lex, category, window, time_basis=time_basis)
        if series.insufficient:
            continue
        w = 1.0 / len(series) if equal_weight else None
        groups.append(sufficient_stats(series.times, series.values, knots, w))
        n_samples += len(series)
    if not groups:
        raise InsufficientDataError(f"no rolling-density samples for {category!r}")
    if equal_weight:
        # rescale so weights sum to the sample count
        f = n_samples / len(groups)
        groups = [Stats(g.gram * f, g.rhs * f, g.yy * f, g.n * f) for g in groups]

    grams = np.stack([g.gram for g in groups])
    rhss = np.stack([g.rhs for g in groups])
    yys = np.array([g.yy for g in groups])
    ns = np.array([g.n for g in groups])

    def pooled(counts):
        return Stats(
            np.tensordot(counts, grams, axes=1),
            counts @ rhss,
            float(counts @ yys),
            float(counts @ ns),
        )

    grid = np.linspace(0.0, 1.0, grid_size)
    fit = fit_pspline(pooled(np.ones(len(groups))), knots)
    est = np.clip(fit(grid), 0.0, 1.0)

    if n_boot > 0:
        rng = np.random.default_rng(seed)
        reps = np.empty((n_boot, grid_size))
        for r in range(n_boot):
            counts = np.bincount(rng.integers(len(groups), size=len(groups)), minlength=len(groups))
            reps[r] = np.clip(fit_pspline(pooled(counts.astype(float)), knots)(grid), 0.0, 1.0)
        lo = np.minimum(np.percentile(reps, 2.5, axis=0), est)
        hi = np.maximum(np.percentile(reps, 97.5, axis=0), est)
    else:
        lo = hi = est.copy()
    return TrendCurve(
        category, grid, est, lo, hi, _extremum(grid, est, kind), kind,
        fit.lam, fit.edf, len(groups), n_samples,
    )


# --- discordance ---------------------------------------------------------


@dataclass(frozen=True)
class DiscordanceSeries:
    movie: str
    char_a: str
    char_b: str
    bin_t: np.ndarray
    distance: np.ndarray  # NaN where either character has no point in the bin

    @property
    def coverage(self) -> np.ndarray:
        return ~np.isnan(self.distance)


def bin_index(times, bins: int) -> np.ndarray:
    return np.clip(np.floor(np.asarray(times, dtype=float) * bins).astype(int), 0, bins - 1)


def binned_states(traj: Trajectory, bins: int = 100) -> np.ndarray:
    """Per-bin mean (v, a) of trajectory points on movie time; NaN for empty bins."""
    idx = bin_index(traj.narrative_time, bins)
    counts = np.bincount(idx, minlength=bins).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.bincount(idx, weights=traj.v, minlength=bins) / counts
        a = np.bincount(idx, weights=traj.a, minlength=bins) / counts
    return np.column_stack([v, a])


def bin_centers(bins: int) -> np.ndarray:
    return (np.arange(bins) + 0.5) / bins


def discordance(
    traj_a: Trajectory,
    traj_b: Trajectory,
    bins: int = 100,
    presence_window: float = 0.10,
) -> DiscordanceSeries:
    """Distance between two characters' binned (v, a) states over movie time."""
    if bins < 1:
        raise ValidationError("bins must be >= 1")
    for t in (traj_a, traj_b):
        if presence_window is not None and not passes_presence(t.first_time, t.last_time, presence_window):
            raise PresenceFilterError(
                f"{t.character} ({t.movie}) is not present in both the first and last "
                f"{presence_window:.0%} of the movie"
            )
    sa = binned_states(traj_a, bins)
    sb = binned_states(traj_b, bins)
    dist = np.sqrt(((sa - sb) ** 2).sum(axis=1))
    return DiscordanceSeries(traj_a.movie, traj_a.character, traj_b.character, bin_centers(bins), dist)


@dataclass
class MovieDiscordance:
    series: list[DiscordanceSeries] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (character, reason)


def movie_discordance(trajectories: list[Trajectory], bins: int = 100, presence_window: float = 0.10) -> MovieDiscordance:
    """All pairs of eligible characters within one movie, in name order."""
    out = MovieDiscordance()
    eligible = []
    for t in sorted(trajectories, key=lambda t: t.character):
        if t.insufficient:
            out.skipped.append((t.character, "insufficient trajectory"))
        elif presence_window is not None and not passes_presence(t.first_time, t.last_time, presence_window):
            out.skipped.append((t.character, "presence filter"))
        else:
            eligible.append(t)
    for a, b in itertools.combinations(eligible, 2):
        out.series.append(discordance(a, b, bins, presence_window))
    return out


@dataclass(frozen=True)
class BinnedTrend:
    bin_t: np.ndarray
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n: np.ndarray
    peak_time: float


def _nanmean_rows(mat: np.ndarray) -> np.ndarray:
    cnt = (~np.isnan(mat)).sum(axis=0)
    tot = np.nansum(mat, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, tot / np.maximum(cnt, 1), np.nan)


def discordance_trend(series: list[DiscordanceSeries], n_boot: int = 200, seed: int = 0) -> BinnedTrend:
    """Average discordance per bin across pairs, with a pair-level bootstrap band."""
    if not series:
        raise InsufficientDataError("no discordance series to average")
    mat = np.vstack([s.distance for s in series])
    mean = _nanmean_rows(mat)
    if n_boot > 0:
        rng = np.random.default_rng(seed)
        reps = np.vstack([
            _nanmean_rows(mat[rng.integers(len(series), size=len(series))]) for _ in range(n_boot)
        ])
        with np.errstate(invalid="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN bins
            lo = np.fmin(np.nanpercentile(reps, 2.5, axis=0), mean)
            hi = np.fmax(np.nanpercentile(reps, 97.5, axis=0), mean)
    else:
        lo = hi = mean.copy()
    n = (~np.isnan(mat)).sum(axis=0)
    peak = float(series[0].bin_t[int(np.nanargmax(mean))]) if np.any(~np.isnan(mean)) else float("nan")
    return BinnedTrend(series[0].bin_t, mean, lo, hi, n, peak)


def binned_density(
    dialogues: list[CharacterDialogue],
    lex: CategoryLexicon,
    category: str,
    bins: int = 100,
    window: int = 30,
    presence_window: float | None = None,
) -> np.ndarray:
    """Pooled mean rolling density per movie-time bin (NaN for empty bins)."""
    tot = np.zeros(bins)
    cnt = np.zeros(bins)
    for d in dialogues:
        if presence_window is not None and not passes_presence(*presence_span(d), presence_window):
            continue
        s = rolling_density(d, lex, category, window, time_basis="movie")
        if s.insufficient:
            continue
        idx = bin_index(s.times, bins)
        tot += np.bincount(idx, weights=s.values, minlength=bins)
        cnt += np.bincount(idx, minlength=bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, tot / np.maximum(cnt, 1), np.nan)


def correlate(x, y) -> float:
    """Sample Pearson correlation of two aligned series."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("correlate needs two aligned one-dimensional series")
    if len(x) < 3:
        raise InsufficientDataError(f"correlation needs at least 3 pairs, got {len(x)}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise InsufficientDataError("correlation is undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# --- peak locations ------------------------------------------------------


@dataclass(frozen=True)
class PeakDensityMap:
    density: np.ndarray  # [valence bin, arousal bin]
    v_edges: np.ndarray
    a_edges: np.ndarray
    n_peaks: int
    bandwidth: float

    def to_json(self) -> dict:
        return {
            "density": [[round(float(x), 12) for x in row] for row in self.density],
            "axes": {
                "rows": "valence",
                "cols": "arousal",
                "v_edges": [float(x) for x in self.v_edges],
                "a_edges": [float(x) for x in self.a_edges],
            },
            "n_peaks": self.n_peaks,
            "bandwidth_bins": self.bandwidth,
        }


def peak_density_map(peaks, bins: int = 50, bandwidth: float = 2.0) -> PeakDensityMap:
    """Gaussian-smoothed 2D histogram of peak (v, a) locations scaled to max 1."""
    pts = np.asarray(peaks, dtype=float).reshape(-1, 2)
    edges = np.linspace(0.0, 1.0, bins + 1)
    hist, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=[edges, edges])
    smooth = gaussian_filter(hist, sigma=bandwidth, mode="reflect")
    top = smooth.max()
    if top > 0:
        smooth = smooth / top
    return PeakDensityMap(np.clip(smooth, 0.0, 1.0), edges, edges, len(pts), bandwidth)
