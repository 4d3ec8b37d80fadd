"""Home bases, variability and displacement metrics for a trajectory."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from uedyn.errors import DegenerateHomeBaseError, InsufficientDataError, ValidationError
from uedyn.trajectory import Trajectory

MIN_EIGENVALUE = 1e-12
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 100
FALLBACK_SAMPLES = 4096
DEFAULT_MIN_DISPLACEMENTS = 5


@dataclass(frozen=True)
class HomeBase1D:
    mean: float
    lower: float
    upper: float
    alpha: float
    n: int

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.lower) & (x <= self.upper)


def home_base_1d(series, alpha: float = 0.68) -> HomeBase1D:
    """Confidence band ``mean +/- t * sqrt(var / n)`` at two-sided confidence ``alpha``.

    The variance uses the population (divide-by-n) form.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 2:
        raise InsufficientDataError(f"home base needs at least 2 values, got {n}")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"confidence must be in (0, 1), got {alpha}")
    mean = float(x.mean())
    # a constant series must give an exactly zero-width band despite rounding in the mean
    var = 0.0 if np.ptp(x) == 0 else float(np.mean((x - mean) ** 2))
    half = stats.t.ppf(0.5 + alpha / 2.0, n - 1) * math.sqrt(var / n)
    return HomeBase1D(mean, mean - half, mean + half, alpha, n)


def chi2_quantile_2dof(confidence: float) -> float:
    """Closed-form chi-square quantile for two degrees of freedom."""
    if not 0.0 < confidence < 1.0:
        raise ValidationError(f"confidence must be in (0, 1), got {confidence}")
    return -2.0 * math.log1p(-confidence)


@dataclass(frozen=True)
class HomeBase2D:
    """Confidence ellipse of a trajectory in valence-arousal space.

    ``eigenvectors[:, k]`` is the unit axis for ``eigenvalues[k]``; the major
    axis comes first.
    """

    center: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    chi2_crit: float
    confidence: float
    n: int

    @property
    def semi_major(self) -> float:
        return math.sqrt(self.chi2_crit * self.eigenvalues[0])

    @property
    def semi_minor(self) -> float:
        return math.sqrt(self.chi2_crit * self.eigenvalues[1])

    @property
    def semi_axes(self) -> np.ndarray:
        return np.sqrt(self.chi2_crit * self.eigenvalues)

    @property
    def covariance(self) -> np.ndarray:
        q = self.eigenvectors
        return q @ np.diag(self.eigenvalues) @ q.T

    def to_local(self, points) -> np.ndarray:
        """Coordinates along (major, minor) axes relative to the centre."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return (p - self.center) @ self.eigenvectors

    def mahalanobis2(self, points) -> np.ndarray:
        local = self.to_local(points)
        return local[:, 0] ** 2 / self.eigenvalues[0] + local[:, 1] ** 2 / self.eigenvalues[1]

    def contains(self, points) -> np.ndarray:
        return self.mahalanobis2(points) <= self.chi2_crit


def _orient(vectors: np.ndarray) -> np.ndarray:
    # deterministic sign: largest-magnitude component of each axis positive
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            out[:, k] = -col
    return out


def home_base_2d(traj, confidence: float = 0.68) -> HomeBase2D:
    xy = traj.xy if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    n = len(xy)
    if n < 3:
        raise InsufficientDataError(f"2D home base needs at least 3 points, got {n}")
    center = xy.mean(axis=0)
    cov = np.cov(xy, rowvar=False, bias=True)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = _orient(vecs[:, order])
    if vals[1] <= MIN_EIGENVALUE:
        raise DegenerateHomeBaseError(
            f"covariance is singular (smallest eigenvalue {vals[1]:.3g})"
        )
    return HomeBase2D(center, vals, vecs, chi2_quantile_2dof(confidence), confidence, n)


class PerimeterPoint(NamedTuple):
    point: np.ndarray
    distance: float
    iterations: int
    degraded: bool


def _nearest_on_axes(x, y, a, b):
    """Nearest perimeter points of the axis-aligned ellipse (a >= b) for x, y >= 0.

    Solves the Lagrange condition
    ``(a x / (t + a^2))^2 + (b y / (t + b^2))^2 = 1`` for ``t > -b^2`` with a
    damped Newton iteration. The left-hand side is convex and decreasing, so
    starting where it is positive the iterates approach the root from below.
    Returns ``(px, py, iterations, converged)`` arrays.
    """
    m = len(x)
    px = np.empty(m)
    py = np.empty(m)
    iters = np.zeros(m, dtype=int)
    ok = np.ones(m, dtype=bool)

    circle = np.isclose(a, b, rtol=1e-12, atol=0.0)
    # coordinates this close to an axis would put the Newton start on the pole
    on_minor = (x <= 1e-12 * a) & ~circle
    on_major = (y <= 1e-12 * b) & ~circle & ~on_minor
    general = ~(circle | on_minor | on_major)

    r = np.hypot(x, y)
    # circle: radial projection; the centre maps to (a, 0)
    c = circle & (r > 0)
    px[c] = a[c] * x[c] / r[c]
    py[c] = a[c] * y[c] / r[c]
    c0 = circle & (r == 0)
    px[c0] = a[c0]
    py[c0] = 0.0

    px[on_minor] = 0.0
    py[on_minor] = b[on_minor]

    if on_major.any():
        xa, aa, bb = x[on_major], a[on_major], b[on_major]
        cut = (aa * aa - bb * bb) / aa
        inner = xa < cut
        x0 = np.where(inner, aa * aa * xa / (aa * aa - bb * bb), aa)
        px[on_major] = x0
        py[on_major] = np.where(inner, bb * np.sqrt(np.clip(1 - (x0 / aa) ** 2, 0, None)), 0.0)

    if general.any():
        xg, yg, ag, bg = x[general], y[general], a[general], b[general]
        a2, b2 = ag * ag, bg * bg
        t = np.maximum(-b2 + bg * yg, -a2 + ag * xg)
        active = np.ones(len(xg), dtype=bool)
        count = np.zeros(len(xg), dtype=int)
        for _ in range(NEWTON_MAX_ITER):
            if not active.any():
                break
            ta = t[active]
            u = ag[active] * xg[active] / (ta + a2[active])
            w = bg[active] * yg[active] / (ta + b2[active])
            f = u * u + w * w - 1.0
            df = -2.0 * (u * u / (ta + a2[active]) + w * w / (ta + b2[active]))
            step = -f / df
            new = ta + step
            # damping: never cross the pole at -b^2
            floor = -b2[active]
            bad = new <= floor
            while bad.any():
                step[bad] *= 0.5
                new = ta + step
                bad = new <= floor
            t[active] = new
            count[active] += 1
            done = np.abs(step) < NEWTON_TOL
            idx = np.flatnonzero(active)
            active[idx[done]] = False
        iters[general] = count
        ok[general] = ~active
        px[general] = a2 * xg / (t + a2)
        py[general] = b2 * yg / (t + b2)
    return px, py, iters, ok


def _sampled_nearest(local, a, b, samples=FALLBACK_SAMPLES):
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    ex = a * np.cos(theta)
    ey = b * np.sin(theta)
    d = np.hypot(ex - local[0], ey - local[1])
    k = int(np.argmin(d))
    return np.array([ex[k], ey[k]]), float(d[k])


def nearest_perimeter_points(points, hb: HomeBase2D) -> list[PerimeterPoint]:
    """Closest ellipse-perimeter point (in v-a coordinates) for each input point."""
    local = hb.to_local(points)
    a_ax, b_ax = hb.semi_axes
    m = len(local)
    ax = np.abs(local[:, 0])
    ay = np.abs(local[:, 1])
    px, py, iters, ok = _nearest_on_axes(ax, ay, np.full(m, a_ax), np.full(m, b_ax))
    sx = np.where(local[:, 0] < 0, -1.0, 1.0)
    sy = np.where(local[:, 1] < 0, -1.0, 1.0)
    near_local = np.column_stack([px * sx, py * sy])
    out = []
    for k in range(m):
        if ok[k]:
            near = near_local[k]
            dist = float(np.hypot(local[k, 0] - near[0], local[k, 1] - near[1]))
            degraded = False
        else:
            near, dist = _sampled_nearest(local[k], a_ax, b_ax)
            degraded = True
        world = hb.center + hb.eigenvectors @ near
        out.append(PerimeterPoint(world, dist, int(iters[k]), degraded))
    return out


def distances_to_perimeter(points, hb: HomeBase2D) -> np.ndarray:
    return np.array([p.distance for p in nearest_perimeter_points(points, hb)])


def distance_to_perimeter(point, hb: HomeBase2D) -> float:
    """Euclidean distance from ``point`` to the nearest point on the ellipse boundary."""
    return nearest_perimeter_points([point], hb)[0].distance


def variability(traj, squared: bool = False) -> float:
    """Mean of the per-dimension population SDs of the trajectory points.

    ``squared=True`` averages the variances instead.
    """
    xy = traj.xy if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    if xy.ndim == 1:
        xy = xy[:, None]
    if len(xy) < 2:
        raise InsufficientDataError(f"variability needs at least 2 points, got {len(xy)}")
    var = np.mean((xy - xy.mean(axis=0)) ** 2, axis=0)
    return float(np.mean(var if squared else np.sqrt(var)))


@dataclass(frozen=True)
class Displacement:
    exit_index: int
    peak_index: int
    return_index: int | None
    peak_distance: float
    length_words: int | None
    rise_words: int
    recovery_words: int | None
    rise_rate: float | None
    recovery_rate: float | None
    complete: bool
    front_truncated: bool = False
    peak_point: tuple[float, float] | None = None

    def index_key(self):
        return (self.exit_index, self.peak_index, self.return_index, self.complete)


def _episodes(inside: np.ndarray) -> list[tuple[int, int | None]]:
    """(first outside index, first inside index after it or None) for every excursion."""
    out = np.flatnonzero(~inside)
    if len(out) == 0:
        return []
    starts = out[np.concatenate(([True], np.diff(out) > 1))]
    ends = out[np.concatenate((np.diff(out) > 1, [True]))] + 1
    n = len(inside)
    return [(int(s), int(e) if e < n else None) for s, e in zip(starts, ends)]


def detect_displacements(
    traj: Trajectory,
    hb: HomeBase2D,
    length_unit: str = "matched",
) -> list[Displacement]:
    """Excursions of the trajectory outside the home-base ellipse.

    Lengths count matched words from the exit point through the return point
    inclusive; ``length_unit="tokens"`` counts every token the character
    uttered over the same span instead.
    """
    if length_unit not in ("matched", "tokens"):
        raise ValidationError(f"length_unit must be 'matched' or 'tokens', got {length_unit!r}")
    xy = traj.xy
    if len(xy) == 0:
        return []
    inside = hb.contains(xy)
    episodes = _episodes(inside)
    if not episodes:
        return []
    outside_idx = np.flatnonzero(~inside)
    dist = np.zeros(len(xy))
    dist[outside_idx] = distances_to_perimeter(xy[outside_idx], hb)

    result = []
    for exit_i, ret in episodes:
        stop = ret if ret is not None else len(xy)
        peak = exit_i + int(np.argmax(dist[exit_i:stop]))
        peak_d = float(dist[peak])
        front = exit_i == 0
        rise = max(peak - exit_i, 1)
        if ret is not None:
            if length_unit == "matched":
                length = ret - exit_i + 1
            else:
                length = int(traj.token_index[ret] - traj.token_index[exit_i]) + 1
            recovery = ret - peak
            rec_rate = peak_d / recovery
        else:
            length = recovery = rec_rate = None
        result.append(
            Displacement(
                exit_index=exit_i,
                peak_index=peak,
                return_index=ret,
                peak_distance=peak_d,
                length_words=length,
                rise_words=rise,
                recovery_words=recovery,
                rise_rate=None if front else peak_d / rise,
                recovery_rate=rec_rate,
                complete=ret is not None and not front,
                front_truncated=front,
                peak_point=(float(xy[peak, 0]), float(xy[peak, 1])),
            )
        )
    return result


@dataclass
class UedProfile:
    character: str
    movie: str
    n_tokens: int = 0
    n_matched: int = 0
    densities: dict = field(default_factory=dict)
    mean_v: float | None = None
    mean_a: float | None = None
    home_base: HomeBase2D | None = None
    variability: float | None = None
    displacement_count: int | None = None
    n_complete_displacements: int = 0
    avg_displacement_length: float | None = None
    avg_peak_distance: float | None = None
    avg_rise_rate: float | None = None
    avg_recovery_rate: float | None = None
    note: str = ""

    @property
    def rates_reported(self) -> bool:
        return self.avg_rise_rate is not None


def summarize_profile(
    traj: Trajectory,
    hb: HomeBase2D | None,
    displacements: list[Displacement],
    densities: dict | None = None,
    min_displacements: int = DEFAULT_MIN_DISPLACEMENTS,
) -> UedProfile:
    """Collapse one character's metrics into a profile row.

    Averages use complete displacements only and are left empty when fewer
    than ``min_displacements`` are complete.
    """
    densities = dict(densities or {})
    profile = UedProfile(
        character=traj.character,
        movie=traj.movie,
        n_tokens=int(densities.pop("n_tokens", 0)),
        n_matched=int(densities.pop("n_matched", traj.n_matched_words)),
        mean_v=densities.pop("mean_v", None),
        mean_a=densities.pop("mean_a", None),
        densities=densities,
        home_base=hb,
    )
    if len(traj) >= 2:
        profile.variability = variability(traj)
    if hb is None:
        return profile
    complete = [d for d in displacements if d.complete]
    profile.displacement_count = len(displacements)
    profile.n_complete_displacements = len(complete)
    if len(complete) >= max(min_displacements, 1):
        profile.avg_displacement_length = float(np.mean([d.length_words for d in complete]))
        profile.avg_peak_distance = float(np.mean([d.peak_distance for d in complete]))
        profile.avg_rise_rate = float(np.mean([d.rise_rate for d in complete]))
        profile.avg_recovery_rate = float(np.mean([d.recovery_rate for d in complete]))
    else:
        profile.note = "insufficient displacements"
    return profile
