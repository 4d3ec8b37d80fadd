"""Penalized cubic B-spline regression (P-splines) with GCV-selected smoothing.

Fits are expressed through per-group sufficient statistics so that a
resampling bootstrap over groups only has to add small matrices together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from scipy.optimize import minimize_scalar

DEGREE = 3
LOG_LAMBDA_GRID = np.linspace(-8.0, 6.0, 57)


def knot_vector(n_knots: int = 20, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """``n_knots`` equally spaced knots on [lo, hi], extended by DEGREE on each side."""
    if n_knots < 2:
        raise ValueError("need at least two knots")
    step = (hi - lo) / (n_knots - 1)
    return lo + step * np.arange(-DEGREE, n_knots + DEGREE)


def design(x, knots: np.ndarray) -> np.ndarray:
    x = np.clip(np.asarray(x, dtype=float), knots[DEGREE], knots[-DEGREE - 1])
    return BSpline.design_matrix(x, knots, DEGREE).toarray()


def difference_penalty(n_basis: int, order: int = 2) -> np.ndarray:
    d = np.diff(np.eye(n_basis), n=order, axis=0)
    return d.T @ d


@dataclass(frozen=True)
class Stats:
    """Weighted sufficient statistics of a least-squares spline problem."""

    gram: np.ndarray  # B'WB
    rhs: np.ndarray  # B'Wy
    yy: float  # y'Wy
    n: float  # sum of weights

    def __add__(self, other: "Stats") -> "Stats":
        return Stats(self.gram + other.gram, self.rhs + other.rhs, self.yy + other.yy, self.n + other.n)


def sufficient_stats(x, y, knots: np.ndarray, weights=None) -> Stats:
    b = design(x, knots)
    y = np.asarray(y, dtype=float)
    w = np.ones(len(y)) if weights is None else np.broadcast_to(np.asarray(weights, dtype=float), y.shape)
    bw = b * w[:, None]
    return Stats(bw.T @ b, bw.T @ y, float(np.dot(w * y, y)), float(w.sum()))


@dataclass(frozen=True)
class SplineFit:
    coef: np.ndarray
    knots: np.ndarray
    lam: float
    edf: float
    gcv: float

    def __call__(self, x) -> np.ndarray:
        return design(x, self.knots) @ self.coef


class _Eigen:
    """Demmler-Reinsch form: one factorization serves every lambda."""

    def __init__(self, stats: Stats, penalty: np.ndarray):
        gram = stats.gram
        ridge = 1e-10 * np.trace(gram) / len(gram)
        r = np.linalg.cholesky(gram + ridge * np.eye(len(gram))).T
        r_inv = np.linalg.inv(r)
        s, u = np.linalg.eigh(r_inv.T @ penalty @ r_inv)
        self.s = np.clip(s, 0.0, None)
        self.basis = r_inv @ u
        self.z = self.basis.T @ stats.rhs
        self.stats = stats

    def solve(self, lam: float):
        shrink = 1.0 / (1.0 + lam * self.s)
        coef = self.basis @ (shrink * self.z)
        edf = float(shrink.sum())
        st = self.stats
        rss = max(st.yy - 2.0 * coef @ st.rhs + coef @ st.gram @ coef, 0.0)
        denom = st.n - edf
        gcv = st.n * rss / (denom * denom) if denom > 0 else np.inf
        return coef, edf, gcv


def fit_pspline(stats: Stats, knots: np.ndarray, lam: float | None = None) -> SplineFit:
    """Solve the penalized normal equations; pick lambda by GCV when not given."""
    penalty = difference_penalty(len(stats.rhs))
    eig = _Eigen(stats, penalty)
    if lam is not None:
        coef, edf, gcv = eig.solve(lam)
        return SplineFit(coef, knots, lam, edf, gcv)
    scale = np.trace(stats.gram) / np.trace(penalty)

    def score(log_lam):
        return eig.solve(scale * 10.0**log_lam)[2]

    scores = np.array([score(s) for s in LOG_LAMBDA_GRID])
    k = int(np.argmin(scores))
    lo = LOG_LAMBDA_GRID[max(k - 1, 0)]
    hi = LOG_LAMBDA_GRID[min(k + 1, len(LOG_LAMBDA_GRID) - 1)]
    best = LOG_LAMBDA_GRID[k]
    if hi > lo:
        res = minimize_scalar(score, bounds=(lo, hi), method="bounded", options={"xatol": 1e-3})
        if res.fun <= scores[k]:
            best = float(res.x)
    lam = scale * 10.0**best
    coef, edf, gcv = eig.solve(lam)
    return SplineFit(coef, knots, lam, edf, gcv)
