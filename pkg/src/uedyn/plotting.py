"""SVG figures for the CLI report path. Output is byte-stable across runs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Ellipse  # noqa: E402

_STYLE = {"svg.hashsalt": "uedyn", "svg.fonttype": "none", "figure.dpi": 100}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": "uedyn"})
    plt.close(fig)
    return path


def trend_svg(curve, path) -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.fill_between(curve.grid, curve.lo * 100, curve.hi * 100, color="0.85", label="95% band")
        ax.plot(curve.grid, curve.estimate * 100, color="C3", label=curve.category)
        ax.axvline(curve.extremum_time, color="0.4", ls=":", lw=1)
        ax.set_xlabel("narrative time")
        ax.set_ylabel(f"{curve.category} words (%)")
        ax.set_xlim(0, 1)
        ax.legend(frameon=False, loc="best")
        fig.tight_layout()
        return _save(fig, path)


def discordance_svg(trend, path) -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ok = ~np.isnan(trend.mean)
        ax.fill_between(trend.bin_t[ok], trend.lo[ok], trend.hi[ok], color="0.85")
        ax.plot(trend.bin_t[ok], trend.mean[ok], color="C0")
        ax.set_xlabel("narrative time")
        ax.set_ylabel("discordance")
        ax.set_xlim(0, 1)
        fig.tight_layout()
        return _save(fig, path)


def peak_map_svg(peak_map, path) -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 4))
        im = ax.imshow(
            peak_map.density.T, origin="lower", extent=(0, 1, 0, 1), cmap="magma", vmin=0, vmax=1,
            interpolation="nearest",
        )
        fig.colorbar(im, ax=ax, label="relative density")
        ax.set_xlabel("valence")
        ax.set_ylabel("arousal")
        fig.tight_layout()
        return _save(fig, path)


def arc_svg(traj, hb, path) -> Path:
    """Trajectory in (v, a) space with its home-base ellipse."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        ax.plot(traj.v, traj.a, color="0.5", lw=0.6)
        if hb is not None:
            major = hb.eigenvectors[:, 0]
            angle = float(np.degrees(np.arctan2(major[1], major[0])))
            ax.add_patch(
                Ellipse(
                    tuple(hb.center), 2 * hb.semi_major, 2 * hb.semi_minor, angle=angle,
                    fill=False, color="C2", lw=1.5,
                )
            )
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_aspect("equal")
        ax.set_xlabel("valence")
        ax.set_ylabel("arousal")
        ax.set_title(f"{traj.character} ({traj.movie})", fontsize=9)
        fig.tight_layout()
        return _save(fig, path)
