"""Flat row layouts and deterministic CSV/JSON writers for every output file."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
from pathlib import Path

from uedyn.lexicons import CATEGORIES

PROFILE_COLUMNS = (
    "character",
    "movie",
    "n_tokens",
    "n_matched",
    *(f"density_{c}" for c in CATEGORIES),
    "mean_v",
    "mean_a",
    "hb_center_v",
    "hb_center_a",
    "hb_semi_major",
    "hb_semi_minor",
    "variability",
    "displacement_count",
    "avg_displacement_length",
    "avg_peak_distance",
    "avg_rise_rate",
    "avg_recovery_rate",
)
ARC_COLUMNS = ("character", "movie", "word_index", "narrative_time", "v", "a")
DISPLACEMENT_COLUMNS = (
    "movie", "character", "exit_index", "peak_index", "return_index", "complete",
    "length_words", "peak_distance", "rise_words", "recovery_words", "rise_rate",
    "recovery_rate", "peak_v", "peak_a",
)
TREND_COLUMNS = ("category", "t", "estimate", "lo95", "hi95")
DISCORDANCE_COLUMNS = ("movie", "char_a", "char_b", "bin_t", "distance")
BENCHMARK_COLUMNS = ("metric", "mean", "sd", "n")


def fmt(x) -> str:
    """Stable text form: blank for missing, integers bare, floats at 12 significant digits."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.12g}"


def jsonable(x):
    if x is None or isinstance(x, (bool, int, str)):
        return x
    if isinstance(x, float) or hasattr(x, "dtype"):
        x = float(x)
        return None if math.isnan(x) else float(f"{x:.12g}")
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return str(x)


def profile_row(profile) -> dict:
    hb = profile.home_base
    row = {
        "character": profile.character,
        "movie": profile.movie,
        "n_tokens": profile.n_tokens,
        "n_matched": profile.n_matched,
    }
    for c in CATEGORIES:
        row[f"density_{c}"] = profile.densities.get(c)
    row.update(
        mean_v=profile.mean_v,
        mean_a=profile.mean_a,
        hb_center_v=None if hb is None else float(hb.center[0]),
        hb_center_a=None if hb is None else float(hb.center[1]),
        hb_semi_major=None if hb is None else hb.semi_major,
        hb_semi_minor=None if hb is None else hb.semi_minor,
        variability=profile.variability,
        displacement_count=profile.displacement_count,
        avg_displacement_length=profile.avg_displacement_length,
        avg_peak_distance=profile.avg_peak_distance,
        avg_rise_rate=profile.avg_rise_rate,
        avg_recovery_rate=profile.avg_recovery_rate,
    )
    return row


def arc_rows(traj):
    for i, t, v, a in zip(traj.word_index, traj.narrative_time, traj.v, traj.a):
        yield {
            "character": traj.character, "movie": traj.movie, "word_index": int(i),
            "narrative_time": float(t), "v": float(v), "a": float(a),
        }


def displacement_rows(traj, displacements):
    for d in displacements:
        yield {
            "movie": traj.movie,
            "character": traj.character,
            "exit_index": d.exit_index,
            "peak_index": d.peak_index,
            "return_index": d.return_index,
            "complete": d.complete,
            "length_words": d.length_words,
            "peak_distance": d.peak_distance,
            "rise_words": d.rise_words,
            "recovery_words": d.recovery_words,
            "rise_rate": d.rise_rate,
            "recovery_rate": d.recovery_rate,
            "peak_v": d.peak_point[0],
            "peak_a": d.peak_point[1],
        }


def csv_text(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(path, rows, columns) -> None:
    Path(path).write_text(csv_text(rows, columns), encoding="utf-8")


def write_json(path, doc) -> None:
    text = json.dumps(jsonable(doc), indent=1, sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_table(path_stem: Path, rows, columns, fmt_name: str = "csv") -> Path:
    rows = list(rows)
    if fmt_name == "json":
        path = path_stem.with_suffix(".json")
        write_json(path, [{c: r.get(c) for c in columns} for r in rows])
    else:
        path = path_stem.with_suffix(".csv")
        write_csv(path, rows, columns)
    return path


def read_table(path) -> list[dict]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return json.loads(text)
    return list(csv.DictReader(io.StringIO(text)))


def slug(name: str) -> str:
    s = re.sub(r"[^A-Za-z0-9]+", "-", name).strip("-").lower()
    return s or "untitled"


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()

