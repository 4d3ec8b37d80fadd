"""Synthetic corpora with known ground truth, and brute-force reference oracles.

Nothing here imports the metric implementations it is meant to check: the
oracles rebuild the ellipse predicate and the perimeter from the raw
home-base fields.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from uedyn.errors import IOFailure, ValidationError
from uedyn.lexicons import CATEGORIES, VAD, CategoryLexicon, DimensionLexicon
from uedyn.screenplay import Script, build_script
from uedyn.textproc import gc_paused

FILLER = "w"


def _default_tags():
    return {"negative": [[0.0, 0.165], [1.0, 0.165]], "positive": [[0.0, 0.203], [1.0, 0.203]]}


@dataclass
class SynthSpec:
    seed: int = 0
    n_characters: int = 4
    characters_per_movie: int = 2
    tokens_per_character: int = 1500
    mean_turn_tokens: float = 8.0
    vad_rate: float = 0.3
    # category -> piecewise-linear [(movie time, probability), ...]
    tag_probs: dict = field(default_factory=_default_tags)
    va_process: str = "ar1"
    va_mean: list = field(default_factory=lambda: [0.55, 0.5])
    va_cov: list = field(default_factory=lambda: [[0.04, 0.0], [0.0, 0.0225]])
    ar_phi: float = 0.3

    def validate(self) -> None:
        if self.n_characters < 1 or self.characters_per_movie < 1:
            raise ValidationError("need at least one character per movie")
        if self.tokens_per_character < 1 or self.mean_turn_tokens < 1:
            raise ValidationError("token counts must be positive")
        if not 0.0 <= self.vad_rate <= 1.0:
            raise ValidationError(f"vad_rate {self.vad_rate} outside [0, 1]")
        for cat, knots in self.tag_probs.items():
            if cat not in CATEGORIES:
                raise ValidationError(f"unknown category {cat!r}")
            arr = np.asarray(knots, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 1:
                raise ValidationError(f"{cat}: knots must be [time, probability] pairs")
            if np.any(np.diff(arr[:, 0]) < 0):
                raise ValidationError(f"{cat}: knot times must be non-decreasing")
            if np.any((arr[:, 1] < 0) | (arr[:, 1] > 1)):
                raise ValidationError(f"{cat}: probabilities must lie in [0, 1]")
        if self.va_process not in ("normal", "ar1"):
            raise ValidationError(f"va_process must be 'normal' or 'ar1', got {self.va_process!r}")
        cov = np.asarray(self.va_cov, dtype=float)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise ValidationError("va_cov must be a symmetric 2x2 matrix")
        if np.linalg.eigvalsh(cov).min() < -1e-12:
            raise ValidationError("va_cov is not positive semi-definite")
        if not -1.0 < self.ar_phi < 1.0:
            raise ValidationError(f"ar_phi must be in (-1, 1), got {self.ar_phi}")

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown synth spec fields: {sorted(unknown)}")
        spec = cls(**doc)
        spec.validate()
        return spec

    @classmethod
    def from_json(cls, path) -> "SynthSpec":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IOFailure(f"cannot read synth spec {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"synth spec {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SynthCorpus:
    spec: SynthSpec
    scripts: list[Script]
    categories: CategoryLexicon
    dimensions: DimensionLexicon
    # (movie, character) -> raw per-word (v, a) in utterance order
    truth: dict


def tag_probability(knots, t):
    arr = np.asarray(knots, dtype=float)
    return np.interp(t, arr[:, 0], arr[:, 1])


def va_series(rng, n: int, mean, cov, phi: float = 0.0, process: str = "ar1") -> np.ndarray:
    """Word-level (v, a) draws clipped to the unit square.

    The AR(1) innovations are scaled so the stationary covariance is ``cov``.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if process == "normal" or phi == 0.0:
        x = rng.multivariate_normal(mean, cov, size=n, method="eigh")
    else:
        eps = rng.multivariate_normal(np.zeros(2), cov * (1.0 - phi * phi), size=n, method="eigh")
        start = rng.multivariate_normal(np.zeros(2), cov, method="eigh")
        # x_i - mean = phi * (x_{i-1} - mean) + eps_i
        dev = lfilter([1.0], [1.0, -phi], eps, axis=0, zi=(phi * start)[None, :])[0]
        x = mean + dev
    return np.clip(x, 0.0, 1.0)


def _turn_layout(rng, n_chars: int, budget: int, mean_len: float):
    """Alternate speakers until every character has uttered ``budget`` tokens."""
    remaining = [budget] * n_chars
    speakers, lengths = [], []
    prev = -1
    # scalar draws from a Generator are slow; consume pre-drawn batches instead
    batch = max(64, int(2 * n_chars * budget / mean_len))
    picks, sizes, k_draw = [], [], 0
    while any(remaining):
        live = [c for c in range(n_chars) if remaining[c] > 0]
        choices = [c for c in live if c != prev]
        if not choices:
            lengths[-1] += remaining[prev]
            remaining[prev] = 0
            break
        if k_draw == len(picks):
            picks = rng.random(batch).tolist()
            sizes = rng.poisson(mean_len - 1.0, batch).tolist()
            k_draw = 0
        c = choices[int(picks[k_draw] * len(choices))]
        k = min(1 + sizes[k_draw], remaining[c])
        k_draw += 1
        speakers.append(c)
        lengths.append(k)
        remaining[c] -= k
        prev = c
    return speakers, lengths


def generate(spec: SynthSpec) -> SynthCorpus:
    """Build a reproducible synthetic corpus and the lexicons that score it exactly."""
    spec.validate()
    with gc_paused():
        return _generate(spec)


def _generate(spec: SynthSpec) -> SynthCorpus:
    rng = np.random.default_rng(spec.seed)
    cats = [c for c in CATEGORIES if c in spec.tag_probs]
    bit = {c: 1 << CATEGORIES.index(c) for c in CATEGORIES}
    cat_entries: dict[str, frozenset] = {}
    dim_entries: dict[str, VAD] = {}
    truth = {}
    scripts = []
    mask_sets: dict[int, frozenset] = {}

    n_movies = -(-spec.n_characters // spec.characters_per_movie)
    assigned = 0
    for m in range(n_movies):
        k = min(spec.characters_per_movie, spec.n_characters - assigned)
        assigned += k
        title = f"synthetic-{m + 1:04d}"
        names = [f"CHAR{c + 1:02d}" for c in range(k)]
        speakers, lengths = _turn_layout(rng, k, spec.tokens_per_character, spec.mean_turn_tokens)
        total = sum(lengths)
        spk = np.repeat(speakers, lengths)
        t = np.arange(total) / total
        is_vad = rng.random(total) < spec.vad_rate
        mask = np.zeros(total, dtype=int)
        for c in cats:
            hit = rng.random(total) < tag_probability(spec.tag_probs[c], t)
            mask[hit] |= bit[c]

        stems = [FILLER] * total
        for ci, name in enumerate(names):
            mine = np.flatnonzero((spk == ci) & is_vad)
            va = va_series(rng, len(mine), spec.va_mean, spec.va_cov, spec.ar_phi, spec.va_process)
            q = np.rint(va * 10000).astype(int)
            truth[(title, name)] = q / 10000
            for pos, (v, a) in zip(mine.tolist(), q.tolist()):
                stem = f"v{v:05d}a{a:05d}"
                stems[pos] = stem
                if stem not in dim_entries:
                    dim_entries[stem] = VAD(v / 10000, a / 10000, 0.5)
        words = stems
        for pos in np.flatnonzero(mask).tolist():
            m_ = int(mask[pos])
            stem = stems[pos]
            word = f"{stem}c{m_:04d}"
            if word not in cat_entries:
                cat_entries[word] = mask_sets.setdefault(
                    m_, frozenset(c for c in CATEGORIES if m_ & bit[c])
                )
                if stem != FILLER:
                    dim_entries[word] = dim_entries[stem]
            words[pos] = word

        raw_turns = []
        start = 0
        for s, n in zip(speakers, lengths):
            raw_turns.append((names[s], " ".join(words[start:start + n])))
            start += n
        scripts.append(build_script(title, raw_turns))

    return SynthCorpus(spec, scripts, CategoryLexicon(cat_entries), DimensionLexicon(dim_entries), truth)


# --- oracles -------------------------------------------------------------


def _inside(point, hb) -> bool:
    cov = hb.eigenvectors @ np.diag(hb.eigenvalues) @ hb.eigenvectors.T
    d = np.asarray(point, dtype=float) - hb.center
    return float(d @ np.linalg.inv(cov) @ d) <= hb.chi2_crit


def _perimeter(hb, samples: int) -> np.ndarray:
    theta = np.arange(samples) * (2.0 * np.pi / samples)
    ra = np.sqrt(hb.chi2_crit * hb.eigenvalues[0])
    rb = np.sqrt(hb.chi2_crit * hb.eigenvalues[1])
    u = hb.eigenvectors[:, 0]
    w = hb.eigenvectors[:, 1]
    return (
        hb.center[None, :]
        + np.outer(ra * np.cos(theta), u)
        + np.outer(rb * np.sin(theta), w)
    )


def oracle_perimeter_distance(point, hb, samples: int = 10**6) -> float:
    """Minimum distance from ``point`` to densely sampled perimeter points."""
    ring = _perimeter(hb, samples)
    p = np.asarray(point, dtype=float)
    return float(np.sqrt(((ring - p) ** 2).sum(axis=1)).min())


def oracle_displacements(points, hb, samples: int = 20000) -> list[dict]:
    """Linear scan over points: one dict per excursion outside the ellipse."""
    ring = _perimeter(hb, samples)
    result = []
    current = None
    for i, p in enumerate(np.asarray(points, dtype=float)):
        inside = _inside(p, hb)
        if current is None:
            if not inside:
                current = {"exit_index": i, "front": i == 0, "dists": [(i, None)]}
        elif inside:
            current["return_index"] = i
            result.append(current)
            current = None
        else:
            current["dists"].append((i, None))
    if current is not None:
        current["return_index"] = None
        result.append(current)

    pts = np.asarray(points, dtype=float)
    out = []
    for ep in result:
        best_i, best_d = None, -1.0
        for i, _ in ep["dists"]:
            d = float(np.sqrt(((ring - pts[i]) ** 2).sum(axis=1)).min())
            if d > best_d:
                best_i, best_d = i, d
        ret = ep["return_index"]
        out.append(
            {
                "exit_index": ep["exit_index"],
                "peak_index": best_i,
                "return_index": ret,
                "complete": ret is not None and not ep["front"],
                "length_words": None if ret is None else ret - ep["exit_index"] + 1,
                "peak_distance": best_d,
            }
        )
    return out
