"""Rolling-average emotion trajectories and rolling word-density series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from uedyn.errors import InsufficientDataError, ValidationError
from uedyn.lexicons import CATEGORIES, CategoryLexicon, DimensionLexicon
from uedyn.screenplay import CharacterDialogue
from uedyn.textproc import match

TIME_BASES = ("movie", "character")


class EmotionPoint(NamedTuple):
    word_index: int
    narrative_time: float
    v: float
    a: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Full-window rolling means of valence and arousal over matched words.

    Point ``i`` averages matched words ``i .. i+window-1``; its word_index is
    the index of the last of those words among the character's matched words.
    """

    character: str
    movie: str
    window: int
    n_matched_words: int
    word_index: np.ndarray
    narrative_time: np.ndarray
    v: np.ndarray
    a: np.ndarray
    token_index: np.ndarray  # position of each point's last word among all the character's tokens
    first_time: float = 0.0
    last_time: float = 0.0

    def __len__(self) -> int:
        return len(self.v)

    @property
    def insufficient(self) -> bool:
        return len(self.v) == 0

    @property
    def points(self) -> list[EmotionPoint]:
        return [
            EmotionPoint(int(i), float(t), float(v), float(a))
            for i, t, v, a in zip(self.word_index, self.narrative_time, self.v, self.a)
        ]

    @property
    def xy(self) -> np.ndarray:
        return np.column_stack([self.v, self.a])

    @classmethod
    def from_scores(cls, v, a, window: int = 1, times=None, character="", movie=""):
        """Build a trajectory directly from point coordinates (no smoothing applied)."""
        v = np.asarray(v, dtype=float)
        a = np.asarray(a, dtype=float)
        n = len(v)
        idx = np.arange(n) + window - 1
        times = np.linspace(0.0, 1.0, n) if times is None else np.asarray(times, dtype=float)
        return cls(character, movie, window, n + window - 1, idx, times, v, a, idx.copy())


@dataclass(frozen=True)
class DensitySeries:
    category: str
    window: int
    times: np.ndarray
    values: np.ndarray

    @property
    def insufficient(self) -> bool:
        return len(self.values) == 0

    def __len__(self) -> int:
        return len(self.values)


def _token_times(dialogue: CharacterDialogue, time_basis: str) -> np.ndarray:
    n = dialogue.n_tokens
    if time_basis == "movie":
        total = max(dialogue.movie_total_tokens, 1)
        return np.array([tok.offset for tok in dialogue.tokens], dtype=float) / total
    if time_basis == "character":
        if n == 1:
            return np.zeros(1)
        return np.arange(n, dtype=float) / (n - 1)
    raise ValidationError(f"time_basis must be one of {TIME_BASES}, got {time_basis!r}")


def rolling_mean(x: np.ndarray, window: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if len(x) < window:
        return np.empty(0)
    return sliding_window_view(x, window).mean(axis=1)


def presence_span(dialogue: CharacterDialogue) -> tuple[float, float]:
    """Movie-relative time of a character's first and last dialogue token."""
    if not dialogue.tokens:
        return (np.nan, np.nan)
    total = max(dialogue.movie_total_tokens, 1)
    return (dialogue.tokens[0].offset / total, dialogue.tokens[-1].offset / total)


def build_va_trajectory(
    dialogue: CharacterDialogue,
    lex: DimensionLexicon,
    window: int = 10,
    time_basis: str = "movie",
) -> Trajectory:
    if window < 2:
        raise ValidationError(f"trajectory window must be >= 2, got {window}")
    times = _token_times(dialogue, time_basis)
    vs, as_, pos = [], [], []
    for k, tok in enumerate(dialogue.tokens):
        hit = match(lex, tok.surface, tok.lemma)
        if hit is not None:
            vs.append(hit[0])
            as_.append(hit[1])
            pos.append(k)
    n = len(vs)
    pos = np.asarray(pos, dtype=int)
    first, last = presence_span(dialogue)
    if n < window:
        empty = np.empty(0)
        return Trajectory(
            dialogue.character, dialogue.movie, window, n,
            np.empty(0, dtype=int), empty, empty, empty, np.empty(0, dtype=int), first, last,
        )
    last_word = pos[window - 1:]
    return Trajectory(
        dialogue.character,
        dialogue.movie,
        window,
        n,
        np.arange(window - 1, n),
        times[last_word],
        rolling_mean(vs, window),
        rolling_mean(as_, window),
        last_word,
        first,
        last,
    )


def _category_flags(dialogue: CharacterDialogue, lex: CategoryLexicon, category: str) -> np.ndarray:
    if category not in CATEGORIES:
        raise ValidationError(f"unknown category {category!r}")
    flags = np.zeros(dialogue.n_tokens)
    for k, tok in enumerate(dialogue.tokens):
        hit = match(lex, tok.surface, tok.lemma)
        if hit is not None and category in hit:
            flags[k] = 1.0
    return flags


def rolling_density(
    dialogue: CharacterDialogue,
    lex: CategoryLexicon,
    category: str,
    window: int = 30,
    time_basis: str = "movie",
) -> DensitySeries:
    """Share of each full window of tokens associated with ``category``."""
    if window < 1:
        raise ValidationError(f"density window must be >= 1, got {window}")
    flags = _category_flags(dialogue, lex, category)
    if len(flags) < window:
        return DensitySeries(category, window, np.empty(0), np.empty(0))
    times = _token_times(dialogue, time_basis)
    return DensitySeries(category, window, times[window - 1:], rolling_mean(flags, window))


def category_densities(dialogue: CharacterDialogue, lex: CategoryLexicon) -> dict[str, float]:
    """Percentage of all tokens associated with each of the ten categories."""
    n = dialogue.n_tokens
    if n == 0:
        raise InsufficientDataError(f"{dialogue.character}: no tokens")
    counts = dict.fromkeys(CATEGORIES, 0)
    for tok in dialogue.tokens:
        hit = match(lex, tok.surface, tok.lemma)
        if hit:
            for c in hit:
                counts[c] += 1
    return {c: 100.0 * counts[c] / n for c in CATEGORIES}


def emotion_word_density(
    dialogue: CharacterDialogue,
    lex: CategoryLexicon,
    vad: DimensionLexicon | None = None,
) -> dict[str, float]:
    """Category percentages plus mean valence and arousal of matched words.

    ``mean_v``/``mean_a`` are NaN when no token is in the dimension lexicon.
    """
    out = category_densities(dialogue, lex)
    out["n_tokens"] = dialogue.n_tokens
    if vad is not None:
        vs, as_ = [], []
        for tok in dialogue.tokens:
            hit = match(vad, tok.surface, tok.lemma)
            if hit is not None:
                vs.append(hit[0])
                as_.append(hit[1])
        out["n_matched"] = len(vs)
        out["mean_v"] = float(np.mean(vs)) if vs else float("nan")
        out["mean_a"] = float(np.mean(as_)) if as_ else float("nan")
    return out
