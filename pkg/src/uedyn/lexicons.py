"""Loaders for word-emotion lexicons.

Two tab-separated formats are supported:

* category lexicons, one ``word<TAB>category<TAB>flag`` association per line
  (the NRC Emotion Lexicon layout), and
* dimension lexicons, ``word<TAB>valence<TAB>arousal<TAB>dominance`` with an
  optional header row (the NRC VAD layout).

Lexicons are immutable once loaded and can be shared freely between workers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

from uedyn.errors import IOFailure, ParseError, ValidationError

log = logging.getLogger(__name__)

EMOTIONS = (
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "sadness",
    "surprise",
    "trust",
)
SENTIMENTS = ("negative", "positive")
CATEGORIES = EMOTIONS + SENTIMENTS


class VAD(NamedTuple):
    valence: float
    arousal: float
    dominance: float


@dataclass(frozen=True)
class CategoryLexicon:
    entries: Mapping[str, frozenset[str]]
    dropped_multiword: int = field(default=0, compare=False)

    def __post_init__(self):
        if not isinstance(self.entries, MappingProxyType):
            object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __reduce__(self):
        return (type(self), (dict(self.entries), self.dropped_multiword))

    def get(self, word: str) -> frozenset[str] | None:
        return self.entries.get(word.lower())

    def __contains__(self, word) -> bool:
        return word.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def words_for(self, category: str) -> frozenset[str]:
        return frozenset(w for w, cats in self.entries.items() if category in cats)


@dataclass(frozen=True)
class DimensionLexicon:
    entries: Mapping[str, VAD]
    dropped_multiword: int = field(default=0, compare=False)

    def __post_init__(self):
        if not isinstance(self.entries, MappingProxyType):
            object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __reduce__(self):
        return (type(self), (dict(self.entries), self.dropped_multiword))

    def get(self, word: str) -> VAD | None:
        return self.entries.get(word.lower())

    def __contains__(self, word) -> bool:
        return word.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def _read_lines(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read lexicon {path}: {exc}") from exc
    return text.splitlines()


def _clean_word(word: str) -> str:
    return word.strip().lower()


def load_category_lexicon(path) -> CategoryLexicon:
    """Read a ``word<TAB>category<TAB>{0,1}`` file.

    A word is kept for a category when its last line for that pair has flag 1.
    Entries containing whitespace are dropped and counted.
    """
    flags: dict[str, dict[str, bool]] = {}
    multiword: set[str] = set()
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(parts)}", lineno)
        word, category, flag = (p.strip() for p in parts)
        word = word.lower()
        category = category.lower()
        if not word:
            raise ParseError("empty word", lineno)
        if category not in CATEGORIES:
            raise ParseError(f"unknown category {category!r}", lineno)
        if flag not in ("0", "1"):
            raise ParseError(f"flag must be 0 or 1, got {flag!r}", lineno)
        if any(ch.isspace() for ch in word):
            multiword.add(word)
            continue
        flags.setdefault(word, {})[category] = flag == "1"

    entries = {}
    for word, cats in flags.items():
        on = frozenset(c for c, f in cats.items() if f)
        if on:
            entries[word] = on
    if multiword:
        log.warning("dropped %d multi-word entries from %s", len(multiword), path)
    return CategoryLexicon(entries, dropped_multiword=len(multiword))


def load_dimension_lexicon(path) -> DimensionLexicon:
    """Read a ``word<TAB>v<TAB>a<TAB>d`` file; scores must lie in [0, 1].

    The first data line is treated as a header when its score fields are not
    numeric.
    """
    entries: dict[str, VAD] = {}
    multiword: set[str] = set()
    seen_data = False
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(parts)}", lineno)
        word = _clean_word(parts[0])
        try:
            scores = tuple(float(p) for p in parts[1:])
        except ValueError:
            if not seen_data:
                seen_data = True
                continue
            raise ParseError(f"non-numeric score in {line!r}", lineno) from None
        seen_data = True
        if not word:
            raise ParseError("empty word", lineno)
        for s in scores:
            if not 0.0 <= s <= 1.0:
                raise ValidationError(f"line {lineno}: score {s} outside [0, 1]")
        if any(ch.isspace() for ch in word):
            multiword.add(word)
            continue
        entries[word] = VAD(*scores)
    if multiword:
        log.warning("dropped %d multi-word entries from %s", len(multiword), path)
    return DimensionLexicon(entries, dropped_multiword=len(multiword))


def remove_entries(lexicon, words: Iterable[str]):
    """Return a copy of ``lexicon`` without ``words``. Absent words are ignored."""
    drop = {w.lower() for w in words}
    kept = {w: v for w, v in lexicon.entries.items() if w not in drop}
    return type(lexicon)(kept, dropped_multiword=lexicon.dropped_multiword)


def write_category_lexicon(lexicon: CategoryLexicon, path) -> None:
    lines = []
    for word in sorted(lexicon.entries):
        for cat in CATEGORIES:
            lines.append(f"{word}\t{cat}\t{int(cat in lexicon.entries[word])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_dimension_lexicon(lexicon: DimensionLexicon, path) -> None:
    lines = ["term\tvalence\tarousal\tdominance"]
    for word in sorted(lexicon.entries):
        v, a, d = lexicon.entries[word]
        lines.append(f"{word}\t{v!r}\t{a!r}\t{d!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
