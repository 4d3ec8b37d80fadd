"""Tokenization, rule-based lemmatization and lexicon lookup."""

from __future__ import annotations

import gc
import re
from contextlib import contextmanager
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, NamedTuple

WORD_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "`": "'"})

VOWELS = frozenset("aeiou")
MIN_LEMMA = 3


class Token(NamedTuple):
    surface: str
    lemma: str
    offset: int


@contextmanager
def gc_paused():
    """Suspend the cyclic collector while bulk-building acyclic token tuples."""
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; keeps internal apostrophes, splits on hyphens."""
    return WORD_RE.findall(text.translate(_APOSTROPHES).lower())


def load_irregulars(path=None) -> dict[str, str]:
    if path is None:
        text = resources.files("uedyn.data").joinpath("irregulars.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    table = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        surface, lemma = line.split("\t")
        table[surface.strip().lower()] = lemma.strip().lower()
    return table


IRREGULARS = load_irregulars()


def _has_vowel(s: str) -> bool:
    return any(c in VOWELS for c in s) or (len(s) > 1 and "y" in s[1:])


def _is_consonant(word: str, i: int) -> bool:
    c = word[i]
    if c in VOWELS:
        return False
    if c == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    # Porter's m: number of VC sequences
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        vowel = not _is_consonant(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _ends_cvc(stem: str) -> bool:
    if len(stem) < 3:
        return False
    return (
        _is_consonant(stem, len(stem) - 3)
        and not _is_consonant(stem, len(stem) - 2)
        and _is_consonant(stem, len(stem) - 1)
        and stem[-1] not in "wxy"
    )


def _restore(stem: str) -> str:
    """Undo a stripped -ed/-ing: collapse doubled consonants or restore a silent e."""
    if stem.endswith(("at", "bl", "iz")):
        return stem + "e"
    if len(stem) >= 2 and stem[-1] == stem[-2] and _is_consonant(stem, len(stem) - 1):
        if stem[-1] not in "lsz":
            return stem[:-1]
        return stem
    if _measure(stem) == 1 and _ends_cvc(stem):
        return stem + "e"
    return stem


def _strip_once(word: str, irregulars: Mapping[str, str]) -> str:
    if word in irregulars:
        return irregulars[word]
    out = word
    if word.endswith("ies") and len(word) > 4:
        out = word[:-3] + "y"
    elif word.endswith("sses"):
        out = word[:-2]
    elif word.endswith(("xes", "zes", "ches", "shes", "oes")):
        out = word[:-2]
    elif word.endswith("s") and not word.endswith(("ss", "us", "is", "'s")):
        out = word[:-1]
    elif word.endswith("ied") and len(word) > 4:
        out = word[:-3] + "y"
    elif word.endswith("ed") and not word.endswith("eed"):
        stem = word[:-2]
        if _has_vowel(stem):
            out = _restore(stem)
    elif word.endswith("ing"):
        stem = word[:-3]
        if _has_vowel(stem):
            out = _restore(stem)
    if len(out) < MIN_LEMMA:
        return word
    return out


def lemmatize(token: str, irregulars: Mapping[str, str] | None = None) -> str:
    """Reduce an inflected lowercase token to a base form.

    Suffix rules are applied until the word stops changing, which makes the
    function idempotent.
    """
    if irregulars is None:
        return _lemmatize_default(token)
    return _fixpoint(token, irregulars)


def _fixpoint(token: str, irregulars: Mapping[str, str]) -> str:
    if token[-1:] not in ("s", "d", "g") and token not in irregulars:
        return token
    seen = {token}
    word = token
    while True:
        nxt = _strip_once(word, irregulars)
        if nxt == word or nxt in seen:
            return word
        seen.add(nxt)
        word = nxt


@lru_cache(maxsize=1 << 18)
def _lemmatize_default(token: str) -> str:
    return _fixpoint(token, IRREGULARS)


def match(lexicon, surface: str, lemma: str | None = None):
    """Look up ``surface`` then ``lemma``; ``None`` when neither is present."""
    entries = lexicon.entries
    hit = entries.get(surface)
    if hit is None and lemma is not None and lemma != surface:
        hit = entries.get(lemma)
    return hit


def token_stream(text: str, start_offset: int = 0) -> list[Token]:
    words = tokenize(text)
    return list(map(Token._make, zip(words, map(_lemmatize_default, words), range(start_offset, start_offset + len(words)))))
