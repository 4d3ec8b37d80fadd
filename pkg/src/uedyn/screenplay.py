"""Screenplay parsing: character cues, dialogue turns and main-character selection.

Scripts are plain text laid out the way IMSDb pages are after HTML stripping:
a character cue on its own line (uppercase, usually indented further than the
action lines), followed by that character's dialogue until a blank line.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from uedyn.errors import IOFailure, ParseError, ValidationError
from uedyn.textproc import Token, gc_paused, token_stream, tokenize

FORMAT_VERSION = 1

MAX_CUE_LENGTH = 40
MIN_UPPER_FRACTION = 0.8
SCENE_PREFIXES = ("INT.", "EXT.", "INT/EXT", "I/E ", "FADE", "CUT", "DISSOLVE")
# smallest indent holding at least this share of lines is the action margin
MARGIN_SHARE = 0.05

_TRAILING_PAREN = re.compile(r"\s*\([^()]*\)\s*$")
_PAREN_ONLY = re.compile(r"^\([^()]*\)$")
_TRAILING_PUNCT = re.compile(r"[\s.,:;!?\-]+$")


@dataclass(frozen=True)
class Turn:
    character: str
    text: str
    turn_index: int
    movie_token_offset: int = 0

    @property
    def n_tokens(self) -> int:
        return len(tokenize(self.text))


@dataclass(frozen=True)
class Script:
    title: str
    turns: tuple[Turn, ...]
    total_dialogue_tokens: int

    @property
    def characters(self) -> list[str]:
        return sorted({t.character for t in self.turns})

    def turn_counts(self) -> Counter:
        return Counter(t.character for t in self.turns)


@dataclass(frozen=True)
class CharacterDialogue:
    character: str
    movie: str
    turns: tuple[Turn, ...]
    tokens: tuple[Token, ...]
    movie_total_tokens: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)

    def movie_times(self):
        """Movie-relative time of every token."""
        total = max(self.movie_total_tokens, 1)
        return [tok.offset / total for tok in self.tokens]


def normalize_name(name: str) -> str:
    name = " ".join(name.split()).upper()
    prev = None
    while prev != name:
        prev = name
        name = _TRAILING_PAREN.sub("", name)
        name = _TRAILING_PUNCT.sub("", name)
    return name


def _cue_text(stripped: str) -> str | None:
    """Return the candidate name if ``stripped`` looks like a character cue."""
    core = _TRAILING_PAREN.sub("", stripped).strip()
    if not 1 <= len(core) <= MAX_CUE_LENGTH:
        return None
    letters = [c for c in core if c.isalpha()]
    if not letters:
        return None
    upper = sum(c.isupper() for c in letters)
    if upper < MIN_UPPER_FRACTION * len(letters):
        return None
    if core.upper().startswith(SCENE_PREFIXES) or core.endswith(":"):
        return None
    name = normalize_name(core)
    return name or None


def _margin(indents: list[int]) -> int:
    counts = Counter(indents)
    need = MARGIN_SHARE * len(indents)
    for indent in sorted(counts):
        if counts[indent] >= need:
            return indent
    return min(counts)


def build_script(title: str, raw_turns: list[tuple[str, str]]) -> Script:
    """Assemble a Script from (character, text) pairs, computing token offsets."""
    turns = []
    offset = 0
    for i, (character, text) in enumerate(raw_turns):
        turns.append(Turn(character, text, i, offset))
        offset += len(tokenize(text))
    return Script(title, tuple(turns), offset)


def parse_script(raw: str, title: str = "") -> Script:
    """Split a plain-text screenplay into merged per-character turns."""
    lines = [ln.expandtabs(8).rstrip() for ln in raw.splitlines()]
    n = len(lines)
    indents = [len(ln) - len(ln.lstrip()) for ln in lines]
    blank = [not ln.strip() for ln in lines]
    names = [None if blank[i] else _cue_text(lines[i].strip()) for i in range(n)]

    followed = [i + 1 < n and not blank[i + 1] for i in range(n)]
    margin = _margin([indents[i] for i in range(n) if not blank[i]]) if not all(blank) else 0
    indented = any(names[i] and followed[i] and indents[i] > margin for i in range(n))

    def is_cue(i: int) -> bool:
        if not names[i] or not followed[i]:
            return False
        return indents[i] > margin if indented else True

    raw_turns: list[tuple[str, str]] = []
    n_cues = 0
    i = 0
    while i < n:
        if not is_cue(i) or (not indented and i > 0 and not blank[i - 1]):
            i += 1
            continue
        n_cues += 1
        character = names[i]
        parts = []
        block_indent = None
        in_paren = False
        j = i + 1
        while j < n and not blank[j]:
            if indented and block_indent is not None and is_cue(j) and indents[j] > block_indent:
                break
            text = lines[j].strip()
            if block_indent is None:
                block_indent = indents[j]
            if in_paren:
                in_paren = ")" not in text
            elif _PAREN_ONLY.match(text):
                pass
            elif text.startswith("(") and ")" not in text:
                in_paren = True
            else:
                parts.append(text)
            j += 1
        i = j
        text = " ".join(" ".join(parts).split())
        if not text:
            continue
        if raw_turns and raw_turns[-1][0] == character:
            raw_turns[-1] = (character, raw_turns[-1][1] + " " + text)
        else:
            raw_turns.append((character, text))

    if n_cues == 0 or not raw_turns:
        raise ParseError(f"unparseable script {title!r}: no character cues found")
    if len({c for c, _ in raw_turns}) < 2:
        raise ParseError(f"unparseable script {title!r}: fewer than 2 characters")
    return build_script(title, raw_turns)


def render_script(script: Script) -> str:
    """Write a script back out in a canonical indented layout."""
    out = []
    for turn in script.turns:
        out.append("")
        out.append(" " * 37 + turn.character)
        out.append(" " * 25 + turn.text)
    return "\n".join(out) + "\n"


def select_main_characters(script: Script, min_turns: int = 50) -> list[CharacterDialogue]:
    """Characters with at least ``min_turns`` turns, sorted by name."""
    counts = script.turn_counts()
    chosen = sorted(c for c, k in counts.items() if k >= min_turns)
    with gc_paused():
        return [character_dialogue(script, c) for c in chosen]


def character_dialogue(script: Script, character: str) -> CharacterDialogue:
    turns = tuple(t for t in script.turns if t.character == character)
    tokens: list[Token] = []
    for t in turns:
        tokens.extend(token_stream(t.text, t.movie_token_offset))
    return CharacterDialogue(character, script.title, turns, tuple(tokens), script.total_dialogue_tokens)


def corpus_to_json(scripts: list[Script]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "scripts": [
            {
                "title": s.title,
                "turns": [
                    {"character": t.character, "text": t.text, "turn_index": t.turn_index}
                    for t in s.turns
                ],
            }
            for s in scripts
        ],
    }


def corpus_from_json(doc: dict) -> list[Script]:
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise ValidationError(f"corpus format_version must be {FORMAT_VERSION}")
    scripts = []
    try:
        for entry in doc["scripts"]:
            turns = sorted(entry["turns"], key=lambda t: t["turn_index"])
            raw = [(str(t["character"]), str(t["text"])) for t in turns]
            scripts.append(build_script(str(entry["title"]), raw))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed corpus document: {exc}") from exc
    return scripts


def write_corpus(scripts: list[Script], path) -> None:
    text = json.dumps(corpus_to_json(scripts), indent=1, ensure_ascii=False, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_corpus(path) -> list[Script]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read corpus {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"corpus {path} is not valid JSON: {exc}") from exc
    return corpus_from_json(doc)
