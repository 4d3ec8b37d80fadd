"""Per-character pipeline and the ordered parallel map used by the CLI."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from uedyn.errors import InsufficientDataError, ValidationError
from uedyn.lexicons import CategoryLexicon, DimensionLexicon
from uedyn.screenplay import CharacterDialogue, Script, select_main_characters
from uedyn.textproc import gc_paused
from uedyn.trajectory import Trajectory, build_va_trajectory, emotion_word_density
from uedyn.ued import (
    DEFAULT_MIN_DISPLACEMENTS,
    Displacement,
    UedProfile,
    detect_displacements,
    home_base_2d,
    summarize_profile,
)

log = logging.getLogger(__name__)

WORKERS_ENV = "UEDYN_WORKERS"


@dataclass
class RunConfig:
    min_turns: int = 50
    va_window: int = 10
    density_window: int = 30
    confidence: float = 0.68
    min_displacements: int = DEFAULT_MIN_DISPLACEMENTS
    bins: int = 100
    presence_window: float = 0.10
    seed: int = 0
    length_unit: str = "matched"
    workers: int = field(default=1, compare=False)

    def validate(self) -> "RunConfig":
        for name in ("min_turns", "va_window", "density_window", "bins"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.va_window < 2:
            raise ValidationError("va_window must be >= 2")
        if not 0.0 < self.confidence < 1.0:
            raise ValidationError("confidence must be in (0, 1)")
        if not 0.0 <= self.presence_window < 0.5:
            raise ValidationError("presence_window must be in [0, 0.5)")
        if self.min_displacements < 0:
            raise ValidationError("min_displacements must be >= 0")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        return self

    def manifest(self) -> dict:
        """Settings that affect outputs (worker count is excluded)."""
        doc = asdict(self)
        doc.pop("workers")
        return doc


def resolve_workers(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return 1


@dataclass
class CharacterResult:
    dialogue: CharacterDialogue
    trajectory: Trajectory
    displacements: list[Displacement]
    profile: UedProfile


def profile_character(
    dialogue: CharacterDialogue,
    categories: CategoryLexicon,
    dimensions: DimensionLexicon,
    cfg: RunConfig,
) -> CharacterResult:
    dens = emotion_word_density(dialogue, categories, dimensions)
    traj = build_va_trajectory(dialogue, dimensions, cfg.va_window)
    hb = None
    displacements: list[Displacement] = []
    note = ""
    if traj.insufficient:
        note = "insufficient data"
    else:
        try:
            hb = home_base_2d(traj, cfg.confidence)
        except InsufficientDataError as exc:
            note = str(exc)
        else:
            displacements = detect_displacements(traj, hb, cfg.length_unit)
    profile = summarize_profile(traj, hb, displacements, dens, cfg.min_displacements)
    if note:
        profile.note = note
    return CharacterResult(dialogue, traj, displacements, profile)


def _profile_script(args):
    script, categories, dimensions, cfg = args
    return [
        profile_character(d, categories, dimensions, cfg)
        for d in select_main_characters(script, cfg.min_turns)
    ]


def ordered_map(fn, items, workers: int = 1):
    """``map`` whose results come back in input order regardless of worker count."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def profile_corpus(
    scripts: list[Script],
    categories: CategoryLexicon,
    dimensions: DimensionLexicon,
    cfg: RunConfig,
) -> list[CharacterResult]:
    """Profiles for every main character, sorted by (movie, character)."""
    batches = ordered_map(
        _profile_script, [(s, categories, dimensions, cfg) for s in scripts], cfg.workers
    )
    results = [r for batch in batches for r in batch]
    results.sort(key=lambda r: (r.dialogue.movie, r.dialogue.character))
    return results


def main_dialogues(scripts: list[Script], min_turns: int) -> list[CharacterDialogue]:
    with gc_paused():
        out = [d for s in scripts for d in select_main_characters(s, min_turns)]
    out.sort(key=lambda d: (d.movie, d.character))
    return out
