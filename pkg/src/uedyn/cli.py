"""``uedyn`` command-line front end.

Every subcommand writes its outputs plus ``run_manifest.json`` into ``--out``.
Outputs are sorted and float formatting is fixed, so the same inputs and
settings always give byte-identical files.
"""

from __future__ import annotations

import functools
import hashlib
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from uedyn import __version__
from uedyn.errors import IOFailure, ParseError, UedynError, ValidationError
from uedyn.lexicons import CATEGORIES, load_category_lexicon, load_dimension_lexicon
from uedyn.pipeline import RunConfig, main_dialogues, ordered_map, profile_corpus, resolve_workers
from uedyn import report
from uedyn.corpus import benchmark, density_trend, discordance_trend, movie_discordance, peak_density_map, rank
from uedyn.screenplay import parse_script, read_corpus, write_corpus
from uedyn.trajectory import build_va_trajectory

log = logging.getLogger("uedyn")

_DEFAULTS = RunConfig()


def _fail_on_error(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except UedynError as exc:
            click.echo(f"error [{exc.category}]: {exc}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


def _opt(*names, **kw):
    return click.option(*names, show_default=True, **kw)


def _config_options(fn):
    opts = [
        _opt("--min-turns", type=int, default=_DEFAULTS.min_turns, help="Turns needed to count as a main character."),
        _opt("--va-window", type=int, default=_DEFAULTS.va_window, help="Rolling window over matched words."),
        _opt("--density-window", type=int, default=_DEFAULTS.density_window, help="Rolling window for category density."),
        _opt("--confidence", type=float, default=_DEFAULTS.confidence, help="Home-base ellipse coverage."),
        _opt("--min-displacements", type=int, default=_DEFAULTS.min_displacements,
             help="Complete displacements needed before averages are reported."),
        _opt("--bins", type=int, default=_DEFAULTS.bins, help="Narrative-time bins for discordance."),
        _opt("--presence-window", type=float, default=_DEFAULTS.presence_window,
             help="Characters must speak in the first and last share of the movie."),
        _opt("--seed", type=int, default=_DEFAULTS.seed, help="Seed for bootstrap resampling."),
        _opt("--length-unit", type=click.Choice(["matched", "tokens"]), default=_DEFAULTS.length_unit,
             help="Unit for displacement lengths and rates."),
        click.option("--workers", type=int, default=None, help="Worker processes [env UEDYN_WORKERS, else 1]."),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


def _input_options(fn):
    opts = [
        click.option("--scripts", type=click.Path(file_okay=False, path_type=Path), help="Directory of plain-text scripts."),
        click.option("--corpus", type=click.Path(dir_okay=False, path_type=Path), help="corpus.json from `uedyn parse`."),
        click.option("--exclude", multiple=True, help="Script title to skip (repeatable)."),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


def _out_options(fn):
    opts = [
        click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True, help="Output directory."),
        _opt("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", help="Table format."),
        click.option("--svg", is_flag=True, help="Also render SVG figures."),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


def _make_config(kw) -> RunConfig:
    cfg = RunConfig(
        min_turns=kw["min_turns"],
        va_window=kw["va_window"],
        density_window=kw["density_window"],
        confidence=kw["confidence"],
        min_displacements=kw["min_displacements"],
        bins=kw["bins"],
        presence_window=kw["presence_window"],
        seed=kw["seed"],
        length_unit=kw["length_unit"],
        workers=resolve_workers(kw["workers"]),
    )
    return cfg.validate()


def _prepare_out(out: Path) -> Path:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOFailure(f"cannot create output directory {out}: {exc}") from exc
    return out


def _parse_file(path: Path):
    try:
        raw = path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        return path.name, None, f"io: {exc}"
    try:
        return path.name, parse_script(raw, title=path.stem), None
    except ParseError as exc:
        return path.name, None, str(exc)


def _script_files(scripts_dir: Path) -> list[Path]:
    if not scripts_dir.is_dir():
        raise IOFailure(f"scripts directory {scripts_dir} does not exist")
    return sorted(p for p in scripts_dir.iterdir() if p.is_file() and p.suffix.lower() in (".txt", ".text", ""))


def _parse_dir(scripts_dir: Path, exclude, workers: int):
    files = [p for p in _script_files(scripts_dir) if p.stem not in set(exclude)]
    scripts, failures = [], []
    for name, script, err in ordered_map(_parse_file, files, workers):
        if script is None:
            log.warning("skipping %s: %s", name, err)
            failures.append({"file": name, "error": err})
        else:
            scripts.append(script)
    return scripts, failures


def _dir_digest(scripts_dir: Path) -> str:
    h = hashlib.sha256()
    for p in _script_files(scripts_dir):
        h.update(p.name.encode() + b"\0" + report.sha256(p).encode() + b"\n")
    return h.hexdigest()


def _load_scripts(scripts, corpus, exclude, workers):
    if (scripts is None) == (corpus is None):
        raise click.UsageError("give exactly one of --scripts or --corpus")
    if corpus is not None:
        loaded = [s for s in read_corpus(corpus) if s.title not in set(exclude)]
        return loaded, []
    return _parse_dir(scripts, exclude, workers)


def _inputs(**paths) -> dict:
    """Input fingerprints for the manifest: file name plus content hash."""
    out = {}
    for name, p in sorted(paths.items()):
        if p is None:
            continue
        p = Path(p)
        if p.is_dir():
            out[name] = {"name": p.name, "sha256": _dir_digest(p)}
        else:
            try:
                out[name] = {"name": p.name, "sha256": report.sha256(p)}
            except OSError as exc:
                raise IOFailure(f"cannot read {p}: {exc}") from exc
    return out


def _manifest(out: Path, command: str, config: dict, inputs: dict, extra: dict | None = None) -> None:
    doc = {"tool": "uedyn", "version": __version__, "command": command, "config": config, "inputs": inputs}
    if extra:
        doc.update(extra)
    report.write_json(out / "run_manifest.json", doc)


@click.group()
@click.version_option(__version__, prog_name="uedyn")
@click.option("-v", "--verbose", count=True, help="More logging (repeatable).")
def main(verbose):
    """Utterance emotion dynamics for screenplay dialogue."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@main.command("parse")
@click.option("--scripts", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--exclude", multiple=True, help="Script title to skip (repeatable).")
@click.option("--workers", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@_fail_on_error
def cmd_parse(scripts, exclude, workers, out):
    """Parse a directory of scripts into corpus.json."""
    workers = resolve_workers(workers)
    parsed, failures = _parse_dir(scripts, exclude, workers)
    if not parsed:
        raise ParseError(f"no parseable scripts in {scripts}")
    out = _prepare_out(out)
    write_corpus(parsed, out / "corpus.json")
    _manifest(out, "parse", {"exclude": sorted(exclude)}, _inputs(scripts=scripts), {"skipped": failures})
    click.echo(f"parsed {len(parsed)} scripts, skipped {len(failures)}")


@main.command("profile")
@_input_options
@click.option("--emotion-lex", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--vad-lex", type=click.Path(dir_okay=False, path_type=Path), required=True)
@_config_options
@_out_options
@_fail_on_error
def cmd_profile(scripts, corpus, exclude, emotion_lex, vad_lex, out, fmt, svg, **kw):
    """Per-character profiles, trajectories and displacements."""
    cfg = _make_config(kw)
    cats = load_category_lexicon(emotion_lex)
    dims = load_dimension_lexicon(vad_lex)
    loaded, failures = _load_scripts(scripts, corpus, exclude, cfg.workers)
    results = profile_corpus(loaded, cats, dims, cfg)
    if not results:
        raise ValidationError(f"no character has at least {cfg.min_turns} turns")
    out = _prepare_out(out)

    rows = [report.profile_row(r.profile) for r in results]
    report.write_table(out / "profiles", rows, report.PROFILE_COLUMNS, fmt)
    disp = [row for r in results for row in report.displacement_rows(r.trajectory, r.displacements)]
    report.write_table(out / "displacements", disp, report.DISPLACEMENT_COLUMNS, fmt)

    arcs = out / "arcs"
    arcs.mkdir(exist_ok=True)
    by_movie: dict[str, list] = {}
    for r in results:
        by_movie.setdefault(r.dialogue.movie, []).extend(report.arc_rows(r.trajectory))
    for movie, arc in sorted(by_movie.items()):
        report.write_table(arcs / report.slug(movie), arc, report.ARC_COLUMNS, fmt)

    peaks = [d.peak_point for r in results for d in r.displacements if d.complete]
    peak_map = peak_density_map(peaks) if peaks else None
    if peak_map is not None:
        report.write_json(out / "peak_map.json", peak_map.to_json())

    n_tok = sum(r.profile.n_tokens for r in results)
    n_vad = sum(r.profile.n_matched for r in results)
    n_cat = sum(
        1 for r in results for t in r.dialogue.tokens if cats.get(t.surface) or cats.get(t.lemma)
    )
    summary = {
        "n_scripts": len(loaded),
        "n_characters": len(results),
        "n_with_rates": sum(1 for r in results if r.profile.rates_reported),
        "coverage": {
            "tokens": n_tok,
            "emotion_lexicon_matched": n_cat,
            "vad_lexicon_matched": n_vad,
            "emotion_lexicon_rate": n_cat / n_tok if n_tok else None,
            "vad_lexicon_rate": n_vad / n_tok if n_tok else None,
        },
        "skipped_scripts": failures,
    }
    report.write_json(out / "summary.json", summary)

    if svg:
        from uedyn import plotting

        for r in results:
            if not r.trajectory.insufficient:
                name = f"{report.slug(r.dialogue.movie)}__{report.slug(r.dialogue.character)}.svg"
                plotting.arc_svg(r.trajectory, r.profile.home_base, arcs / name)
        if peak_map is not None:
            plotting.peak_map_svg(peak_map, out / "peak_map.svg")

    _manifest(out, "profile", cfg.manifest(),
              _inputs(scripts=scripts, corpus=corpus, emotion_lex=emotion_lex, vad_lex=vad_lex),
              {"exclude": sorted(exclude)})
    click.echo(f"profiled {len(results)} characters from {len(loaded)} scripts")


@main.command("benchmark")
@click.option("--profiles", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@_opt("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@_fail_on_error
def cmd_benchmark(profiles, out, fmt):
    """Corpus mean and SD of every profile metric."""
    rows = _read_profiles(profiles)
    table = [vars(b) for b in benchmark(rows)]
    out = _prepare_out(out)
    report.write_table(out / "benchmark", table, report.BENCHMARK_COLUMNS, fmt)
    _manifest(out, "benchmark", {}, _inputs(profiles=profiles))
    for b in table:
        click.echo(f"{b['metric']}\t{report.fmt(b['mean'])}\t{report.fmt(b['sd'])}\t{b['n']}")


def _read_profiles(path: Path) -> list[dict]:
    try:
        rows = report.read_table(path)
    except OSError as exc:
        raise IOFailure(f"cannot read profiles {path}: {exc}") from exc
    except (ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"malformed profiles file {path}: {exc}") from exc
    if rows and "character" not in rows[0]:
        raise ValidationError(f"{path} has no 'character' column")
    return rows


@main.command("trend")
@_input_options
@click.option("--emotion-lex", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--category", "categories", multiple=True, type=click.Choice(CATEGORIES),
              help="Category to trend (repeatable) [default: negative].")
@_opt("--time-basis", type=click.Choice(["character", "movie"]), default="character")
@_opt("--n-boot", type=int, default=200, help="Bootstrap replicates over characters.")
@_config_options
@_out_options
@_fail_on_error
def cmd_trend(scripts, corpus, exclude, emotion_lex, categories, time_basis, n_boot, out, fmt, svg, **kw):
    """Smoothed category-density trend over narrative time with a 95% band."""
    cfg = _make_config(kw)
    cats = load_category_lexicon(emotion_lex)
    loaded, _ = _load_scripts(scripts, corpus, exclude, cfg.workers)
    dialogues = main_dialogues(loaded, cfg.min_turns)
    if not dialogues:
        raise ValidationError(f"no character has at least {cfg.min_turns} turns")
    categories = categories or ("negative",)
    curves = [
        density_trend(dialogues, cats, c, window=cfg.density_window, time_basis=time_basis,
                      n_boot=n_boot, seed=cfg.seed)
        for c in categories
    ]
    out = _prepare_out(out)
    rows = [
        {"category": c.category, "t": t, "estimate": e, "lo95": lo, "hi95": hi}
        for c in curves
        for t, e, lo, hi in zip(c.grid, c.estimate, c.lo, c.hi)
    ]
    report.write_table(out / "trend", rows, report.TREND_COLUMNS, fmt)
    summary = {
        c.category: {
            "extremum_time": c.extremum_time, "extremum_kind": c.extremum_kind, "lambda": c.lam,
            "edf": c.edf, "n_characters": c.n_characters, "n_samples": c.n_samples,
        }
        for c in curves
    }
    report.write_json(out / "trend_summary.json", summary)
    if svg:
        from uedyn import plotting

        for c in curves:
            plotting.trend_svg(c, out / f"trend_{c.category}.svg")
    config = cfg.manifest() | {"categories": list(categories), "time_basis": time_basis, "n_boot": n_boot}
    _manifest(out, "trend", config, _inputs(scripts=scripts, corpus=corpus, emotion_lex=emotion_lex),
              {"exclude": sorted(exclude)})
    for c in curves:
        click.echo(f"{c.category}\t{c.extremum_kind}\t{report.fmt(c.extremum_time)}")


@main.command("discordance")
@_input_options
@click.option("--vad-lex", type=click.Path(dir_okay=False, path_type=Path), required=True)
@_opt("--n-boot", type=int, default=200, help="Bootstrap replicates over character pairs.")
@_config_options
@_out_options
@_fail_on_error
def cmd_discordance(scripts, corpus, exclude, vad_lex, n_boot, out, fmt, svg, **kw):
    """Pairwise discordance between main characters of each movie."""
    cfg = _make_config(kw)
    dims = load_dimension_lexicon(vad_lex)
    loaded, _ = _load_scripts(scripts, corpus, exclude, cfg.workers)
    dialogues = main_dialogues(loaded, cfg.min_turns)
    per_movie: dict[str, list] = {}
    for d in dialogues:
        per_movie.setdefault(d.movie, []).append(build_va_trajectory(d, dims, cfg.va_window))
    series, skipped = [], []
    for movie in sorted(per_movie):
        md = movie_discordance(per_movie[movie], cfg.bins, cfg.presence_window)
        series.extend(md.series)
        skipped.extend({"movie": movie, "character": c, "reason": why} for c, why in md.skipped)
    if not series:
        raise ValidationError("no character pair passes the presence filter")
    out = _prepare_out(out)
    rows = [
        {"movie": s.movie, "char_a": s.char_a, "char_b": s.char_b, "bin_t": t, "distance": d}
        for s in series
        for t, d in zip(s.bin_t, s.distance)
    ]
    report.write_table(out / "discordance", rows, report.DISCORDANCE_COLUMNS, fmt)
    trend = discordance_trend(series, n_boot=n_boot, seed=cfg.seed)
    trend_rows = [
        {"bin_t": t, "mean": m, "lo95": lo, "hi95": hi, "n_pairs": int(n)}
        for t, m, lo, hi, n in zip(trend.bin_t, trend.mean, trend.lo, trend.hi, trend.n)
    ]
    report.write_table(out / "discordance_trend", trend_rows, ("bin_t", "mean", "lo95", "hi95", "n_pairs"), fmt)
    report.write_json(out / "discordance_summary.json",
                      {"n_pairs": len(series), "peak_time": trend.peak_time, "skipped": skipped})
    if svg:
        from uedyn import plotting

        plotting.discordance_svg(trend, out / "discordance.svg")
    _manifest(out, "discordance", cfg.manifest() | {"n_boot": n_boot},
              _inputs(scripts=scripts, corpus=corpus, vad_lex=vad_lex), {"exclude": sorted(exclude)})
    click.echo(f"{len(series)} character pairs; peak discordance at t={report.fmt(trend.peak_time)}")


@main.command("simulate")
@click.option("--spec", "spec_path", type=click.Path(dir_okay=False, path_type=Path),
              help="JSON file of generator settings; defaults apply when omitted.")
@click.option("--seed", type=int, default=None, help="Override the seed in the settings file.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@_fail_on_error
def cmd_simulate(spec_path, seed, out):
    """Generate a synthetic corpus with matching lexicons and ground truth."""
    from uedyn.lexicons import write_category_lexicon, write_dimension_lexicon
    from uedyn.synth import SynthSpec, generate

    spec = SynthSpec.from_json(spec_path) if spec_path else SynthSpec()
    if seed is not None:
        spec.seed = seed
    corpus = generate(spec)
    out = _prepare_out(out)
    write_corpus(corpus.scripts, out / "corpus.json")
    write_category_lexicon(corpus.categories, out / "emotion_lexicon.tsv")
    write_dimension_lexicon(corpus.dimensions, out / "vad_lexicon.tsv")
    truth = [
        {"movie": m, "character": c, "n_words": len(va),
         "mean_v": float(np.mean(va[:, 0])) if len(va) else None,
         "mean_a": float(np.mean(va[:, 1])) if len(va) else None}
        for (m, c), va in sorted(corpus.truth.items())
    ]
    report.write_json(out / "truth.json", {"spec": spec.to_dict(), "characters": truth})
    _manifest(out, "simulate", spec.to_dict(), _inputs(spec=spec_path))
    click.echo(f"wrote {len(corpus.scripts)} scripts, {spec.n_characters} characters to {out}")


@main.command("rank")
@click.option("--profiles", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--metric", default="variability", show_default=True)
@_opt("--top-n", type=int, default=5)
@click.option("--ascending", is_flag=True, help="Lowest values first.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
@_opt("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@_fail_on_error
def cmd_rank(profiles, metric, top_n, ascending, out, fmt):
    """Characters ordered by one profile metric (ties broken by name)."""
    rows = _read_profiles(profiles)
    if rows and metric not in rows[0]:
        raise ValidationError(f"unknown metric {metric!r}")
    ranked = rank(rows, metric, top_n, ascending)
    columns = ("rank", "character", "movie", metric)
    if out is not None:
        out = _prepare_out(out)
        report.write_table(out / f"rank_{metric}", ranked, columns, fmt)
        _manifest(out, "rank", {"metric": metric, "top_n": top_n, "ascending": ascending}, _inputs(profiles=profiles))
    click.echo(report.csv_text(ranked, columns), nl=False)


if __name__ == "__main__":
    main()
