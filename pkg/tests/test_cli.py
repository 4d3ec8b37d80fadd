import csv
import json
import shutil

import pytest
from click.testing import CliRunner

from uedyn.cli import main

LEX = ["--emotion-lex", "{f}/mini_emotion.tsv", "--vad-lex", "{f}/mini_vad.tsv"]
MINI = ["--min-turns", "1", "--va-window", "2", "--min-displacements", "1"]


def run(*args, ok=True):
    res = CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)
    if ok:
        assert res.exit_code == 0, res.output
    return res


def _lex(fixtures):
    return [x.format(f=fixtures) for x in LEX]


@pytest.fixture
def scripts_dir(tmp_path, fixtures):
    d = tmp_path / "scripts"
    d.mkdir()
    for name in ("mini_shining", "mini_flat", "mini_jaws"):
        shutil.copy(fixtures / f"{name}.txt", d)
    return d


@pytest.fixture(scope="module")
def synthetic(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    spec = out / "spec.json"
    spec.write_text(json.dumps({"n_characters": 12, "tokens_per_character": 1200, "seed": 5}))
    run("simulate", "--spec", spec, "--out", out)
    return out


def _syn_args(sim):
    return ["--corpus", sim / "corpus.json", "--emotion-lex", sim / "emotion_lexicon.tsv",
            "--vad-lex", sim / "vad_lexicon.tsv"]


def test_profile_golden(tmp_path, fixtures, scripts_dir):
    out = tmp_path / "out"
    run("profile", "--scripts", scripts_dir, *_lex(fixtures), *MINI, "--out", out)
    assert (out / "profiles.csv").read_text() == (fixtures / "golden_profiles.csv").read_text()


def test_golden_hand_values(fixtures):
    rows = {r["character"]: r for r in csv.DictReader(open(fixtures / "golden_profiles.csv"))}
    # JACK: 25 tokens, joy words nice, perfect, good
    assert rows["JACK"]["n_tokens"] == "25"
    assert float(rows["JACK"]["density_joy"]) == pytest.approx(100 * 3 / 25, abs=1e-9)
    # LISA: "dad forgot again / can i have cereal / i'll drink water"
    assert rows["LISA"]["n_tokens"] == "10" and rows["LISA"]["n_matched"] == "4"
    assert float(rows["LISA"]["mean_v"]) == pytest.approx((0.82 + 0.67 + 0.72 + 0.70) / 4, abs=1e-9)
    assert float(rows["LISA"]["mean_a"]) == pytest.approx((0.39 + 0.25 + 0.55 + 0.22) / 4, abs=1e-9)
    assert float(rows["LISA"]["density_positive"]) == pytest.approx(10.0)
    # WENDY: hope, warm, love, help, dinner out of 31 tokens
    assert float(rows["WENDY"]["density_positive"]) == pytest.approx(100 * 5 / 31, abs=1e-9)
    # too few complete displacements leaves the averages blank
    assert rows["LISA"]["avg_rise_rate"] == ""


def test_parse_then_profile_matches_direct(tmp_path, fixtures, scripts_dir):
    run("parse", "--scripts", scripts_dir, "--out", tmp_path / "p")
    run("profile", "--corpus", tmp_path / "p" / "corpus.json", *_lex(fixtures), *MINI, "--out", tmp_path / "o")
    assert (tmp_path / "o" / "profiles.csv").read_text() == (fixtures / "golden_profiles.csv").read_text()


def test_parse_skips_bad_scripts(tmp_path, scripts_dir):
    (scripts_dir / "broken.txt").write_text("no cues in this file at all\n")
    res = run("parse", "--scripts", scripts_dir, "--out", tmp_path / "p")
    assert "skipped 1" in res.output
    manifest = json.loads((tmp_path / "p" / "run_manifest.json").read_text())
    assert manifest["skipped"][0]["file"] == "broken.txt"
    assert len(json.loads((tmp_path / "p" / "corpus.json").read_text())["scripts"]) == 3


def test_parse_exclude(tmp_path, scripts_dir):
    run("parse", "--scripts", scripts_dir, "--exclude", "mini_flat", "--out", tmp_path / "p")
    titles = [s["title"] for s in json.loads((tmp_path / "p" / "corpus.json").read_text())["scripts"]]
    assert titles == ["mini_jaws", "mini_shining"]


def test_worker_count_does_not_change_outputs(tmp_path, synthetic):
    for w in (1, 2):
        run("profile", *_syn_args(synthetic), "--workers", w, "--out", tmp_path / f"w{w}", "--svg")
    for name in ("profiles.csv", "displacements.csv", "summary.json", "run_manifest.json", "peak_map.svg"):
        assert (tmp_path / "w1" / name).read_bytes() == (tmp_path / "w2" / name).read_bytes()
    arcs1 = sorted(p.name for p in (tmp_path / "w1" / "arcs").iterdir())
    assert arcs1 == sorted(p.name for p in (tmp_path / "w2" / "arcs").iterdir())
    for name in arcs1:
        assert (tmp_path / "w1" / "arcs" / name).read_bytes() == (tmp_path / "w2" / "arcs" / name).read_bytes()


def test_env_workers_fallback(tmp_path, synthetic, monkeypatch):
    monkeypatch.setenv("UEDYN_WORKERS", "2")
    run("profile", *_syn_args(synthetic), "--out", tmp_path / "env")
    run("profile", *_syn_args(synthetic), "--workers", "1", "--out", tmp_path / "one")
    assert (tmp_path / "env" / "profiles.csv").read_bytes() == (tmp_path / "one" / "profiles.csv").read_bytes()


def test_profiles_sorted_and_json_format(tmp_path, synthetic):
    run("profile", *_syn_args(synthetic), "--format", "json", "--out", tmp_path / "j")
    rows = json.loads((tmp_path / "j" / "profiles.json").read_text())
    keys = [(r["movie"], r["character"]) for r in rows]
    assert keys == sorted(keys) and len(rows) == 12


def test_rank_and_benchmark(tmp_path, synthetic):
    run("profile", *_syn_args(synthetic), "--out", tmp_path / "o")
    prof = tmp_path / "o" / "profiles.csv"
    res = run("rank", "--profiles", prof, "--metric", "variability", "--top-n", "5")
    lines = res.output.strip().splitlines()
    assert lines[0] == "rank,character,movie,variability" and len(lines) == 6
    vals = [float(line.split(",")[3]) for line in lines[1:]]
    assert vals == sorted(vals, reverse=True)
    allrows = list(csv.DictReader(open(prof)))
    assert vals[0] == pytest.approx(max(float(r["variability"]) for r in allrows))
    run("benchmark", "--profiles", prof, "--out", tmp_path / "b")
    bench = {r["metric"]: r for r in csv.DictReader(open(tmp_path / "b" / "benchmark.csv"))}
    assert int(bench["variability"]["n"]) == 12


def test_trend_and_discordance_outputs(tmp_path, synthetic):
    run("trend", "--corpus", synthetic / "corpus.json", "--emotion-lex", synthetic / "emotion_lexicon.tsv",
        "--n-boot", "10", "--out", tmp_path / "t", "--svg")
    rows = list(csv.DictReader(open(tmp_path / "t" / "trend.csv")))
    assert list(rows[0]) == ["category", "t", "estimate", "lo95", "hi95"] and len(rows) == 200
    assert (tmp_path / "t" / "trend_negative.svg").exists()
    run("discordance", "--corpus", synthetic / "corpus.json", "--vad-lex", synthetic / "vad_lexicon.tsv",
        "--n-boot", "10", "--out", tmp_path / "d", "--svg")
    rows = list(csv.DictReader(open(tmp_path / "d" / "discordance.csv")))
    assert list(rows[0]) == ["movie", "char_a", "char_b", "bin_t", "distance"]
    assert len(rows) == 6 * 100


def test_rerun_is_byte_identical_including_svg(tmp_path, synthetic):
    for k in (1, 2):
        run("trend", "--corpus", synthetic / "corpus.json", "--emotion-lex", synthetic / "emotion_lexicon.tsv",
            "--n-boot", "5", "--out", tmp_path / f"t{k}", "--svg")
    for name in ("trend.csv", "trend_summary.json", "trend_negative.svg", "run_manifest.json"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t2" / name).read_bytes()
    assert b"<dc:date>" not in (tmp_path / "t1" / "trend_negative.svg").read_bytes()


def test_manifest_contents(tmp_path, synthetic):
    run("profile", *_syn_args(synthetic), "--out", tmp_path / "o")
    m = json.loads((tmp_path / "o" / "run_manifest.json").read_text())
    assert m["config"]["min_turns"] == 50 and m["config"]["confidence"] == 0.68
    assert "workers" not in m["config"]
    assert set(m["inputs"]) == {"corpus", "emotion_lex", "vad_lex"}
    assert len(m["inputs"]["corpus"]["sha256"]) == 64


def test_exit_codes(tmp_path, fixtures, scripts_dir, synthetic):
    assert run("profile", "--corpus", tmp_path / "none.json", *_lex(fixtures), "--out", tmp_path / "x",
               ok=False).exit_code == 3
    bad = tmp_path / "bad.tsv"
    bad.write_text("word\tglee\t1\n")
    assert run("profile", "--scripts", scripts_dir, "--emotion-lex", bad, "--vad-lex", fixtures / "mini_vad.tsv",
               "--out", tmp_path / "x", ok=False).exit_code == 4
    assert run("profile", *_syn_args(synthetic), "--confidence", "1.5", "--out", tmp_path / "x",
               ok=False).exit_code == 5
    # defaults need 50 turns; the mini fixtures have far fewer
    res = run("profile", "--scripts", scripts_dir, *_lex(fixtures), "--out", tmp_path / "x", ok=False)
    assert res.exit_code == 5
    assert run("profile", "--out", tmp_path / "x", ok=False).exit_code == 2
    assert run("profile", *_lex(fixtures), "--out", tmp_path / "x", ok=False).exit_code == 2
    assert run("rank", "--profiles", tmp_path / "nope.csv", ok=False).exit_code == 3


def test_simulate_outputs(synthetic):
    truth = json.loads((synthetic / "truth.json").read_text())
    assert len(truth["characters"]) == 12 and truth["spec"]["seed"] == 5
    assert (synthetic / "emotion_lexicon.tsv").exists() and (synthetic / "vad_lexicon.tsv").exists()
