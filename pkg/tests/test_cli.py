import io
import json
import shutil
import subprocess
import sys

import pytest

from chemtune.canon import canonical_smiles
from chemtune.cli import main

from conftest import FIXTURES

PIPE = FIXTURES / "pipeline"
EVAL = FIXTURES / "eval"


def run(monkeypatch, capsys, argv, stdin=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_jsonl(path):
    return [json.loads(l) for l in path.read_text().splitlines() if l.strip()]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    for f in PIPE.iterdir():
        if f.is_file():
            shutil.copy(f, tmp_path / f.name)
    shutil.copy(FIXTURES / "reactions_25.txt", tmp_path / "reactions_25.txt")
    full = json.loads((tmp_path / "config_full.json").read_text())
    for src in full["sources"]:
        if src["path"].startswith("../"):
            src["path"] = src["path"][3:]
    (tmp_path / "config_full.json").write_text(json.dumps(full))
    monkeypatch.chdir(tmp_path)
    return tmp_path


def pipeline(config, out, jobs=1, seed=None):
    """build, split and render into ``out``; returns the exit codes."""
    codes = [main(["build", "--config", str(config), "--out-dir", str(out), "--jobs", str(jobs)])]
    split = ["split", "--config", str(config), "--in", str(out / "records.jsonl"), "--out", str(out / "split.jsonl")]
    if seed is not None:
        split += ["--seed", str(seed)]
    codes.append(main(split))
    codes.append(main(["render", "--config", str(config), "--in", str(out / "split.jsonl"), "--out", str(out / "samples.jsonl")]))
    return codes


# --- canon / validate ---------------------------------------------------------------------


def test_canon_stdin(monkeypatch, capsys):
    code, out, _ = run(monkeypatch, capsys, ["canon"], "OCC\nc1ccccc1\n")
    assert code == 0
    assert out.splitlines() == [canonical_smiles("CCO"), canonical_smiles("c1ccccc1")]


def test_canon_reports_bad_lines(monkeypatch, capsys, caplog):
    code, out, _ = run(monkeypatch, capsys, ["canon"], "CCO\nC1CC\n\nCC\n")
    assert code == 1
    assert len(out.splitlines()) == 2
    assert "line 2" in caplog.text


def test_canon_empty_input(monkeypatch, capsys):
    code, out, _ = run(monkeypatch, capsys, ["canon"], "")
    assert (code, out) == (0, "")


def test_canon_file(tmp_path, monkeypatch, capsys):
    f = tmp_path / "in.smi"
    f.write_text("OC\n")
    code, out, _ = run(monkeypatch, capsys, ["canon", "--in", str(f)])
    assert code == 0 and out.strip() == canonical_smiles("CO")


def test_validate_jsonl(monkeypatch, capsys):
    code, out, _ = run(monkeypatch, capsys, ["validate"], "CCO\nF=F\n")
    rows = [json.loads(l) for l in out.splitlines()]
    assert code == 1
    assert [r["valid"] for r in rows] == [True, False]
    assert rows[1]["failures"][0]["kind"] == "valence"
    assert rows[1]["line"] == 2


# --- build / split / render ---------------------------------------------------------------


def test_build_outputs(workdir):
    assert main(["build", "--config", "config.json", "--out-dir", "b"]) == 0
    assert len(read_jsonl(workdir / "b" / "records.jsonl")) == 16
    assert len(read_jsonl(workdir / "b" / "rejects.jsonl")) == 4
    stats = json.loads((workdir / "b" / "stats.json").read_text())
    assert stats["records"] == 16 and stats["rejects"] == 4


def test_build_missing_column_is_config_error(workdir, caplog):
    cfg = json.loads((workdir / "config.json").read_text())
    cfg["sources"][0]["column_map"]["smiles"] = "no_such_column"
    (workdir / "bad.json").write_text(json.dumps(cfg))
    assert main(["build", "--config", "bad.json", "--out-dir", "x"]) == 2
    assert "no_such_column" in caplog.text


def test_build_missing_config(workdir):
    assert main(["build", "--config", "nope.json"]) == 2


def test_split_audit_clean_and_seeded(workdir):
    assert pipeline("config_full.json", workdir / "a") == [0, 0, 0]
    audit = json.loads((workdir / "a" / "leakage_audit.json").read_text())
    assert audit["violations"] == []
    main(["split", "--config", "config_full.json", "--in", "a/records.jsonl", "--out", "a/s99.jsonl", "--seed", "99"])
    first = {r["id"]: r["split"] for r in read_jsonl(workdir / "a" / "split.jsonl")}
    other = {r["id"]: r["split"] for r in read_jsonl(workdir / "a" / "s99.jsonl")}
    assert first.keys() == other.keys()
    assert first != other


def test_render_samples(workdir):
    pipeline("config.json", workdir / "r")
    samples = read_jsonl(workdir / "r" / "samples.jsonl")
    assert len(samples) == 16
    for s in samples:
        assert s["query"] and s["response"]
        assert s["split"] in ("train", "valid", "test")


def test_render_missing_template(workdir, caplog):
    main(["build", "--config", "config.json", "--out-dir", "r"])
    only_mg = [{"task": "MG", "query": "Write a molecule: {description}", "response": "{smiles}"}]
    (workdir / "only_mg.json").write_text(json.dumps(only_mg))
    cfg = json.loads((workdir / "config.json").read_text())
    cfg["templates"] = "only_mg.json"
    (workdir / "tpl.json").write_text(json.dumps(cfg))
    assert main(["render", "--config", "tpl.json", "--in", "r/records.jsonl", "--out", "r/s.jsonl"]) == 2
    assert "template" in caplog.text.lower()


# --- score ---------------------------------------------------------------------------------


def test_score_fixture(workdir, capsys):
    code = main(["score", "--task", "FS", "--predictions", str(EVAL / "fs_predictions.jsonl"),
                 "--references", str(EVAL / "fs_references.jsonl"), "--k", "2", "--out", "rep.json"])
    assert code == 0
    report = json.loads((workdir / "rep.json").read_text())
    assert report["metrics"]["em"] == 0.5
    assert report["metrics"]["top2_em"] == 0.6
    assert "fts_morgan" in capsys.readouterr().out


def test_score_k_monotone(workdir):
    args = ["score", "--task", "FS", "--predictions", str(EVAL / "fs_predictions.jsonl"),
            "--references", str(EVAL / "fs_references.jsonl")]
    main(args + ["--k", "1", "--out", "k1.json"])
    main(args + ["--k", "5", "--out", "k5.json"])
    k1 = json.loads((workdir / "k1.json").read_text())["metrics"]
    k5 = json.loads((workdir / "k5.json").read_text())["metrics"]
    assert k5["top5_em"] >= k1["em"]


def test_score_missing_record_is_an_error(workdir, caplog):
    (workdir / "p.jsonl").write_text(json.dumps({"record_id": "zzz", "outputs": ["CCO"]}) + "\n")
    code = main(["score", "--task", "FS", "--predictions", "p.jsonl",
                 "--references", str(EVAL / "fs_references.jsonl"), "--out", "x.json"])
    assert code == 2
    assert "zzz" in caplog.text


def test_score_against_corpus_records(workdir):
    main(["build", "--config", "config.json", "--out-dir", "c"])
    recs = [r for r in read_jsonl(workdir / "c" / "records.jsonl") if r["task"] == "PP-BBBP"]
    preds = [{"record_id": r["id"], "outputs": ["<BOOLEAN>Yes</BOOLEAN>"]} for r in recs]
    (workdir / "p.jsonl").write_text("".join(json.dumps(p) + "\n" for p in preds))
    assert main(["score", "--task", "PP-BBBP", "--predictions", "p.jsonl",
                 "--references", "c/records.jsonl", "--out", "rep.json"]) == 0
    acc = json.loads((workdir / "rep.json").read_text())["metrics"]["accuracy"]
    want = sum(r["outputs"]["label"]["value"] is True for r in recs) / len(recs)
    assert acc == pytest.approx(want)


def test_score_unknown_task(workdir):
    assert main(["score", "--task", "XX", "--predictions", "a", "--references", "b"]) == 2


# --- stats ---------------------------------------------------------------------------------


def test_stats_benzene_rings(workdir, capsys):
    rec = {"task": "MG", "inputs": {"description": {"kind": "text", "value": "a six-membered aromatic ring"}},
           "outputs": {"smiles": {"kind": "smiles", "value": "c1ccccc1"}}, "source": "t", "split": None,
           "selfies": None}
    rows = [dict(rec, id=f"t:{i}:MG") for i in range(3)]
    rows.append(dict(rec, id="t:9:MG", outputs={"smiles": {"kind": "smiles", "value": "Cc1ccccc1"}}))
    (workdir / "r.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))
    assert main(["stats", "--in", "r.jsonl", "--out", "s.json"]) == 0
    data = json.loads((workdir / "s.json").read_text())
    assert data["summary"]["molecules"] == 2
    assert data["summary"]["ring_count"]["histogram"] == {"1": 2}


def test_stats_empty_input(workdir, capsys):
    (workdir / "e.jsonl").write_text("")
    assert main(["stats", "--in", "e.jsonl"]) == 0
    assert json.loads(capsys.readouterr().out) == {"molecules": [], "summary": {}}


# --- determinism ---------------------------------------------------------------------------


def test_pipeline_byte_identical_across_runs_and_jobs(workdir):
    pipeline("config_full.json", workdir / "j1", jobs=1)
    pipeline("config_full.json", workdir / "j8", jobs=8)
    pipeline("config_full.json", workdir / "again", jobs=1)
    for name in ("records.jsonl", "rejects.jsonl", "stats.json", "split.jsonl", "leakage_audit.json", "samples.jsonl"):
        a = (workdir / "j1" / name).read_bytes()
        assert a == (workdir / "j8" / name).read_bytes(), name
        assert a == (workdir / "again" / name).read_bytes(), name


def test_console_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "chemtune.cli", "canon"], input="OCC\n", capture_output=True, text=True, cwd=tmp_path
    )
    assert out.returncode == 0
    assert out.stdout.strip() == canonical_smiles("CCO")
