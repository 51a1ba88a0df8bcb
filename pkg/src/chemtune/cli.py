"""Command-line front end: ``chemtune <subcommand> ...``.

Subcommands: canon, validate, build, split, render, score, stats. Machine
output goes to files or stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import statistics
import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from chemtune.canon import canonical_smiles
from chemtune.chem.errors import ChemError
from chemtune.chem.valence import validate
from chemtune.corpus.ingest import DescriptionFilter, IngestError, IngestResult, SourceSpec, ingest_source
from chemtune.corpus.records import (
    TASKS,
    CorpusRecord,
    JsonlError,
    RecordError,
    export_jsonl,
    import_jsonl,
)
from chemtune.corpus.render import TemplateError, TemplateSet, render
from chemtune.corpus.split import SplitError, fractions_for, assign_splits, dedup, leakage_audit
from chemtune.descriptors import mol_stats
from chemtune.evaluation.scoring import Prediction, ReferenceSet, ScoreError, score_task
from chemtune.reaction import MIN_HEAVY_ATOMS

log = logging.getLogger("chemtune")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    """Settings for build/split/render, read from a single JSON file.

    Relative paths are resolved against the config file's directory.
    """

    sources: list[SourceSpec]
    seed: int
    fractions: dict = field(default_factory=lambda: {"default": [0.8, 0.1, 0.1]})
    templates: Optional[str] = None
    fingerprint: dict = field(default_factory=lambda: {"radius": 2, "width": 2048})
    min_product_heavy_atoms: int = MIN_HEAVY_ATOMS
    output_dir: str = "out"
    description_filter: DescriptionFilter = DescriptionFilter()

    @classmethod
    def from_dict(cls, data: dict, base: Path = Path(".")) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        split = data.get("split") or {}
        if "seed" not in split:
            raise ConfigError("config needs split.seed")
        fractions = split.get("fractions", {"default": [0.8, 0.1, 0.1]})
        if isinstance(fractions, list):
            fractions = {"default": fractions}
        try:
            for task in list(fractions) + ["default"]:
                fractions_for(fractions, task)
        except SplitError as exc:
            raise ConfigError(str(exc)) from None
        thresholds = data.get("thresholds") or {}
        min_heavy = int(thresholds.get("min_product_heavy_atoms", MIN_HEAVY_ATOMS))
        dfilter = DescriptionFilter.from_dict(data.get("description_filter"))
        sources = []
        for i, s in enumerate(data.get("sources") or []):
            try:
                path, task = s["path"], s["task"]
            except (KeyError, TypeError):
                raise ConfigError(f"source {i} needs path and task") from None
            sources.append(
                SourceSpec(
                    path=str((base / path).resolve()),
                    task=task,
                    column_map=dict(s.get("column_map") or {}),
                    format=s.get("format", "csv"),
                    name=s.get("name") or Path(path).stem,
                    constants=dict(s.get("constants") or {}),
                    min_heavy_atoms=min_heavy,
                    description_filter=dfilter,
                )
            )
        templates = data.get("templates")
        return cls(
            sources=sources,
            seed=int(split["seed"]),
            fractions=fractions,
            templates=str((base / templates).resolve()) if templates else None,
            fingerprint=dict(data.get("fingerprint") or {"radius": 2, "width": 2048}),
            min_product_heavy_atoms=min_heavy,
            output_dir=str((base / data.get("output_dir", "out")).resolve()),
            description_filter=dfilter,
        )

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data, path.parent)

    def template_set(self) -> TemplateSet:
        return TemplateSet.load(self.templates) if self.templates else TemplateSet.default()


_ID_PART = re.compile(r"(\d+)")


def record_sort_key(record_id: str) -> tuple:
    """Natural order on ids: numeric runs compare as numbers."""
    return tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in _ID_PART.split(record_id) if p)


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _lines(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdin.read().splitlines()
    return Path(path).read_text(encoding="utf-8").splitlines()


# ---------------------------------------------------------------------------
# subcommands


def cmd_canon(args) -> int:
    bad = 0
    out = sys.stdout
    for n, line in enumerate(_lines(args.input), 1):
        text = line.strip()
        if not text:
            continue
        try:
            out.write(canonical_smiles(text) + "\n")
        except ChemError as exc:
            bad += 1
            log.error("line %d: %s", n, exc)
    return 1 if bad else 0


def cmd_validate(args) -> int:
    bad = 0
    for n, line in enumerate(_lines(args.input), 1):
        text = line.strip()
        if not text:
            continue
        rep = validate(text)
        if not rep.valid:
            bad += 1
        row = {
            "line": n,
            "smiles": text,
            "valid": rep.valid,
            "failures": [{"kind": f.kind, "message": f.message, "atom_index": f.atom_index} for f in rep.failures],
            "flags": rep.flags,
        }
        sys.stdout.write(json.dumps(row, ensure_ascii=False) + "\n")
    return 1 if bad else 0


def build(config: PipelineConfig, jobs: int = 1) -> tuple[list[CorpusRecord], list[dict], dict]:
    result = IngestResult()
    per_source = {}
    for spec in config.sources:
        part = ingest_source(spec, jobs)
        per_source[spec.source] = {"records": len(part.records), "rejects": len(part.rejects)}
        result.extend(part)
    records = dedup(sorted(result.records, key=lambda r: record_sort_key(r.id)))
    stats = {
        "records": len(records),
        "duplicates_removed": len(result.records) - len(records),
        "rejects": len(result.rejects),
        "by_task": dict(sorted(Counter(r.task for r in records).items())),
        "by_source": per_source,
    }
    return records, result.rejects, stats


def cmd_build(args) -> int:
    config = PipelineConfig.load(args.config)
    out = Path(args.out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, rejects, stats = build(config, args.jobs)
    export_jsonl(records, out / "records.jsonl")
    export_jsonl(rejects, out / "rejects.jsonl")
    _write_json(out / "stats.json", stats)
    log.info("built %d records (%d rejected) into %s", len(records), len(rejects), out)
    return 0


def cmd_split(args) -> int:
    config = PipelineConfig.load(args.config)
    records = import_jsonl(args.input)
    seed = config.seed if args.seed is None else args.seed
    out_dir = Path(config.output_dir)
    out_path = Path(args.out) if args.out else out_dir / "records.split.jsonl"
    audit_path = Path(args.audit) if args.audit else out_path.parent / "leakage_audit.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    split = assign_splits(records, config.fractions, seed)
    split.sort(key=lambda r: record_sort_key(r.id))
    audit = leakage_audit(split)
    export_jsonl(split, out_path)
    _write_json(audit_path, audit)
    if audit["violations"]:
        log.error("%d linkage keys cross the test boundary", len(audit["violations"]))
        return 1
    return 0


def cmd_render(args) -> int:
    config = PipelineConfig.load(args.config)
    records = import_jsonl(args.input)
    templates = config.template_set()
    seed = config.seed if args.seed is None else args.seed
    out_path = Path(args.out) if args.out else Path(config.output_dir) / "samples.jsonl"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    samples = [render(r, templates, seed) for r in sorted(records, key=lambda r: record_sort_key(r.id))]
    export_jsonl(samples, out_path)
    return 0


def _load_references(path: str) -> dict[str, list[str]]:
    """Reference sets from ``{record_id, references}`` lines or from corpus records.

    Corpus records are grouped by (task, input): every gold answer sharing an
    input becomes a reference of each record with that input.
    """
    from chemtune.corpus.render import expected_answer

    rows = import_jsonl(path, kind=None)
    out: dict[str, list[str]] = {}
    records = []
    for row in rows:
        if "task" in row and "inputs" in row:
            records.append(CorpusRecord.from_dict(row))
        else:
            ref = ReferenceSet.from_dict(row)
            out[ref.record_id] = ref.references
    by_input: dict[tuple, list[str]] = {}
    for r in records:
        by_input.setdefault((r.task, r.input_key()), []).append(expected_answer(r))
    for r in records:
        out[r.id] = by_input[(r.task, r.input_key())]
    return out


def cmd_score(args) -> int:
    if args.task not in TASKS:
        raise ScoreError(f"unknown task {args.task!r}")
    preds = [Prediction.from_dict(d) for d in import_jsonl(args.predictions, kind=None)]
    refs = _load_references(args.references)
    missing = [p.record_id for p in preds if p.record_id not in refs]
    if missing:
        raise ScoreError(f"no reference for record_id {missing[0]!r} ({len(missing)} missing)")
    report = score_task(preds, refs, args.task, k=args.k, train_mean=args.train_mean)
    out = Path(args.out) if args.out else Path("report.json")
    _write_json(out, report.to_dict())
    sys.stdout.write(report.table() + "\n")
    return 0


def _molecules(records: Sequence[CorpusRecord]) -> list[str]:
    mols = set()
    for r in records:
        for p in list(r.inputs.values()) + list(r.outputs.values()):
            if p.kind != "smiles":
                continue
            parts = str(p.value).split(".") if r.task in ("FS", "RS") else [str(p.value)]
            mols.update(x for x in parts if x)
    return sorted(mols)


def _summary(values: list[float], bin_width: Optional[float] = None) -> dict:
    if bin_width is None:
        hist = Counter(int(v) for v in values)
        histogram = {str(k): hist[k] for k in sorted(hist)}
    else:
        hist = Counter(int(v // bin_width) for v in values)
        histogram = {
            f"{k * bin_width:g}-{(k + 1) * bin_width:g}": hist[k] for k in sorted(hist)
        }
    out = {
        "mean": round(statistics.fmean(values), 6),
        "median": statistics.median(values),
        "min": min(values),
        "max": max(values),
        "histogram": histogram,
    }
    if bin_width is not None:
        out["bin_width"] = bin_width
    return out


def corpus_stats(records: Sequence[CorpusRecord]) -> dict:
    rows = []
    for smi in _molecules(records):
        s = mol_stats(smi)
        rows.append(
            {
                "smiles": smi,
                "heavy_atom_count": s.heavy_atom_count,
                "molecular_weight": s.molecular_weight,
                "ring_count": s.ring_count,
            }
        )
    if not rows:
        return {"molecules": [], "summary": {}}
    summary = {
        "molecules": len(rows),
        "heavy_atom_count": _summary([r["heavy_atom_count"] for r in rows]),
        "molecular_weight": _summary([r["molecular_weight"] for r in rows], 50.0),
        "ring_count": _summary([r["ring_count"] for r in rows]),
    }
    return {"molecules": rows, "summary": summary}


def cmd_stats(args) -> int:
    records = import_jsonl(args.input)
    data = corpus_stats(records)
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chemtune", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("canon", help="canonicalize SMILES, one per line")
    p.add_argument("--in", dest="input", help="input file (default: stdin)")
    p.set_defaults(func=cmd_canon)

    p = sub.add_parser("validate", help="validity report per SMILES line (JSONL)")
    p.add_argument("--in", dest="input", help="input file (default: stdin)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("build", help="ingest sources into records.jsonl")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", help="override config output_dir")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("split", help="assign train/valid/test splits")
    p.add_argument("--config", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", help="output records (default: <output_dir>/records.split.jsonl)")
    p.add_argument("--audit", help="audit path (default: leakage_audit.json next to --out)")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("render", help="render instruction samples")
    p.add_argument("--config", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", help="output samples (default: <output_dir>/samples.jsonl)")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("score", help="score predictions for one task")
    p.add_argument("--task", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--references", required=True, help="reference sets or corpus records (JSONL)")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--train-mean", type=float, help="imputation value for regression tasks")
    p.add_argument("--out", help="report path (default: report.json)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("stats", help="molecule statistics of a record file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", help="output JSON (default: stdout)")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConfigError, IngestError, JsonlError, RecordError, SplitError, TemplateError, ScoreError) as exc:
        log.error("%s", exc)
        return 2
    except FileNotFoundError as exc:
        log.error("file not found: %s", exc.filename)
        return 2


if __name__ == "__main__":
    sys.exit(main())
