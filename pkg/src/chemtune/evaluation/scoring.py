"""Per-task metric bundles over predictions and reference sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import fmean
from typing import Mapping, Optional, Sequence, Union

from chemtune.corpus.records import PP_CLASSIFICATION, PP_REGRESSION, TASK_SCHEMA
from chemtune.evaluation.extract import extract_answer
from chemtune.evaluation.metrics import (
    EM_BY_KIND,
    accuracy,
    corpus_bleu,
    fts,
    is_valid_smiles,
    meteor_lite,
    rmse,
    rouge,
)
from chemtune.descriptors import FormulaError, parse_formula

FTS_TASKS = ("MG", "FS", "RS")


class ScoreError(ValueError):
    pass


@dataclass
class Prediction:
    record_id: str
    raw_outputs: list[str]

    def __post_init__(self):
        if not self.raw_outputs:
            raise ScoreError(f"prediction {self.record_id} has no outputs")

    @classmethod
    def from_dict(cls, d: dict) -> "Prediction":
        outs = d.get("outputs", d.get("raw_outputs"))
        if isinstance(outs, str):
            outs = [outs]
        if not isinstance(outs, list) or not all(isinstance(o, str) for o in outs):
            raise ScoreError(f"prediction {d.get('record_id')!r}: outputs must be a list of strings")
        return cls(str(d["record_id"]), outs)


@dataclass
class ReferenceSet:
    record_id: str
    references: list[str]

    def __post_init__(self):
        if not self.references:
            raise ScoreError(f"reference set {self.record_id} is empty")

    @classmethod
    def from_dict(cls, d: dict) -> "ReferenceSet":
        refs = d["references"]
        if isinstance(refs, str):
            refs = [refs]
        return cls(str(d["record_id"]), [str(r) for r in refs])


@dataclass
class TaskReport:
    task: str
    metrics: dict[str, Optional[float]] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"task": self.task, "metrics": self.metrics, "counts": self.counts}
        if self.notes:
            d["notes"] = self.notes
        return d

    def table(self) -> str:
        rows = [("metric", "value")]
        for k, v in self.metrics.items():
            rows.append((k, "n/a" if v is None else f"{v:.4f}"))
        for k, v in self.counts.items():
            rows.append((k, str(v)))
        width = max(len(r[0]) for r in rows)
        lines = [f"task: {self.task}"]
        lines += [f"{a.ljust(width)}  {b}" for a, b in rows]
        return "\n".join(lines)


RefMap = Mapping[str, Union[ReferenceSet, Sequence[str]]]


def _refs(references: RefMap, record_id: str) -> list[str]:
    try:
        r = references[record_id]
    except KeyError:
        raise ScoreError(f"no reference for record {record_id!r}") from None
    refs = list(r.references if isinstance(r, ReferenceSet) else r)
    if not refs:
        raise ScoreError(f"empty reference set for record {record_id!r}")
    return refs


def answer_kind(task: str) -> str:
    if task not in TASK_SCHEMA:
        raise ScoreError(f"unknown task {task!r}")
    return next(iter(TASK_SCHEMA[task][1].values()))


def top_k_em(
    predictions: Sequence[Prediction], references: RefMap, k: int, kind: str
) -> float:
    """Fraction of records where any of the first ``k`` outputs matches a reference."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not predictions:
        return 0.0
    em = EM_BY_KIND[kind]
    hits = 0
    for p in predictions:
        refs = _refs(references, p.record_id)
        if any(em(extract_answer(raw, kind), refs) for raw in p.raw_outputs[:k]):
            hits += 1
    return hits / len(predictions)


def validity_rate(predictions: Sequence[Prediction], kind: str = "smiles") -> Optional[float]:
    """Valid fraction among top-1 outputs with an extractable answer (None if there are none)."""
    if kind != "smiles":
        raise ValueError("validity is defined for SMILES answers only")
    answers = [extract_answer(p.raw_outputs[0], kind) for p in predictions]
    answers = [a for a in answers if a is not None]
    if not answers:
        return None
    return sum(1 for a in answers if is_valid_smiles(a)) / len(answers)


def _bool_value(text: Optional[str]) -> Optional[bool]:
    if text is None:
        return None
    low = text.strip().casefold()
    if low in ("yes", "true", "1"):
        return True
    if low in ("no", "false", "0"):
        return False
    return None


def _float_value(text: Optional[str]) -> Optional[float]:
    try:
        return float(text)
    except (TypeError, ValueError):
        return None


def score_task(
    predictions: Sequence[Prediction],
    references: RefMap,
    task: str,
    k: int = 1,
    train_mean: Optional[float] = None,
) -> TaskReport:
    """Compute the task's metric bundle.

    SMILES tasks report EM and validity (MG/FS/RS add Morgan and path FTS);
    formula and IUPAC tasks report EM; regression tasks RMSE with
    unextractable values replaced by ``train_mean``; classification tasks
    accuracy; MC the text metrics against the first reference.
    """
    kind = answer_kind(task)
    preds = sorted(predictions, key=lambda p: p.record_id)
    report = TaskReport(task)
    refs = {p.record_id: _refs(references, p.record_id) for p in preds}
    top1 = [extract_answer(p.raw_outputs[0], kind) for p in preds]
    n = len(preds)
    unextractable = sum(1 for a in top1 if a is None)
    invalid = 0

    if task in PP_REGRESSION:
        golds = []
        for p in preds:
            g = _float_value(refs[p.record_id][0])
            if g is None:
                raise ScoreError(f"reference for {p.record_id} is not a number")
            golds.append(g)
        if train_mean is None and golds:
            train_mean = fmean(golds)
            report.notes.append("no training mean given; imputed with the reference mean")
        values = []
        for a in top1:
            x = _float_value(a)
            if a is not None and x is None:
                invalid += 1
            values.append(train_mean if x is None else x)
        report.metrics["rmse"] = rmse(values, golds) if n else None
    elif task in PP_CLASSIFICATION:
        golds = [_bool_value(refs[p.record_id][0]) for p in preds]
        if any(g is None for g in golds):
            raise ScoreError("classification references must be Yes/No")
        values = [_bool_value(a) for a in top1]
        invalid = sum(1 for a, v in zip(top1, values) if a is not None and v is None)
        report.metrics["accuracy"] = accuracy(values, golds) if n else None
    elif task == "MC":
        hyps = [a or "" for a in top1]
        gold = [refs[p.record_id][0] for p in preds]
        m = report.metrics
        m["bleu2"] = corpus_bleu(hyps, gold, 2) if n else None
        m["bleu4"] = corpus_bleu(hyps, gold, 4) if n else None
        for v in ("1", "2", "L"):
            m[f"rouge{v}"] = fmean(rouge(h, g, v) for h, g in zip(hyps, gold)) if n else None
        m["meteor_lite"] = fmean(meteor_lite(h, g) for h, g in zip(hyps, gold)) if n else None
    else:
        em = EM_BY_KIND[kind]
        hits = [em(a, refs[p.record_id]) for a, p in zip(top1, preds)]
        report.metrics["em"] = sum(hits) / n if n else None
        if k > 1:
            report.metrics[f"top{k}_em"] = top_k_em(preds, refs, k, kind)
        if kind == "smiles":
            invalid = sum(1 for a in top1 if a is not None and not is_valid_smiles(a))
            report.metrics["validity"] = validity_rate(preds) if n else None
            if task in FTS_TASKS:
                for fp in ("morgan", "path"):
                    scores = [
                        max(fts(a, r, fp) for r in refs[p.record_id]) if a is not None else 0.0
                        for a, p in zip(top1, preds)
                    ]
                    report.metrics[f"fts_{fp}"] = fmean(scores) if n else None
        elif kind == "formula":
            for a in top1:
                if a is None:
                    continue
                try:
                    parse_formula(a)
                except FormulaError:
                    invalid += 1

    report.counts = {
        "predictions": n,
        "scored": n - unextractable,
        "unextractable": unextractable,
        "invalid": invalid,
    }
    return report
