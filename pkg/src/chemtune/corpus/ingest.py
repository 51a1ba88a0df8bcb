"""Source table ingestion: rows become validated, canonical corpus records."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from chemtune.canon import canonical_smiles
from chemtune.chem.errors import ChemError
from chemtune.corpus.records import TASK_SCHEMA, CorpusRecord, Payload
from chemtune.descriptors import FormulaError, molecular_formula, parse_formula
from chemtune.reaction import (
    MIN_HEAVY_ATOMS,
    ReactionError,
    clean_forward,
    clean_retro,
    parse_reaction,
    relabel_by_atom_maps,
)

FORMATS = ("csv", "tsv", "reaction-lines")

_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f"}


class IngestError(ValueError):
    pass


class RowReject(ValueError):
    pass


@dataclass(frozen=True)
class DescriptionFilter:
    """Wording/length rules for MC and MG descriptions.

    A description is rejected if it is shorter than ``min_length`` or longer
    than ``max_length`` characters, contains any banned phrase, or lacks any
    of the required keywords (all comparisons case-insensitive).
    """

    min_length: int = 20
    max_length: int = 2000
    banned_phrases: tuple[str, ...] = ("no description available", "with data available")
    required_keywords: tuple[str, ...] = ()

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "DescriptionFilter":
        d = dict(d or {})
        for k in ("banned_phrases", "required_keywords"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)

    def reason(self, text: str) -> Optional[str]:
        if len(text) < self.min_length:
            return f"description shorter than {self.min_length} characters"
        if len(text) > self.max_length:
            return f"description longer than {self.max_length} characters"
        low = text.casefold()
        for phrase in self.banned_phrases:
            if phrase.casefold() in low:
                return f"description contains banned phrase {phrase!r}"
        for word in self.required_keywords:
            if word.casefold() not in low:
                return f"description lacks required keyword {word!r}"
        return None


@dataclass(frozen=True)
class SourceSpec:
    """How to turn one source table into records.

    ``task`` is a task name, ``"NC"`` (all four naming directions from one
    row) or ``"reaction"`` (FS and RS from one reaction SMILES).
    ``column_map`` maps record field names to source column names;
    ``constants`` supplies fixed text fields such as a SIDER disorder name.
    """

    path: str
    task: str
    column_map: dict = field(default_factory=dict)
    format: str = "csv"
    name: str = ""
    constants: dict = field(default_factory=dict)
    min_heavy_atoms: int = MIN_HEAVY_ATOMS
    description_filter: DescriptionFilter = DescriptionFilter()

    @property
    def source(self) -> str:
        return self.name or Path(self.path).stem


@dataclass
class IngestResult:
    records: list[CorpusRecord] = field(default_factory=list)
    rejects: list[dict] = field(default_factory=list)

    def extend(self, other: "IngestResult") -> None:
        self.records.extend(other.records)
        self.rejects.extend(other.rejects)


def _required_fields(task: str) -> list[str]:
    if task == "NC":
        return ["smiles", "iupac"]
    if task in ("reaction", "FS", "RS"):
        return ["reaction"]
    if task not in TASK_SCHEMA:
        raise IngestError(f"unknown task {task!r}")
    ins, outs = TASK_SCHEMA[task]
    return list(ins) + list(outs)


def read_rows(spec: SourceSpec) -> list[tuple[int, dict]]:
    """Rows as ``(1-based data row number, {field: cell})`` after column mapping."""
    if spec.format not in FORMATS:
        raise IngestError(f"unknown source format {spec.format!r}")
    path = Path(spec.path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc.strerror}") from None
    if spec.format == "reaction-lines":
        rows = []
        for n, line in enumerate(text.splitlines(), 1):
            if line.strip() and not line.lstrip().startswith("#"):
                rows.append((n, {"reaction": line.strip()}))
        return rows
    delim = "," if spec.format == "csv" else "\t"
    reader = csv.DictReader(text.splitlines(), delimiter=delim)
    header = reader.fieldnames or []
    cmap = dict(spec.column_map)
    for name in _required_fields(spec.task):
        if name not in spec.constants:
            cmap.setdefault(name, name)
    for name, col in cmap.items():
        if col not in header:
            raise IngestError(f"{path}: missing column {col!r} (for field {name!r})")
    rows = []
    for n, raw in enumerate(reader, 1):
        rows.append((n, {name: (raw.get(col) or "").strip() for name, col in cmap.items()}))
    return rows


def _smiles(value: str, name: str) -> str:
    if not value:
        raise RowReject(f"empty SMILES in field {name!r}")
    try:
        return canonical_smiles(value)
    except ChemError as exc:
        raise RowReject(f"invalid SMILES in field {name!r}: {exc}") from None


def _payload(kind: str, value: str, name: str, spec: SourceSpec) -> Payload:
    if kind == "smiles":
        return Payload(kind, _smiles(value, name))
    if kind == "formula":
        try:
            return Payload(kind, parse_formula(value).hill())
        except FormulaError as exc:
            raise RowReject(str(exc)) from None
    if kind == "number":
        try:
            x = float(value)
        except ValueError:
            raise RowReject(f"field {name!r} is not a number: {value!r}") from None
        if not math.isfinite(x):
            raise RowReject(f"field {name!r} is not finite")
        return Payload(kind, x)
    if kind == "boolean":
        low = value.casefold()
        if low in _TRUE or low in ("1.0",):
            return Payload(kind, True)
        if low in _FALSE or low in ("0.0",):
            return Payload(kind, False)
        raise RowReject(f"field {name!r} is not a boolean: {value!r}")
    if not value:
        raise RowReject(f"empty field {name!r}")
    if kind == "text" and spec.task in ("MC", "MG"):
        why = spec.description_filter.reason(value)
        if why:
            raise RowReject(why)
    return Payload(kind, value)


def _row_records(n: int, row: dict, spec: SourceSpec) -> list[CorpusRecord]:
    row = {**row, **spec.constants}
    src = spec.source
    selfies = row.get("selfies") or None
    if spec.task == "NC":
        smi = Payload("smiles", _smiles(row["smiles"], "smiles"))
        name = _payload("iupac", row["iupac"], "iupac", spec)
        if row.get("formula"):
            formula = _payload("formula", row["formula"], "formula", spec)
        else:
            formula = Payload("formula", molecular_formula(smi.value).hill())
        pairs = {
            "NC-I2F": ({"iupac": name}, {"formula": formula}),
            "NC-I2S": ({"iupac": name}, {"smiles": smi}),
            "NC-S2F": ({"smiles": smi}, {"formula": formula}),
            "NC-S2I": ({"smiles": smi}, {"iupac": name}),
        }
        return [
            CorpusRecord(f"{src}:{n}:{task}", task, ins, outs, selfies, src)
            for task, (ins, outs) in pairs.items()
        ]
    if spec.task in ("reaction", "FS", "RS"):
        return _reaction_records(n, row["reaction"], spec)
    ins_schema, outs_schema = TASK_SCHEMA[spec.task]
    ins = {k: _payload(kind, row[k], k, spec) for k, kind in ins_schema.items()}
    outs = {k: _payload(kind, row[k], k, spec) for k, kind in outs_schema.items()}
    if row.get("property"):
        ins["property"] = Payload("text", row["property"])
    return [CorpusRecord(f"{src}:{n}:{spec.task}", spec.task, ins, outs, selfies, src)]


def _reaction_records(n: int, text: str, spec: SourceSpec) -> list[CorpusRecord]:
    src = spec.source
    try:
        rxn = parse_reaction(text)
        out: list[CorpusRecord] = []
        relabeled = relabel_by_atom_maps(rxn)
        rs = clean_retro(relabeled, spec.min_heavy_atoms)
        reactants = ".".join(rs[0].output_reactants) if rs else ""
        if spec.task in ("reaction", "FS"):
            fs = clean_forward(rxn, spec.min_heavy_atoms)
            if fs is not None:
                meta = {"reactants": reactants} if reactants else {}
                out.append(
                    CorpusRecord(
                        f"{src}:{n}:FS",
                        "FS",
                        {"reactants": Payload("smiles", ".".join(fs.input_chemicals))},
                        {"products": Payload("smiles", ".".join(fs.output_chemicals))},
                        None,
                        src,
                        meta=meta,
                    )
                )
        if spec.task in ("reaction", "RS"):
            for k, rec in enumerate(rs):
                out.append(
                    CorpusRecord(
                        f"{src}:{n}:RS:{k}",
                        "RS",
                        {"product": Payload("smiles", rec.input_product)},
                        {"reactants": Payload("smiles", ".".join(rec.output_reactants))},
                        None,
                        src,
                    )
                )
    except ReactionError as exc:
        raise RowReject(exc.reason) from None
    if not out:
        raise RowReject("no product survives cleaning")
    return out


def process_rows(rows: list[tuple[int, dict]], spec: SourceSpec) -> IngestResult:
    result = IngestResult()
    for n, row in rows:
        try:
            result.records.extend(_row_records(n, row, spec))
        except RowReject as exc:
            result.rejects.append({"source": spec.source, "source_row": n, "reason": str(exc)})
    return result


def _chunks(items: list, size: int) -> list[list]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def _process_chunk(args):
    rows, spec = args
    return process_rows(rows, spec)


def ingest_table(
    path: Union[str, Path],
    column_map: Optional[dict] = None,
    task: str = "",
    fmt: str = "csv",
    jobs: int = 1,
    **options,
) -> IngestResult:
    """Parse one source table into records and a reject log.

    Each row is validated and canonicalized independently; rejected rows are
    reported as ``{"source", "source_row", "reason"}``. Output order follows
    the source rows whatever ``jobs`` is.
    """
    spec = SourceSpec(str(path), task, dict(column_map or {}), fmt, **options)
    return ingest_source(spec, jobs)


def ingest_source(spec: SourceSpec, jobs: int = 1) -> IngestResult:
    rows = read_rows(spec)
    if jobs <= 1 or len(rows) < 2:
        return process_rows(rows, spec)
    result = IngestResult()
    size = max(1, -(-len(rows) // (jobs * 4)))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_process_chunk, [(c, spec) for c in _chunks(rows, size)]):
            result.extend(part)
    return result
