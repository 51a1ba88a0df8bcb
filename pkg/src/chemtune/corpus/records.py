"""Corpus record types, per-task schemas and JSONL serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Union

PAYLOAD_KINDS = ("smiles", "iupac", "formula", "text", "number", "boolean")
SPLITS = ("train", "valid", "test")

NC_TASKS = ("NC-I2F", "NC-I2S", "NC-S2F", "NC-S2I")
PP_REGRESSION = ("PP-ESOL", "PP-Lipo")
PP_CLASSIFICATION = ("PP-BBBP", "PP-ClinTox", "PP-HIV", "PP-SIDER")
PP_TASKS = PP_REGRESSION + PP_CLASSIFICATION

# task -> (required input fields, required output fields); field -> payload kind
TASK_SCHEMA: dict[str, tuple[dict[str, str], dict[str, str]]] = {
    "NC-I2F": ({"iupac": "iupac"}, {"formula": "formula"}),
    "NC-I2S": ({"iupac": "iupac"}, {"smiles": "smiles"}),
    "NC-S2F": ({"smiles": "smiles"}, {"formula": "formula"}),
    "NC-S2I": ({"smiles": "smiles"}, {"iupac": "iupac"}),
    "PP-ESOL": ({"smiles": "smiles"}, {"value": "number"}),
    "PP-Lipo": ({"smiles": "smiles"}, {"value": "number"}),
    "PP-BBBP": ({"smiles": "smiles"}, {"label": "boolean"}),
    "PP-ClinTox": ({"smiles": "smiles"}, {"label": "boolean"}),
    "PP-HIV": ({"smiles": "smiles"}, {"label": "boolean"}),
    "PP-SIDER": ({"smiles": "smiles"}, {"label": "boolean"}),
    "MC": ({"smiles": "smiles"}, {"description": "text"}),
    "MG": ({"description": "text"}, {"smiles": "smiles"}),
    "FS": ({"reactants": "smiles"}, {"products": "smiles"}),
    "RS": ({"product": "smiles"}, {"reactants": "smiles"}),
}
TASKS = tuple(TASK_SCHEMA)

# Tasks whose multi-fragment SMILES are rendered with ';' between fragments.
SEMICOLON_TASKS = frozenset(NC_TASKS + PP_TASKS + ("MC", "MG"))


class RecordError(ValueError):
    pass


@dataclass(frozen=True)
class Payload:
    kind: str
    value: Union[str, float, bool]

    def __post_init__(self):
        if self.kind not in PAYLOAD_KINDS:
            raise RecordError(f"unknown payload kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "Payload":
        kind, value = d["kind"], d["value"]
        if kind == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise RecordError(f"number payload holds {value!r}")
            value = float(value)
        elif kind == "boolean":
            if not isinstance(value, bool):
                raise RecordError(f"boolean payload holds {value!r}")
        elif not isinstance(value, str):
            raise RecordError(f"{kind} payload holds {value!r}")
        return cls(kind, value)

    def key(self) -> str:
        """Serialized value used for dedup and linkage."""
        if self.kind == "number":
            return repr(float(self.value))
        if self.kind == "boolean":
            return "Yes" if self.value else "No"
        return str(self.value)


@dataclass
class CorpusRecord:
    """One task-typed sample before rendering.

    ``meta`` holds optional string annotations that are carried through the
    pipeline but never rendered (FS records store the relabeled reactant set
    under ``reactants`` so that they link to their RS counterparts).
    """

    id: str
    task: str
    inputs: dict[str, Payload]
    outputs: dict[str, Payload]
    selfies: Optional[str] = None
    source: str = ""
    split: Optional[str] = None
    meta: dict[str, str] = field(default_factory=dict)

    def check(self) -> None:
        if self.task not in TASK_SCHEMA:
            raise RecordError(f"unknown task {self.task!r}")
        want_in, want_out = TASK_SCHEMA[self.task]
        for side, want, have in (("input", want_in, self.inputs), ("output", want_out, self.outputs)):
            for name, kind in want.items():
                if name not in have:
                    raise RecordError(f"{self.task} record {self.id} lacks {side} field {name!r}")
                if have[name].kind != kind:
                    raise RecordError(
                        f"{self.task} record {self.id}: {side} {name!r} must be {kind}, got {have[name].kind}"
                    )
        if self.split is not None and self.split not in SPLITS:
            raise RecordError(f"unknown split {self.split!r}")

    @property
    def answer_field(self) -> str:
        return next(iter(TASK_SCHEMA[self.task][1]))

    @property
    def answer(self) -> Payload:
        return self.outputs[self.answer_field]

    def input_key(self) -> str:
        return "|".join(f"{k}={self.inputs[k].key()}" for k in sorted(self.inputs))

    def output_key(self) -> str:
        return "|".join(f"{k}={self.outputs[k].key()}" for k in sorted(self.outputs))

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "id": self.id,
            "task": self.task,
            "inputs": {k: v.to_dict() for k, v in self.inputs.items()},
            "outputs": {k: v.to_dict() for k, v in self.outputs.items()},
            "selfies": self.selfies,
            "source": self.source,
            "split": self.split,
        }
        if self.meta:
            d["meta"] = dict(self.meta)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusRecord":
        rec = cls(
            id=str(d["id"]),
            task=d["task"],
            inputs={k: Payload.from_dict(v) for k, v in d["inputs"].items()},
            outputs={k: Payload.from_dict(v) for k, v in d["outputs"].items()},
            selfies=d.get("selfies"),
            source=d.get("source", ""),
            split=d.get("split"),
            meta=dict(d.get("meta") or {}),
        )
        rec.check()
        return rec


@dataclass
class InstructionSample:
    record_id: str
    query: str
    response: str
    template_id: str
    task: str = ""
    split: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "task": self.task,
            "split": self.split,
            "template_id": self.template_id,
            "query": self.query,
            "response": self.response,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstructionSample":
        return cls(
            record_id=str(d["record_id"]),
            query=d["query"],
            response=d["response"],
            template_id=str(d["template_id"]),
            task=d.get("task", ""),
            split=d.get("split"),
        )


def dumps(item) -> str:
    data = item.to_dict() if hasattr(item, "to_dict") else item
    return json.dumps(data, ensure_ascii=False, allow_nan=False)


def export_jsonl(items: Iterable, path: Union[str, Path]) -> int:
    """Write one JSON object per line; returns the number of lines written."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item in items:
            fh.write(dumps(item))
            fh.write("\n")
            n += 1
    return n


class JsonlError(ValueError):
    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.line = line


def import_jsonl(path: Union[str, Path], kind=CorpusRecord) -> list:
    """Read a JSONL file. ``kind`` is a class with ``from_dict`` or None for raw dicts."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(path, lineno, f"malformed JSON ({exc.msg})") from None
            if not isinstance(data, dict):
                raise JsonlError(path, lineno, "expected a JSON object")
            if kind is None:
                out.append(data)
                continue
            try:
                out.append(kind.from_dict(data))
            except (KeyError, TypeError, ValueError) as exc:
                raise JsonlError(path, lineno, f"bad record: {exc}") from None
    return out


def format_number(x: float) -> str:
    """Shortest decimal string that reads back as the same float."""
    if not math.isfinite(x):
        raise RecordError(f"non-finite number {x!r}")
    return repr(float(x))
