"""Instruction rendering: template choice, placeholder substitution and tagging."""

from __future__ import annotations

import json
import random
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from chemtune.corpus.records import (
    SEMICOLON_TASKS,
    CorpusRecord,
    InstructionSample,
    Payload,
    format_number,
)

TAGS = {
    "smiles": "SMILES",
    "formula": "MOLFORMULA",
    "iupac": "IUPAC",
    "number": "NUMBER",
    "boolean": "BOOLEAN",
}


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class Template:
    id: str
    task: str
    query: str
    response: str

    def fields(self) -> tuple[set[str], set[str]]:
        return _placeholders(self.query), _placeholders(self.response)


def _placeholders(text: str) -> set[str]:
    names = set()
    try:
        for _, name, spec, conv in string.Formatter().parse(text):
            if name is None:
                continue
            if not name.isidentifier() or spec or conv:
                raise TemplateError(f"unsupported placeholder {{{name}}} in template")
            names.add(name)
    except ValueError as exc:
        raise TemplateError(f"malformed template: {exc}") from None
    return names


class TemplateSet:
    """Templates grouped by task, in file order."""

    def __init__(self, templates: list[Template]):
        self.templates = list(templates)
        self.by_task: dict[str, list[Template]] = {}
        for t in self.templates:
            self.by_task.setdefault(t.task, []).append(t)

    @classmethod
    def from_list(cls, items: list[dict]) -> "TemplateSet":
        out = []
        counts: dict[str, int] = {}
        for item in items:
            try:
                task, query, response = item["task"], item["query"], item["response"]
            except (KeyError, TypeError):
                raise TemplateError("each template needs task, query and response") from None
            k = counts.get(task, 0)
            counts[task] = k + 1
            t = Template(str(item.get("id") or f"{task}-{k}"), task, query, response)
            t.fields()
            out.append(t)
        return cls(out)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TemplateSet":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, list):
            raise TemplateError(f"{path}: expected a JSON array of templates")
        return cls.from_list(data)

    @classmethod
    def default(cls) -> "TemplateSet":
        text = resources.files("chemtune.data").joinpath("templates.json").read_text(encoding="utf-8")
        return cls.from_list(json.loads(text))


def payload_text(payload: Payload, task: str) -> str:
    """Surface form of a payload inside rendered text (without tags)."""
    if payload.kind == "number":
        return format_number(payload.value)
    if payload.kind == "boolean":
        return "Yes" if payload.value else "No"
    value = str(payload.value)
    if payload.kind == "smiles" and task in SEMICOLON_TASKS:
        value = value.replace(".", ";")
    return value


def wrap(payload: Payload, task: str) -> str:
    text = payload_text(payload, task)
    tag = TAGS.get(payload.kind)
    return f"<{tag}>{text}</{tag}>" if tag else text


def _usable(t: Template, record: CorpusRecord) -> bool:
    q, r = t.fields()
    available = set(record.inputs) | set(record.outputs)
    return q <= available and r <= available and record.answer_field in r


def render(record: CorpusRecord, templates: TemplateSet, seed: int = 0) -> InstructionSample:
    """Fill a seeded choice among the task's templates with tagged payloads.

    The choice depends only on ``seed`` and the record id. Templates whose
    placeholders are not all record fields, or whose response omits the
    answer field, are not eligible.
    """
    options = templates.by_task.get(record.task)
    if not options:
        raise TemplateError(f"no template for task {record.task}")
    usable = [t for t in options if _usable(t, record)]
    if not usable:
        fields = sorted(set(record.inputs) | set(record.outputs))
        raise TemplateError(
            f"no {record.task} template matches record {record.id} fields {fields}"
        )
    rng = random.Random(f"{seed}:{record.id}")
    t = usable[rng.randrange(len(usable))]
    values = {k: wrap(p, record.task) for k, p in {**record.inputs, **record.outputs}.items()}
    return InstructionSample(
        record_id=record.id,
        query=t.query.format(**values),
        response=t.response.format(**values),
        template_id=t.id,
        task=record.task,
        split=record.split,
    )


def expected_answer(record: CorpusRecord) -> str:
    """String that answer extraction should recover from a rendered response."""
    return payload_text(record.answer, record.task)


def render_all(
    records: list[CorpusRecord], templates: TemplateSet, seed: int = 0, split: Optional[str] = None
) -> list[InstructionSample]:
    return [render(r, templates, seed) for r in records if split is None or r.split == split]
