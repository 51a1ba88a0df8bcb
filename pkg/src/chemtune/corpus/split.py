"""Deduplication, cross-task linkage and leakage-free split assignment."""

from __future__ import annotations

import dataclasses
import logging
import random
from collections import Counter, defaultdict
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence, Union

from chemtune.canon import canonical_smiles
from chemtune.corpus.records import NC_TASKS, PP_TASKS, SPLITS, CorpusRecord
from chemtune.descriptors import murcko_scaffold

log = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)
Fractions = Union[Sequence[float], Mapping[str, Sequence[float]]]


class SplitError(ValueError):
    pass


def dedup(records: Iterable[CorpusRecord]) -> list[CorpusRecord]:
    """Drop records whose (task, inputs, outputs) repeat an earlier record."""
    seen = set()
    out = []
    for rec in records:
        key = (rec.task, rec.input_key(), rec.output_key())
        if key not in seen:
            seen.add(key)
            out.append(rec)
    return out


class LinkageKey(NamedTuple):
    kind: str
    value: str


def linkage_keys(record: CorpusRecord) -> set[LinkageKey]:
    """Keys shared by records that must not be separated across splits.

    FS and RS records emit one ``reaction`` key per product
    (``sorted reactants > product``); NC, MC and MG records emit ``molecule``
    keys for their SMILES and IUPAC payloads; every record emits an
    ``identical_input`` key.
    """
    keys = {LinkageKey("identical_input", f"{record.task}|{record.input_key()}")}
    task = record.task
    if task == "FS":
        reactants = record.meta.get("reactants") or record.inputs["reactants"].value
        for p in str(record.outputs["products"].value).split("."):
            keys.add(LinkageKey("reaction", f"{reactants}>{p}"))
    elif task == "RS":
        keys.add(
            LinkageKey(
                "reaction",
                f"{record.outputs['reactants'].value}>{record.inputs['product'].value}",
            )
        )
    elif task in NC_TASKS or task in ("MC", "MG"):
        for payload in list(record.inputs.values()) + list(record.outputs.values()):
            if payload.kind == "smiles":
                keys.add(LinkageKey("molecule", f"smiles:{payload.value}"))
            elif payload.kind == "iupac":
                keys.add(LinkageKey("molecule", f"iupac:{payload.value}"))
    return keys


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        parent = self.parent
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = defaultdict(list)
        for i in range(len(self.parent)):
            out[self.find(i)].append(i)
        return list(out.values())


def linkage_groups(records: Sequence[CorpusRecord]) -> list[list[int]]:
    """Connected components of records sharing any linkage key."""
    uf = UnionFind(len(records))
    owner: dict[LinkageKey, int] = {}
    for i, rec in enumerate(records):
        for key in linkage_keys(rec):
            j = owner.setdefault(key, i)
            if j != i:
                uf.union(i, j)
    return uf.groups()


def fractions_for(fractions: Optional[Fractions], task: str) -> tuple[float, float, float]:
    if fractions is None:
        f = DEFAULT_FRACTIONS
    elif isinstance(fractions, Mapping):
        f = fractions.get(task, fractions.get("default", DEFAULT_FRACTIONS))
    else:
        f = fractions
    f = tuple(float(x) for x in f)
    if len(f) != 3 or any(x < 0 for x in f) or abs(sum(f) - 1.0) > 1e-9:
        raise SplitError(f"fractions for {task} must be three non-negative numbers summing to 1, got {f}")
    return f


def _scaffold_key(smiles: str, cache: dict) -> str:
    key = cache.get(smiles)
    if key is None:
        scaffold = murcko_scaffold(smiles)
        key = canonical_smiles(scaffold) if scaffold.atoms else ""
        cache[smiles] = key
    return key


def scaffold_split(
    groups: Mapping[str, Sequence[int]], fractions: Sequence[float]
) -> dict[int, str]:
    """Deterministic greedy fill of scaffold groups.

    Groups are visited largest first (ties by scaffold string); each goes to
    train unless that would exceed the train share, then to valid unless the
    train+valid share would be exceeded, else to test.
    """
    n = sum(len(g) for g in groups.values())
    f_train, f_valid, _ = fractions
    train_cut = f_train * n
    valid_cut = (f_train + f_valid) * n
    eps = 1e-9
    ordered = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    n_train = n_valid = 0
    out = {}
    for _, members in ordered:
        size = len(members)
        if n_train + size > train_cut + eps:
            if n_train + n_valid + size > valid_cut + eps:
                split = "test"
            else:
                split = "valid"
                n_valid += size
        else:
            split = "train"
            n_train += size
        for i in members:
            out[i] = split
    return out


def assign_splits(
    records: Sequence[CorpusRecord],
    fractions: Optional[Fractions] = None,
    seed: int = 0,
) -> list[CorpusRecord]:
    """Return copies of ``records`` with ``split`` set.

    Non-PP records are grouped by shared linkage keys and whole groups are
    dealt, in seeded random order, to test then valid while they fit the
    per-task targets; the rest go to train. PP records are scaffold-split
    per dataset.
    """
    records = list(records)
    splits: list[Optional[str]] = [None] * len(records)

    pp_by_task: dict[str, list[int]] = defaultdict(list)
    other: list[int] = []
    for i, rec in enumerate(records):
        (pp_by_task[rec.task] if rec.task in PP_TASKS else other).append(i)

    cache: dict[str, str] = {}
    for task in sorted(pp_by_task):
        groups: dict[str, list[int]] = defaultdict(list)
        for i in pp_by_task[task]:
            groups[_scaffold_key(records[i].inputs["smiles"].value, cache)].append(i)
        for i, s in scaffold_split(groups, fractions_for(fractions, task)).items():
            splits[i] = s

    sub = [records[i] for i in other]
    groups_local = linkage_groups(sub)
    task_counts = Counter(r.task for r in sub)
    targets: dict[str, dict[str, int]] = {s: {} for s in SPLITS}
    for task, n in task_counts.items():
        f = fractions_for(fractions, task)
        targets["test"][task] = round(n * f[2])
        targets["valid"][task] = round(n * f[1])
        targets["train"][task] = n - targets["test"][task] - targets["valid"][task]
    filled = {s: Counter() for s in SPLITS}
    # Sort before shuffling so the result does not depend on input order.
    ordered = sorted(groups_local, key=lambda g: min(sub[i].id for i in g))
    random.Random(seed).shuffle(ordered)
    for group in ordered:
        counts = Counter(sub[i].task for i in group)
        choice = "train"
        for s in ("test", "valid"):
            if all(filled[s][t] + c <= targets[s][t] for t, c in counts.items()):
                choice = s
                break
        if choice == "train" and any(c > targets["train"][t] for t, c in counts.items()):
            log.warning("linkage group of %d records exceeds the train share; kept in train", len(group))
        filled[choice].update(counts)
        for i in group:
            splits[other[i]] = choice

    return [dataclasses.replace(rec, split=s) for rec, s in zip(records, splits)]


def leakage_audit(records: Sequence[CorpusRecord]) -> dict:
    """Linkage keys that appear in the test split and in another split."""
    where: dict[LinkageKey, set] = defaultdict(set)
    for rec in records:
        for key in linkage_keys(rec):
            where[key].add(rec.split)
    violations = sorted(
        (k for k, s in where.items() if "test" in s and len(s) > 1),
        key=lambda k: (k.kind, k.value),
    )
    per_split: dict[str, dict[str, int]] = {}
    for rec in records:
        per_split.setdefault(rec.task, Counter())[rec.split or "unassigned"] += 1
    return {
        "records": len(records),
        "linkage_keys": len(where),
        "keys_by_kind": dict(sorted(Counter(k.kind for k in where).items())),
        "cross_split_keys": sum(1 for s in where.values() if len(s) > 1),
        "violations": [{"kind": k.kind, "value": k.value, "splits": sorted(map(str, where[k]))} for k in violations],
        "split_counts": {t: dict(sorted(c.items())) for t, c in sorted(per_split.items())},
    }
