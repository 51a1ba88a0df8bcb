"""Exact-match, similarity, regression/classification and text metrics."""

from __future__ import annotations

import math
import re
from collections import Counter
from functools import lru_cache
from typing import Optional, Sequence

from chemtune.canon import canonical_smiles
from chemtune.chem.errors import ChemError
from chemtune.chem.smiles import parse_smiles
from chemtune.chem.valence import validate
from chemtune.descriptors import (
    FormulaError,
    morgan_fingerprint,
    parse_formula,
    path_fingerprint,
    tanimoto,
)


def _as_smiles(text: str) -> str:
    # Rendered answers use ';' between fragments for some tasks.
    return text.strip().replace(";", ".")


@lru_cache(maxsize=65536)
def canonical_or_none(text: str) -> Optional[str]:
    try:
        return canonical_smiles(_as_smiles(text))
    except ChemError:
        return None


def is_valid_smiles(text: str) -> bool:
    s = _as_smiles(text)
    return bool(s) and validate(s).valid


# ---------------------------------------------------------------------------
# exact match


def em_smiles(pred: Optional[str], refs: Sequence[str]) -> bool:
    """Same molecule as any reference after canonicalization."""
    if pred is None:
        return False
    p = canonical_or_none(pred)
    if p is None:
        return False
    return any(canonical_or_none(r) == p for r in refs)


def _formula_or_none(text: str):
    try:
        return parse_formula(text)
    except FormulaError:
        return None


def em_formula(pred: Optional[str], refs: Sequence[str]) -> bool:
    """Same element multiset as any reference (charge compared only if both give one)."""
    if pred is None:
        return False
    p = _formula_or_none(pred)
    if p is None:
        return False
    for r in refs:
        f = _formula_or_none(r)
        if f is not None and p.same_atoms(f):
            return True
    return False


def _name_parts(text: str) -> frozenset:
    return frozenset(p.strip().casefold() for p in text.split(";") if p.strip())


def em_iupac(pred: Optional[str], refs: Sequence[str]) -> bool:
    """Same set of ';'-separated name parts (trimmed, case-folded) as any reference."""
    if pred is None:
        return False
    p = _name_parts(pred)
    if not p:
        return False
    return any(_name_parts(r) == p for r in refs)


def _em_number(pred: Optional[str], refs: Sequence[str]) -> bool:
    try:
        x = float(pred)
    except (TypeError, ValueError):
        return False
    for r in refs:
        try:
            if float(r) == x:
                return True
        except ValueError:
            pass
    return False


def _em_exact(pred: Optional[str], refs: Sequence[str]) -> bool:
    if pred is None:
        return False
    p = pred.strip().casefold()
    return any(r.strip().casefold() == p for r in refs)


EM_BY_KIND = {
    "smiles": em_smiles,
    "formula": em_formula,
    "iupac": em_iupac,
    "number": _em_number,
    "boolean": _em_exact,
    "text": _em_exact,
}


# ---------------------------------------------------------------------------
# fingerprint similarity


def fts(pred: Optional[str], ref: str, kind: str = "morgan") -> float:
    """Tanimoto similarity of fingerprints; 0.0 if either side does not validate."""
    if kind not in ("morgan", "path"):
        raise ValueError(f"unknown fingerprint kind {kind!r}")
    if pred is None:
        return 0.0
    fp = morgan_fingerprint if kind == "morgan" else path_fingerprint
    try:
        a = fp(parse_smiles(_as_smiles(pred)))
        b = fp(parse_smiles(_as_smiles(ref)))
    except ChemError:
        return 0.0
    return tanimoto(a, b)


# ---------------------------------------------------------------------------
# regression / classification


def rmse(preds: Sequence[float], golds: Sequence[float]) -> float:
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(golds)} golds")
    if not preds:
        raise ValueError("rmse needs at least one value")
    return math.sqrt(sum((p - g) ** 2 for p, g in zip(preds, golds)) / len(preds))


def accuracy(preds: Sequence[Optional[bool]], golds: Sequence[bool]) -> float:
    """Fraction correct; a None prediction counts as wrong."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(golds)} golds")
    if not preds:
        raise ValueError("accuracy needs at least one value")
    return sum(1 for p, g in zip(preds, golds) if p is not None and p == g) / len(preds)


# ---------------------------------------------------------------------------
# text metrics

_TOKEN = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Case-folded word and punctuation tokens."""
    return _TOKEN.findall(text.casefold())


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _bleu_stats(cand: list[str], ref: list[str], max_n: int) -> tuple[list[int], list[int]]:
    matches, totals = [], []
    for n in range(1, max_n + 1):
        c = _ngrams(cand, n)
        r = _ngrams(ref, n)
        matches.append(sum((c & r).values()))
        totals.append(max(len(cand) - n + 1, 0))
    return matches, totals


def _bleu_from_stats(matches, totals, cand_len: int, ref_len: int) -> float:
    if cand_len == 0 or any(m == 0 for m in matches):
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / len(matches)
    bp = 1.0 if cand_len > ref_len else math.exp(1 - ref_len / cand_len)
    return bp * math.exp(log_p)


def bleu(pred: str, ref: str, max_n: int = 4) -> float:
    """Sentence BLEU with uniform weights, brevity penalty and no smoothing.

    Identical token sequences score 1.0 even when shorter than ``max_n``.
    """
    cand, reference = tokenize(pred), tokenize(ref)
    if cand == reference and cand:
        return 1.0
    matches, totals = _bleu_stats(cand, reference, max_n)
    return _bleu_from_stats(matches, totals, len(cand), len(reference))


def corpus_bleu(preds: Sequence[str], refs: Sequence[str], max_n: int = 4) -> float:
    """BLEU over pooled n-gram counts of all pairs."""
    if len(preds) != len(refs):
        raise ValueError("length mismatch")
    m_sum = [0] * max_n
    t_sum = [0] * max_n
    c_len = r_len = 0
    all_same = True
    for p, r in zip(preds, refs):
        cand, reference = tokenize(p), tokenize(r)
        all_same = all_same and cand == reference
        matches, totals = _bleu_stats(cand, reference, max_n)
        m_sum = [a + b for a, b in zip(m_sum, matches)]
        t_sum = [a + b for a, b in zip(t_sum, totals)]
        c_len += len(cand)
        r_len += len(reference)
    if all_same and c_len:
        return 1.0
    return _bleu_from_stats(m_sum, t_sum, c_len, r_len)


def _f1(overlap: int, n_pred: int, n_ref: int) -> float:
    if overlap == 0:
        return 0.0
    p = overlap / n_pred
    r = overlap / n_ref
    return 2 * p * r / (p + r)


def _lcs(a: list[str], b: list[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge(pred: str, ref: str, variant: str = "1") -> float:
    """ROUGE-1, ROUGE-2 or ROUGE-L F1 over case-folded tokens."""
    variant = str(variant).upper()
    cand, reference = tokenize(pred), tokenize(ref)
    if cand == reference and cand:
        return 1.0
    if variant == "L":
        return _f1(_lcs(cand, reference), len(cand), len(reference))
    if variant not in ("1", "2"):
        raise ValueError(f"unknown ROUGE variant {variant!r}")
    n = int(variant)
    c, r = _ngrams(cand, n), _ngrams(reference, n)
    return _f1(sum((c & r).values()), sum(c.values()), sum(r.values()))


def _align(cand: list[str], ref: list[str]) -> list[tuple[int, int]]:
    """Exact unigram alignment that prefers extending the current chunk."""
    positions: dict[str, list[int]] = {}
    for j, tok in enumerate(ref):
        positions.setdefault(tok, []).append(j)
    used = set()
    pairs = []
    last = -2
    for i, tok in enumerate(cand):
        free = [j for j in positions.get(tok, ()) if j not in used]
        if not free:
            continue
        j = last + 1 if (last + 1) in free else free[0]
        used.add(j)
        pairs.append((i, j))
        last = j
    return pairs


def meteor_lite(pred: str, ref: str) -> float:
    """METEOR with exact unigram matching only (no stemming or synonyms).

    Fmean weights recall 9:1 over precision. The fragmentation penalty is
    ``0.5 * ((chunks - 1) / matches) ** 3`` so a single contiguous chunk is
    not penalized and identical strings score exactly 1.0.
    """
    cand, reference = tokenize(pred), tokenize(ref)
    if not cand or not reference:
        return 0.0
    pairs = _align(cand, reference)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(reference)
    fmean = 10 * precision * recall / (recall + 9 * precision)
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    penalty = 0.5 * ((chunks - 1) / m) ** 3
    return fmean * (1 - penalty)
