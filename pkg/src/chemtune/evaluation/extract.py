"""Answer extraction from raw model output."""

from __future__ import annotations

import re
from typing import Optional

from chemtune.chem.errors import ChemError
from chemtune.chem.smiles import parse_smiles
from chemtune.descriptors import FormulaError, parse_formula

KINDS = ("smiles", "formula", "iupac", "number", "boolean", "text")
_TAG = {
    "smiles": "SMILES",
    "formula": "MOLFORMULA",
    "iupac": "IUPAC",
    "number": "NUMBER",
    "boolean": "BOOLEAN",
}
_TAG_RE = {
    kind: re.compile(rf"<{tag}>(.*?)</{tag}>", re.DOTALL) for kind, tag in _TAG.items()
}
_NUMBER = re.compile(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?")
_BOOLEAN = re.compile(r"\b(yes|no)\b", re.IGNORECASE)
_FORMULA = re.compile(r"(?<![A-Za-z0-9])(?:[A-Z][a-z]?\d*)+(?:[+-]\d*)?(?![A-Za-z0-9])")
_ELEMENT = re.compile(r"[A-Z][a-z]?")
_EDGE_PUNCT = "\"'`.,;:!?"


def _smiles_token(token: str) -> bool:
    # Letters-only tokens that are short or all lowercase are prose, not
    # molecules ("I", "no", "scoop" all parse).
    if token.isalpha() and (len(token) <= 2 or token.islower()):
        return False
    try:
        parse_smiles(token.replace(";", "."))
    except ChemError:
        return False
    return True


def _fallback_smiles(raw: str) -> Optional[str]:
    best = None
    for token in raw.split():
        token = token.strip(_EDGE_PUNCT)
        if token and (best is None or len(token) > len(best)) and _smiles_token(token):
            best = token
    return best


def _fallback_formula(raw: str) -> Optional[str]:
    for m in _FORMULA.finditer(raw):
        text = m.group(0)
        # A lone element symbol without a count ("I", "As") is a word, not a formula.
        if len(_ELEMENT.findall(text)) < 2 and not any(c.isdigit() for c in text):
            continue
        try:
            parse_formula(text)
        except FormulaError:
            continue
        return text
    return None


def extract_answer(raw: str, kind: str) -> Optional[str]:
    """Answer string inside the kind's tag pair, else a per-kind fallback.

    Fallbacks: smiles takes the longest whitespace-separated token that
    parses; formula the first formula-shaped word; number the first decimal
    literal; boolean the first yes/no (returned as "Yes"/"No"); iupac and
    text the whole stripped string. Returns None when nothing is found.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown answer kind {kind!r}")
    if raw is None:
        return None
    tag = _TAG_RE.get(kind)
    if tag is not None:
        m = tag.search(raw)
        if m:
            text = m.group(1).strip()
            if kind == "boolean":
                low = text.casefold()
                return {"yes": "Yes", "no": "No"}.get(low, text)
            return text
    if kind == "smiles":
        return _fallback_smiles(raw)
    if kind == "formula":
        return _fallback_formula(raw)
    if kind == "number":
        m = _NUMBER.search(raw)
        return m.group(0) if m else None
    if kind == "boolean":
        m = _BOOLEAN.search(raw)
        return m.group(1).capitalize() if m else None
    text = raw.strip()
    return text or None
