"""Reaction SMILES parsing, atom-map relabeling and forward/retro cleaning."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from chemtune.canon import canonical_smiles, strip_maps
from chemtune.chem.errors import ChemError
from chemtune.chem.molecule import Molecule
from chemtune.chem.smiles import parse_smiles

MIN_HEAVY_ATOMS = 5


class ReactionError(ValueError):
    """Reaction text that cannot be parsed or contains an invalid component."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class Reaction:
    reactants: list[Molecule] = field(default_factory=list)
    reagents: list[Molecule] = field(default_factory=list)
    products: list[Molecule] = field(default_factory=list)


@dataclass(frozen=True)
class FsRecord:
    input_chemicals: tuple[str, ...]
    output_chemicals: tuple[str, ...]


@dataclass(frozen=True)
class RsRecord:
    input_product: str
    output_reactants: tuple[str, ...]


_CX_GROUPS = re.compile(r"f:([\d.,]+)")


def _fragment_groups(extension: str) -> list[list[int]]:
    m = _CX_GROUPS.search(extension)
    if not m:
        return []
    return [[int(x) for x in g.split(".") if x] for g in m.group(1).split(",") if g]


def parse_reaction(text: str) -> Reaction:
    """Parse ``reactants>reagents>products``.

    Components are split on ``.``. A trailing CXSMILES block such as
    ``|f:0.1|`` is honoured for fragment grouping (salts kept as one
    molecule); other extension fields are ignored.
    """
    body, _, ext = text.strip().partition(" ")
    parts = body.split(">")
    if len(parts) != 3:
        raise ReactionError(f"expected two '>' separators, found {len(parts) - 1}")
    sides = [[c for c in p.split(".")] if p else [] for p in parts]
    for side in sides:
        if any(not c for c in side):
            raise ReactionError("empty component in reaction")
    flat = [c for side in sides for c in side]
    owner = [k for k, side in enumerate(sides) for _ in side]
    merged: dict[int, int] = {}
    for group in _fragment_groups(ext):
        if any(i >= len(flat) for i in group) or len({owner[i] for i in group}) != 1:
            raise ReactionError("fragment grouping refers to components across sides")
        for i in group[1:]:
            merged[i] = group[0]
    texts: dict[int, list[str]] = {}
    for i, c in enumerate(flat):
        texts.setdefault(merged.get(i, i), []).append(c)
    out: list[list[Molecule]] = [[], [], []]
    for head in sorted(texts):
        smi = ".".join(texts[head])
        try:
            mol = parse_smiles(smi)
        except ChemError as exc:
            raise ReactionError(f"component {smi!r}: {exc}") from exc
        maps = [a.atom_map for a in mol.atoms if a.atom_map is not None]
        if len(maps) != len(set(maps)):
            raise ReactionError(f"component {smi!r} repeats an atom-map number")
        out[owner[head]].append(mol)
    rxn = Reaction(*out)
    if not rxn.products:
        raise ReactionError("reaction has no products")
    if not rxn.reactants and not rxn.reagents:
        raise ReactionError("reaction has no reactants or reagents")
    return rxn


def relabel_by_atom_maps(rxn: Reaction) -> Reaction:
    """Move mapped input molecules to reactants or reagents by product map overlap.

    A mapped input molecule sharing at least one map number with the products
    is a reactant; one whose maps are all absent from the products is a
    reagent. Unmapped molecules keep their label.
    """
    product_maps: set[int] = set()
    for mol in rxn.products:
        product_maps |= mol.atom_maps()
    reactants, reagents = [], []
    for label, mols in (("reactant", rxn.reactants), ("reagent", rxn.reagents)):
        for mol in mols:
            maps = mol.atom_maps()
            if maps:
                label_now = "reactant" if maps & product_maps else "reagent"
            else:
                label_now = label
            (reactants if label_now == "reactant" else reagents).append(mol)
    return Reaction(reactants, reagents, list(rxn.products))


def strip_atom_maps(mol: Molecule) -> Molecule:
    return strip_maps(mol)


def _canonical_unique(mols: list[Molecule]) -> list[str]:
    out: list[str] = []
    for mol in mols:
        try:
            smi = canonical_smiles(mol)
        except ChemError as exc:
            raise ReactionError(f"invalid component: {exc}") from exc
        if smi not in out:
            out.append(smi)
    return out


_HEAVY_CACHE: dict[str, int] = {}


def heavy_atoms(smiles: str) -> int:
    n = _HEAVY_CACHE.get(smiles)
    if n is None:
        n = parse_smiles(smiles).heavy_atom_count()
        if len(_HEAVY_CACHE) < 100_000:
            _HEAVY_CACHE[smiles] = n
    return n


def clean_forward(rxn: Reaction, min_heavy_atoms: int = MIN_HEAVY_ATOMS) -> Optional[FsRecord]:
    """Forward-synthesis record, or None when no product survives cleaning.

    Raises :class:`ReactionError` if any component fails validation.
    """
    inputs = _canonical_unique(rxn.reactants + rxn.reagents)
    outputs = _canonical_unique(rxn.products)
    seen = set(inputs)
    outputs = [p for p in outputs if p not in seen and heavy_atoms(p) >= min_heavy_atoms]
    if not outputs or not inputs:
        return None
    return FsRecord(tuple(sorted(inputs)), tuple(sorted(outputs)))


def clean_retro(rxn: Reaction, min_heavy_atoms: int = MIN_HEAVY_ATOMS) -> list[RsRecord]:
    """One retrosynthesis record per qualifying product.

    Expects :func:`relabel_by_atom_maps` to have been applied; reagents
    never appear in the output.
    """
    reactants = _canonical_unique(rxn.reactants)
    products = _canonical_unique(rxn.products)
    # Validate reagents too so that a broken component rejects the reaction.
    _canonical_unique(rxn.reagents)
    if not reactants:
        return []
    seen = set(reactants)
    out = tuple(sorted(reactants))
    return [
        RsRecord(p, out)
        for p in sorted(products)
        if p not in seen and heavy_atoms(p) >= min_heavy_atoms
    ]
