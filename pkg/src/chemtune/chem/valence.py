"""Hydrogen inference, kekulization and chemical validity checking."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from chemtune.chem.elements import allowed_valences
from chemtune.chem.errors import ChemError, KekulizationError
from chemtune.chem.molecule import AROMATIC, DOUBLE, SINGLE, Molecule

# Backtracking steps per aromatic component before falling back to blossom matching.
_SEARCH_BUDGET = 20000


def _bond_sums(mol: Molecule) -> tuple[list[int], list[int]]:
    n = len(mol.atoms)
    total = [0] * n
    n_arom = [0] * n
    for b in mol.bonds:
        o = b.order
        if o == AROMATIC:
            total[b.a] += 1
            total[b.b] += 1
            n_arom[b.a] += 1
            n_arom[b.b] += 1
        else:
            total[b.a] += o
            total[b.b] += o
    return total, n_arom


def compute_hydrogens(mol: Molecule) -> tuple[int, ...]:
    """Hydrogen count of every atom.

    Bracket atoms carry their explicit count. Organic-subset atoms take the
    smallest default valence at or above their bond-order sum; an aromatic
    atom with spare valence reserves one unit for its ring double bond.
    """
    total, n_arom = _bond_sums(mol)
    hs = []
    for i, atom in enumerate(mol.atoms):
        if atom.explicit_h is not None:
            hs.append(atom.explicit_h)
            continue
        t = total[i]
        h = 0
        for v in atom.element.default_valences:
            if v >= t:
                h = v - t
                if atom.aromatic and h > 0 and n_arom[i]:
                    h -= 1
                break
        hs.append(h)
    return tuple(hs)


def implicit_hydrogens(mol: Molecule, atom_index: int) -> int:
    """Hydrogens on ``atom_index``: the bracket count, or the inferred count."""
    return mol.total_hs[atom_index]


def _needs_double(mol: Molecule) -> list[bool]:
    total, _ = _bond_sums(mol)
    hs = mol.total_hs
    needs = [False] * len(mol.atoms)
    for i, atom in enumerate(mol.atoms):
        if not atom.aromatic:
            continue
        base = total[i] + hs[i]
        valences, _ = allowed_valences(atom.element.symbol, atom.charge)
        for v in valences:
            if v >= base:
                needs[i] = v > base
                break
    return needs


def kekulize(mol: Molecule) -> Molecule:
    """Replace aromatic bonds by an explicit single/double assignment.

    Double bonds form a perfect matching over the aromatic atoms that need
    one; the matching is found by lowest-index-first backtracking. Raises
    :class:`KekulizationError` when no such matching exists.
    """
    if not any(a.aromatic for a in mol.atoms) and not any(
        b.order == AROMATIC for b in mol.bonds
    ):
        return mol
    needs = _needs_double(mol)
    n = len(mol.atoms)
    cand: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, b in enumerate(mol.bonds):
        if b.order == AROMATIC and needs[b.a] and needs[b.b]:
            cand[b.a].append((b.b, k))
            cand[b.b].append((b.a, k))
    for nbrs in cand:
        nbrs.sort()

    doubles: set[int] = set()
    seen = [False] * n
    for start in range(n):
        if not needs[start] or seen[start]:
            continue
        comp = []
        stack = [start]
        seen[start] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w, _ in cand[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comp.sort()
        if len(comp) % 2:
            bad = next((v for v in comp if not cand[v]), comp[-1])
            raise KekulizationError(
                f"aromatic system of {len(comp)} atoms has no Kekulé structure",
                atom_index=bad,
            )
        matched = _match_component(comp, cand)
        if matched is None:
            raise KekulizationError(
                "aromatic system has no Kekulé structure", atom_index=comp[0]
            )
        doubles.update(matched)

    bonds = []
    for k, b in enumerate(mol.bonds):
        if b.order == AROMATIC:
            b = b._replace(order=DOUBLE if k in doubles else SINGLE)
        bonds.append(b)
    atoms = [a._replace(aromatic=False) if a.aromatic else a for a in mol.atoms]
    out = Molecule(atoms, bonds, mol.stereo)
    out._hs = mol.total_hs
    return out


def _match_component(comp: list[int], cand) -> Optional[list[int]]:
    mate: dict[int, int] = {}
    chosen: list[int] = []
    frames: list[list[int]] = []  # [position in comp, next candidate index]
    steps = 0
    p = 0
    while True:
        while p < len(comp) and comp[p] in mate:
            p += 1
        if p == len(comp):
            return chosen
        frames.append([p, 0])
        while True:
            steps += 1
            if steps > _SEARCH_BUDGET:
                return _blossom_match(comp, cand)
            frame = frames[-1]
            v = comp[frame[0]]
            options = cand[v]
            i = frame[1]
            while i < len(options) and options[i][0] in mate:
                i += 1
            if i < len(options):
                w, k = options[i]
                frame[1] = i + 1
                mate[v] = w
                mate[w] = v
                chosen.append(k)
                p = frame[0]
                break
            frames.pop()
            if not frames:
                return None
            pv = comp[frames[-1][0]]
            del mate[mate.pop(pv)]
            chosen.pop()


def _blossom_match(comp: list[int], cand) -> Optional[list[int]]:
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(comp)
    for v in comp:
        for w, k in cand[v]:
            if v < w:
                g.add_edge(v, w, k=k)
    matching = nx.max_weight_matching(g, maxcardinality=True)
    if 2 * len(matching) != len(comp):
        return None
    return sorted(g.edges[v, w]["k"] for v, w in matching)


@dataclass(frozen=True)
class Failure:
    kind: str
    message: str
    atom_index: Optional[int] = None


@dataclass
class ValidityReport:
    """Outcome of :func:`validate`; ``valid`` holds iff ``failures`` is empty.

    ``flags`` lists non-fatal notes such as charged atoms missing from the
    charge-adjusted valence table.
    """

    valid: bool
    failures: list[Failure] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    molecule: Optional[Molecule] = field(default=None, repr=False, compare=False)


def valence_failures(mol: Molecule) -> tuple[list[Failure], list[str]]:
    """Atoms whose valence exceeds the maximum allowed for their element and charge.

    Aromatic atoms are skipped (``mol`` should be kekulized first).
    """
    total, _ = _bond_sums(mol)
    hs = mol.total_hs
    failures = []
    flags = []
    for i, atom in enumerate(mol.atoms):
        if atom.aromatic:
            continue
        sym = atom.element.symbol
        valences, listed = allowed_valences(sym, atom.charge)
        if not valences:
            continue
        if not listed:
            flags.append(f"atom {i}: no valence entry for {sym} with charge {atom.charge:+d}")
        used = total[i] + hs[i]
        if used > valences[-1]:
            failures.append(
                Failure(
                    "valence",
                    f"atom {i} ({sym}) has valence {used}, maximum is {valences[-1]}",
                    i,
                )
            )
    return failures, flags


def validate(text: Union[str, bytes]) -> ValidityReport:
    """Parse, kekulize and valence-check ``text``; never raises on bad input."""
    from chemtune.chem.smiles import parse_smiles

    if isinstance(text, bytes):
        text = text.decode("utf-8", "surrogateescape")
    try:
        mol = parse_smiles(text)
    except ChemError as exc:
        return ValidityReport(False, [Failure(exc.kind, exc.message, exc.atom_index)])
    failures: list[Failure] = []
    try:
        kek = kekulize(mol)
    except KekulizationError as exc:
        failures.append(Failure(exc.kind, exc.message, exc.atom_index))
        kek = mol
    val_fail, flags = valence_failures(kek)
    failures.extend(val_fail)
    return ValidityReport(not failures, failures, flags, mol)


def check_valid(mol: Molecule) -> Molecule:
    """Return the kekulized form of ``mol`` or raise the first validity failure."""
    kek = kekulize(mol)
    failures, _ = valence_failures(kek)
    if failures:
        f = failures[0]
        raise ChemError(f.message, atom_index=f.atom_index, kind="valence")
    return kek
