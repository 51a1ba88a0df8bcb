"""Canonical atom ranking and canonical SMILES.

Ranking is refine-and-branch canonical labelling: atoms start from a
structural invariant, classes are refined by the sorted multiset of
``(neighbour class, bond order)`` until stable, and remaining ties are broken
by individualising each candidate of the first tied class and keeping the
labelling whose relabelled graph (its certificate) is lexicographically
smallest. Branches related by an automorphism already discovered are pruned.

Chirality and bond direction do not participate in ranking. They only
break ties between labellings with equal certificates, so that symmetric
atoms carrying marks are written the same way whatever the input order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from chemtune._accel import FAST
from chemtune.chem.molecule import H_SLOT, Molecule
from chemtune.chem.smiles import (
    CHIRAL_FLIP,
    FLIP_DIRECTION,
    parse_smiles,
    permutation_parity,
    write_smiles,
)
from chemtune.chem.valence import check_valid


@dataclass(frozen=True)
class CanonicalRank:
    """``ranks[i]`` is the canonical rank of atom ``i``."""

    ranks: tuple[int, ...]

    @property
    def order(self) -> list[int]:
        out = [0] * len(self.ranks)
        for i, r in enumerate(self.ranks):
            out[r] = i
        return out


def atom_invariants(mol: Molecule) -> list[tuple]:
    """Per-atom starting invariant used to seed refinement."""
    hs = mol.total_hs
    adj = mol.adjacency
    ring = mol.ring_atoms()
    return [
        (
            a.element.atomic_number,
            len(adj[i]),
            hs[i],
            a.charge,
            a.isotope or 0,
            ring[i],
            a.aromatic,
        )
        for i, a in enumerate(mol.atoms)
    ]


def _dense(keys: list) -> list[int]:
    table = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [table[k] for k in keys]


def _refine(ranks: list[int], nbrs: list[list[tuple[int, int]]], n_classes: int) -> tuple[list[int], int]:
    n = len(ranks)
    while n_classes < n:
        keys = []
        for i in range(n):
            nb = nbrs[i]
            if len(nb) == 1:
                j, o = nb[0]
                keys.append((ranks[i], ((ranks[j], o),)))
            else:
                keys.append((ranks[i], tuple(sorted([(ranks[j], o) for j, o in nb]))))
        table = {k: r for r, k in enumerate(sorted(set(keys)))}
        if len(table) == n_classes:
            break
        n_classes = len(table)
        ranks = [table[k] for k in keys]
    return ranks, n_classes


class _Search:
    """Refine-and-branch search for the smallest certificate.

    ``tiebreak`` (optional) maps a leaf's ranks to a secondary key compared
    among leaves with equal certificates; such leaves differ by a graph
    automorphism that may still change stereo marks. Only automorphisms that
    also preserve the secondary key are used for pruning.
    """

    def __init__(self, codes: list, nbrs: list[list[tuple[int, int]]], tiebreak=None):
        self.codes = codes
        self.nbrs = nbrs
        self.n = len(codes)
        self.tiebreak = tiebreak
        self.best = None
        self.first = None
        self.automorphisms: list[list[int]] = []

    @property
    def best_ranks(self):
        return self.best[2]

    def certificate(self, ranks: list[int]) -> tuple:
        codes = self.codes
        order = [0] * self.n
        for i, r in enumerate(ranks):
            order[r] = i
        edges = []
        for i in range(self.n):
            ri = ranks[i]
            for j, o in self.nbrs[i]:
                rj = ranks[j]
                if ri < rj:
                    edges.append((ri, rj, o))
        edges.sort()
        return (tuple(codes[i] for i in order), tuple(edges))

    def leaf(self, ranks: list[int]) -> None:
        cert = self.certificate(ranks)
        key = None
        if self.tiebreak is not None and (self.best is None or cert <= self.best[0] or cert == self.first[0]):
            key = self.tiebreak(ranks)
        entry = (cert, key, ranks)
        if self.first is None:
            self.first = self.best = entry
            return
        for ref_cert, ref_key, ref_ranks in (self.first, self.best):
            if cert == ref_cert and key == ref_key:
                # Map atom with rank r in this leaf onto the atom with rank r in the reference.
                inv = [0] * self.n
                for i, r in enumerate(ref_ranks):
                    inv[r] = i
                self.automorphisms.append([inv[r] for r in ranks])
                return
        best_cert, best_key, _ = self.best
        if cert < best_cert or (cert == best_cert and key < best_key):
            self.best = entry

    def run(self, ranks: list[int], n_classes: int) -> None:
        # Iterative depth-first search over individualisation choices.
        # Each frame: (ranks, fixed prefix, candidates, next index, explored).
        stack = [self._frame(ranks, n_classes, ())]
        while stack:
            frame = stack[-1]
            if frame is None:
                stack.pop()
                continue
            ranks, prefix, cell, pos, explored = frame
            if pos >= len(cell):
                stack.pop()
                continue
            v = cell[pos]
            frame[3] = pos + 1
            if explored and self._equivalent(v, explored, prefix):
                continue
            explored.append(v)
            child = [2 * r for r in ranks]
            child[v] -= 1
            child, k = _refine(_dense(child), self.nbrs, len(set(child)))
            sub = self._frame(child, k, prefix + (v,))
            if sub is not None:
                stack.append(sub)

    def _frame(self, ranks: list[int], n_classes: int, prefix: tuple):
        if n_classes == self.n:
            self.leaf(ranks)
            return None
        counts = [0] * self.n
        for r in ranks:
            counts[r] += 1
        target = min(r for r in range(self.n) if counts[r] > 1)
        cell = [i for i, r in enumerate(ranks) if r == target]
        return [ranks, prefix, cell, 0, []]

    def _equivalent(self, v: int, explored: list[int], prefix: tuple) -> bool:
        parent = {}

        def find(x):
            while parent.get(x, x) != x:
                x = parent[x]
            return x

        for gamma in self.automorphisms:
            if any(gamma[p] != p for p in prefix):
                continue
            for x, y in enumerate(gamma):
                if x != y:
                    rx, ry = find(x), find(y)
                    if rx != ry:
                        parent[max(rx, ry)] = min(rx, ry)
        rv = find(v)
        return any(find(u) == rv for u in explored)


def _stereo_tiebreak(mol: Molecule, atoms: list[int]):
    """Leaf key that picks one labelling among symmetry-equivalent ones.

    Ranking ignores stereo marks, so labellings related by a graph
    automorphism can still write different ``@``/``@@`` or ``/``/``\\``
    marks. The key restates every mark against rank order (neighbours by
    rank, an implicit hydrogen first; bonds read from lower to higher rank);
    equal keys give identical strings and the smallest key makes the choice
    independent of input atom order.
    """
    chiral = [a for a in atoms if mol.atoms[a].chirality]
    members = set(atoms)
    directed = [k for k, b in enumerate(mol.bonds) if b.direction and b.a in members]
    if not chiral and not directed:
        return None
    local = {a: k for k, a in enumerate(atoms)}
    adj = mol.adjacency
    bonds = mol.bonds

    def key(ranks: list[int]) -> tuple:
        entries = []
        for a in chiral:
            chir = mol.atoms[a].chirality
            refs = mol.stereo.get(a)
            if chir in CHIRAL_FLIP and refs is not None:
                order = sorted((j for j, _ in adj[a]), key=lambda j: ranks[local[j]])
                if H_SLOT in refs:
                    order.insert(0, H_SLOT)
                if sorted(order) == sorted(refs) and permutation_parity(refs, order):
                    chir = CHIRAL_FLIP[chir]
            entries.append((0, ranks[local[a]], chir))
        for k in directed:
            b = bonds[k]
            ra, rb = ranks[local[b.a]], ranks[local[b.b]]
            if ra < rb:
                entries.append((1, ra, rb, b.direction))
            else:
                entries.append((1, rb, ra, FLIP_DIRECTION[b.direction]))
        entries.sort()
        return tuple(entries)

    return key


def _label_fragment(mol: Molecule, atoms: list[int], invariants: list[tuple]) -> list[int]:
    """Canonical order (list of molecule atom indices) for one connected fragment."""
    local = {a: k for k, a in enumerate(atoms)}
    adj = mol.adjacency
    bonds = mol.bonds
    nbrs = [[(local[j], bonds[k].order) for j, k in adj[a]] for a in atoms]
    inv = [invariants[a] for a in atoms]
    ranks = _dense(inv)
    ranks, n_classes = _refine(ranks, nbrs, len(set(ranks)))
    if n_classes < len(atoms):
        search = _Search(_dense(inv), nbrs, _stereo_tiebreak(mol, atoms))
        search.run(ranks, n_classes)
        ranks = search.best_ranks
    order = [0] * len(atoms)
    for k, r in enumerate(ranks):
        order[r] = atoms[k]
    return order


def strip_maps(mol: Molecule) -> Molecule:
    if not any(a.atom_map is not None for a in mol.atoms):
        return mol
    out = mol.replace(atoms=[a._replace(atom_map=None) for a in mol.atoms])
    out._hs = mol._hs
    out._ring_bonds = mol._ring_bonds
    return out


def _canonical_fragments(mol: Molecule) -> list[tuple[str, list[int]]]:
    invariants = atom_invariants(mol)
    frags = []
    for atoms in mol.fragments:
        order = _label_fragment(mol, atoms, invariants)
        if len(mol.fragments) == 1:
            text = write_smiles(mol, order)
        else:
            sub = mol.subgraph(atoms)
            index = {a: k for k, a in enumerate(atoms)}
            text = write_smiles(sub, [index[a] for a in order])
        frags.append((text, order))
    frags.sort(key=lambda f: f[0])
    return frags


def _as_molecule(text_or_mol: Union[str, Molecule]) -> Molecule:
    mol = parse_smiles(text_or_mol) if isinstance(text_or_mol, str) else text_or_mol
    check_valid(mol)
    return strip_maps(mol)


def canonical_ranks(text_or_mol: Union[str, Molecule]) -> CanonicalRank:
    """Canonical rank of every atom; fragments are ranked in canonical-string order.

    Raises :class:`~chemtune.chem.errors.ChemError` for invalid input.
    """
    mol = _as_molecule(text_or_mol)
    ranks = [0] * len(mol.atoms)
    r = 0
    for _, order in _canonical_fragments(mol):
        for a in order:
            ranks[a] = r
            r += 1
    return CanonicalRank(tuple(ranks))


def canonical_smiles(text_or_mol: Union[str, Molecule]) -> str:
    """Canonical SMILES with atom maps removed; fragments sorted and dot-joined."""
    if FAST is not None and isinstance(text_or_mol, str):
        out = FAST.canonical_smiles(text_or_mol)
        if out is not None:
            return out
    mol = _as_molecule(text_or_mol)
    if not mol.atoms:
        return ""
    return ".".join(text for text, _ in _canonical_fragments(mol))


def try_canonical(text: str):
    """Canonical SMILES of ``text`` or None if it does not validate."""
    from chemtune.chem.errors import ChemError

    try:
        return canonical_smiles(text)
    except ChemError:
        return None
