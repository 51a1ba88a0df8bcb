"""Immutable molecular graph: atoms, bonds and cached derived properties."""

from __future__ import annotations

from typing import Iterable, NamedTuple, Optional

from chemtune.chem.elements import Element

SINGLE = 1
DOUBLE = 2
TRIPLE = 3
AROMATIC = 4

BOND_SYMBOLS = {SINGLE: "-", DOUBLE: "=", TRIPLE: "#", AROMATIC: ":"}
BOND_NAMES = {SINGLE: "single", DOUBLE: "double", TRIPLE: "triple", AROMATIC: "aromatic"}

# Placeholder for the implicit hydrogen in a stereo neighbour ordering.
H_SLOT = -1


class Atom(NamedTuple):
    element: Element
    isotope: Optional[int] = None
    charge: int = 0
    explicit_h: Optional[int] = None
    aromatic: bool = False
    atom_map: Optional[int] = None
    chirality: Optional[str] = None

    @property
    def symbol(self) -> str:
        return self.element.symbol

    @property
    def bracketed(self) -> bool:
        return self.explicit_h is not None


class Bond(NamedTuple):
    """Bond between atoms ``a`` and ``b``.

    ``direction`` is a ``/`` or ``\\`` marker read in the ``a`` to ``b`` sense.
    """

    a: int
    b: int
    order: int = SINGLE
    direction: Optional[str] = None

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a


class Molecule:
    """Attributed simple graph parsed from SMILES.

    Instances are treated as immutable; derived data (adjacency, hydrogen
    counts, ring membership) is computed lazily and cached.

    ``stereo`` maps a chiral atom to the neighbour ordering its chirality tag
    refers to, with ``H_SLOT`` standing for its single implicit hydrogen.
    """

    __slots__ = ("atoms", "bonds", "stereo", "_adj", "_hs", "_ring_bonds", "_frags")

    def __init__(
        self,
        atoms: Iterable[Atom],
        bonds: Iterable[Bond],
        stereo: Optional[dict[int, tuple[int, ...]]] = None,
    ):
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        self.bonds: tuple[Bond, ...] = tuple(bonds)
        self.stereo = stereo or {}
        self._adj = None
        self._hs = None
        self._ring_bonds = None
        self._frags = None

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        return f"Molecule(atoms={len(self.atoms)}, bonds={len(self.bonds)})"

    @property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per atom, a list of ``(neighbour, bond index)`` pairs."""
        if self._adj is None:
            adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
            for k, bond in enumerate(self.bonds):
                adj[bond.a].append((bond.b, k))
                adj[bond.b].append((bond.a, k))
            self._adj = adj
        return self._adj

    def neighbors(self, i: int) -> list[int]:
        return [j for j, _ in self.adjacency[i]]

    def bond_between(self, i: int, j: int) -> Optional[Bond]:
        for n, k in self.adjacency[i]:
            if n == j:
                return self.bonds[k]
        return None

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @property
    def total_hs(self) -> tuple[int, ...]:
        """Hydrogen count per atom (explicit for bracket atoms, implicit otherwise)."""
        if self._hs is None:
            from chemtune.chem.valence import compute_hydrogens

            self._hs = compute_hydrogens(self)
        return self._hs

    @property
    def ring_bonds(self) -> frozenset[int]:
        """Indices of bonds lying on at least one cycle (non-bridges)."""
        if self._ring_bonds is None:
            self._ring_bonds = _cycle_bonds(self)
        return self._ring_bonds

    def ring_atoms(self) -> list[bool]:
        flags = [False] * len(self.atoms)
        bonds = self.bonds
        for k in self.ring_bonds:
            flags[bonds[k].a] = True
            flags[bonds[k].b] = True
        return flags

    @property
    def fragments(self) -> list[list[int]]:
        """Connected components, each a sorted atom-index list, ordered by first atom."""
        if self._frags is None:
            seen = [False] * len(self.atoms)
            adj = self.adjacency
            frags = []
            for start in range(len(self.atoms)):
                if seen[start]:
                    continue
                seen[start] = True
                comp = [start]
                stack = [start]
                while stack:
                    v = stack.pop()
                    for w, _ in adj[v]:
                        if not seen[w]:
                            seen[w] = True
                            comp.append(w)
                            stack.append(w)
                comp.sort()
                frags.append(comp)
            self._frags = frags
        return self._frags

    def subgraph(self, keep: Iterable[int]) -> "Molecule":
        """Induced subgraph on ``keep``, atoms renumbered in ascending order."""
        keep = sorted(set(keep))
        index = {old: new for new, old in enumerate(keep)}
        atoms = [self.atoms[i] for i in keep]
        bonds = [
            Bond(index[b.a], index[b.b], b.order, b.direction)
            for b in self.bonds
            if b.a in index and b.b in index
        ]
        stereo = {}
        for i, refs in self.stereo.items():
            if i in index and all(r == H_SLOT or r in index for r in refs):
                stereo[index[i]] = tuple(r if r == H_SLOT else index[r] for r in refs)
        return Molecule(atoms, bonds, stereo)

    def renumbered(self, order: list[int]) -> "Molecule":
        """Copy whose atom ``k`` is this molecule's atom ``order[k]``."""
        index = {old: new for new, old in enumerate(order)}
        atoms = [self.atoms[i] for i in order]
        bonds = [Bond(index[b.a], index[b.b], b.order, b.direction) for b in self.bonds]
        stereo = {
            index[i]: tuple(r if r == H_SLOT else index[r] for r in refs)
            for i, refs in self.stereo.items()
        }
        return Molecule(atoms, bonds, stereo)

    def replace(self, atoms=None, bonds=None, stereo=None) -> "Molecule":
        return Molecule(
            self.atoms if atoms is None else atoms,
            self.bonds if bonds is None else bonds,
            self.stereo if stereo is None else stereo,
        )

    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.element.atomic_number > 1)

    def has_atom_maps(self) -> bool:
        return any(a.atom_map is not None for a in self.atoms)

    def atom_maps(self) -> set[int]:
        return {a.atom_map for a in self.atoms if a.atom_map is not None}


def _cycle_bonds(mol: Molecule) -> frozenset[int]:
    # Iterative Tarjan bridge finding; every non-bridge lies on a cycle.
    n = len(mol.atoms)
    adj = mol.adjacency
    disc = [-1] * n
    low = [0] * n
    bridges = set()
    t = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = t
        t += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, via, it = stack[-1]
            advanced = False
            for w, k in it:
                if k == via:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = t
                    t += 1
                    stack.append((w, k, iter(adj[w])))
                    advanced = True
                    break
                if disc[w] < low[v]:
                    low[v] = disc[w]
            if not advanced:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
                    if low[v] > disc[u]:
                        bridges.add(via)
    return frozenset(k for k in range(len(mol.bonds)) if k not in bridges)
