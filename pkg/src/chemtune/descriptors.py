"""Molecular formula, fingerprints, Tanimoto similarity, scaffolds and statistics."""

from __future__ import annotations

import re
import struct
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

import xxhash

from chemtune._accel import FAST
from chemtune.canon import strip_maps
from chemtune.chem.elements import BY_SYMBOL
from chemtune.chem.molecule import AROMATIC, SINGLE, Atom, Molecule
from chemtune.chem.smiles import parse_smiles
from chemtune.chem.valence import check_valid

# Pinned seed for all fingerprint hashing (xxh64).
HASH_SEED = 0x5EED_C0DE
_MASK = (1 << 64) - 1


def _mol(x: Union[str, Molecule]) -> Molecule:
    mol = parse_smiles(x) if isinstance(x, str) else x
    check_valid(mol)
    return mol


# ---------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class Formula:
    """Element counts (hydrogens included) with an optional net charge.

    ``charge`` is None when the charge was not stated (a parsed neutral
    formula); such formulas compare on atoms only.
    """

    counts: tuple[tuple[str, int], ...]
    charge: Optional[int] = None

    @classmethod
    def from_counts(cls, counts: dict[str, int], charge: Optional[int] = None) -> "Formula":
        return cls(tuple(sorted((k, v) for k, v in counts.items() if v)), charge)

    def as_dict(self) -> dict[str, int]:
        return dict(self.counts)

    def hill(self) -> str:
        counts = self.as_dict()
        if "C" in counts:
            head = ["C"] + (["H"] if "H" in counts else [])
        else:
            head = []
        order = head + sorted(k for k in counts if k not in head)
        text = "".join(k if counts[k] == 1 else f"{k}{counts[k]}" for k in order)
        q = self.charge or 0
        if q:
            sign = "+" if q > 0 else "-"
            text += sign if abs(q) == 1 else f"{sign}{abs(q)}"
        return text

    def __str__(self) -> str:
        return self.hill()

    def same_atoms(self, other: "Formula") -> bool:
        """Equal element multisets; charges compared only when both are stated."""
        if self.counts != other.counts:
            return False
        if self.charge is not None and other.charge is not None:
            return self.charge == other.charge
        return True


class FormulaError(ValueError):
    pass


def molecular_formula(mol: Union[str, Molecule]) -> Formula:
    mol = _mol(mol)
    counts: Counter = Counter()
    hs = mol.total_hs
    charge = 0
    for i, atom in enumerate(mol.atoms):
        counts[atom.element.symbol] += 1
        counts["H"] += hs[i]
        charge += atom.charge
    return Formula.from_counts(counts, charge)


_FORMULA_TOKEN = re.compile(r"([A-Z][a-z]?)(\d*)")
_FORMULA = re.compile(r"((?:[A-Z][a-z]?\d*)+)([+-]\d*)?")


def parse_formula(text: str) -> Formula:
    """Parse ``C6H12O6``-style formulas, with an optional trailing charge."""
    m = _FORMULA.fullmatch(text.strip())
    if m is None:
        raise FormulaError(f"malformed formula {text!r}")
    body, charge = m.groups()
    counts: Counter = Counter()
    for sym, num in _FORMULA_TOKEN.findall(body):
        if sym not in BY_SYMBOL:
            raise FormulaError(f"unknown element {sym!r} in formula {text!r}")
        counts[sym] += int(num) if num else 1
    q = None
    if charge:
        q = int(charge[1:] or 1) * (1 if charge[0] == "+" else -1)
    return Formula.from_counts(counts, q)


# ---------------------------------------------------------------------------
# fingerprints


@dataclass(frozen=True)
class Fingerprint:
    """Folded bit vector stored as a Python int (bit ``k`` set means on)."""

    bits: int
    width: int
    kind: str
    params: tuple = field(default=())

    def popcount(self) -> int:
        return self.bits.bit_count()

    def on_bits(self) -> list[int]:
        out = []
        b = self.bits
        while b:
            low = b & -b
            out.append(low.bit_length() - 1)
            b ^= low
        return out


def hash_ints(values) -> int:
    """xxh64 of the little-endian uint64 encoding of ``values`` (pinned seed)."""
    data = struct.pack(f"<{len(values)}Q", *[v & _MASK for v in values])
    return xxhash.xxh64_intdigest(data, HASH_SEED)


def _check_width(width: int) -> None:
    if width <= 0 or width & (width - 1):
        raise ValueError(f"fingerprint width must be a power of two, got {width}")


def morgan_identifiers(mol: Molecule, radius: int = 2) -> list[int]:
    """Deduplicated 64-bit circular environment identifiers.

    Round 0 hashes each atom's invariant; round ``r`` hashes the round, the
    previous identifier and the sorted ``(bond order, neighbour identifier)``
    pairs. An identifier is dropped when its environment covers exactly the
    same atom set as one already kept (earlier round, or smaller identifier
    in the same round).
    """
    n = len(mol.atoms)
    adj = mol.adjacency
    bonds = mol.bonds
    hs = mol.total_hs
    ring = mol.ring_atoms()
    ids = []
    for i, atom in enumerate(mol.atoms):
        ids.append(
            hash_ints(
                (
                    atom.element.atomic_number,
                    len(adj[i]),
                    hs[i],
                    atom.charge,
                    atom.isotope or 0,
                    int(ring[i]),
                    int(atom.aromatic),
                )
            )
        )
    envs = [1 << i for i in range(n)]
    seen_envs = set(envs)
    kept = list(ids)
    for r in range(1, radius + 1):
        new_ids = []
        new_envs = []
        for i in range(n):
            flat = [r, ids[i]]
            for pair in sorted((bonds[k].order, ids[j]) for j, k in adj[i]):
                flat.extend(pair)
            env = envs[i]
            for j, _ in adj[i]:
                env |= envs[j]
            new_ids.append(hash_ints(flat))
            new_envs.append(env)
        for nid, env in sorted(zip(new_ids, new_envs)):
            if env not in seen_envs:
                seen_envs.add(env)
                kept.append(nid)
        ids = new_ids
        envs = new_envs
    return kept


def morgan_fingerprint(mol: Union[str, Molecule], radius: int = 2, width: int = 2048) -> Fingerprint:
    _check_width(width)
    if FAST is not None and isinstance(mol, str) and radius >= 0:
        raw = FAST.morgan_bits(mol, radius, width, HASH_SEED)
        if raw is not None:
            return Fingerprint(int.from_bytes(raw, "little"), width, "morgan", (radius,))
    mol = strip_maps(_mol(mol))
    bits = 0
    for ident in morgan_identifiers(mol, radius):
        bits |= 1 << (ident % width)
    return Fingerprint(bits, width, "morgan", (radius,))


def path_keys(mol: Molecule, min_len: int = 1, max_len: int = 7) -> set[int]:
    """Hashes of all simple paths with ``min_len``..``max_len`` atoms.

    A path is the sequence of atom labels interleaved with bond orders, read
    in whichever direction is lexicographically smaller.
    """
    adj = mol.adjacency
    bonds = mol.bonds
    labels = [(a.element.atomic_number, int(a.aromatic)) for a in mol.atoms]
    keys = set()

    def emit(path: list[int]) -> None:
        seq = []
        for pos, v in enumerate(path):
            if pos:
                seq.append(bonds[mol_bond(path[pos - 1], v)].order)
            seq.extend(labels[v])
        rev = []
        rpath = path[::-1]
        for pos, v in enumerate(rpath):
            if pos:
                rev.append(bonds[mol_bond(rpath[pos - 1], v)].order)
            rev.extend(labels[v])
        keys.add(hash_ints([len(path)] + min(seq, rev)))

    bond_index = {}
    for k, b in enumerate(bonds):
        bond_index[(b.a, b.b)] = k
        bond_index[(b.b, b.a)] = k

    def mol_bond(i: int, j: int) -> int:
        return bond_index[(i, j)]

    for start in range(len(mol.atoms)):
        stack = [[start]]
        while stack:
            path = stack.pop()
            # Each multi-atom path is found from both ends; emit it once.
            if len(path) >= min_len and (len(path) == 1 or path[0] < path[-1]):
                emit(path)
            if len(path) < max_len:
                for w, _ in adj[path[-1]]:
                    if w not in path:
                        stack.append(path + [w])
    return keys


def path_fingerprint(
    mol: Union[str, Molecule], min_len: int = 1, max_len: int = 7, width: int = 2048
) -> Fingerprint:
    _check_width(width)
    if min_len < 1 or max_len < min_len:
        raise ValueError("need 1 <= min_len <= max_len")
    mol = _mol(mol)
    bits = 0
    for key in path_keys(mol, min_len, max_len):
        bits |= 1 << (key % width)
    return Fingerprint(bits, width, "path", (min_len, max_len))


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a & b| / |a | b|; two empty fingerprints score 0.0."""
    if (a.kind, a.width, a.params) != (b.kind, b.width, b.params):
        raise ValueError("cannot compare fingerprints with different parameters")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 0.0
    return (a.bits & b.bits).bit_count() / union


# ---------------------------------------------------------------------------
# scaffolds and statistics


def murcko_scaffold(mol: Union[str, Molecule]) -> Molecule:
    """Ring systems plus linkers; terminal atoms multiply bonded to them are kept.

    Side chains are removed by repeatedly deleting atoms of degree one or
    less. Acyclic molecules give an empty molecule. Atoms that lose
    substituents gain hydrogens in their place.
    """
    mol = _mol(mol)
    n = len(mol.atoms)
    adj = mol.adjacency
    degree = [len(a) for a in adj]
    alive = [True] * n
    queue = [i for i in range(n) if degree[i] <= 1]
    while queue:
        v = queue.pop()
        if not alive[v]:
            continue
        alive[v] = False
        for w, _ in adj[v]:
            if alive[w]:
                degree[w] -= 1
                if degree[w] <= 1:
                    queue.append(w)
    keep = {i for i in range(n) if alive[i]}
    if not keep:
        return Molecule([], [])
    for i in range(n):
        if i in keep or len(adj[i]) != 1:
            continue
        j, k = adj[i][0]
        if j in keep and mol.bonds[k].order not in (SINGLE, AROMATIC):
            keep.add(i)
    return remove_atoms(mol, keep)


def remove_atoms(mol: Molecule, keep: set[int]) -> Molecule:
    """Induced subgraph on ``keep``; removed bonds become hydrogens on kept atoms."""
    from chemtune.chem.smiles import _plain_hydrogens

    lost = Counter()
    for b in mol.bonds:
        if (b.a in keep) != (b.b in keep):
            inside = b.a if b.a in keep else b.b
            lost[inside] += 1 if b.order == AROMATIC else b.order
    sub = mol.subgraph(keep)
    if not lost:
        return sub
    index = {old: new for new, old in enumerate(sorted(keep))}
    hs = mol.total_hs
    atoms = list(sub.atoms)
    stereo = dict(sub.stereo)
    for old, gained in lost.items():
        new = index[old]
        atom: Atom = atoms[new]
        if atom.chirality is not None:
            atom = atom._replace(chirality=None)
            stereo.pop(new, None)
        atoms[new] = atom
    draft = Molecule(atoms, sub.bonds, stereo)
    for old, gained in lost.items():
        new = index[old]
        want = hs[old] + gained
        atom = atoms[new]
        plain = _plain_hydrogens(draft, new) if atom.explicit_h is None else None
        if plain != want:
            atoms[new] = atom._replace(explicit_h=want)
    return Molecule(atoms, sub.bonds, stereo)


@dataclass(frozen=True)
class MolStats:
    heavy_atom_count: int
    molecular_weight: float
    ring_count: int


def mol_stats(mol: Union[str, Molecule]) -> MolStats:
    mol = _mol(mol)
    hs = mol.total_hs
    h_weight = BY_SYMBOL["H"].standard_atomic_weight
    weight = 0.0
    heavy = 0
    for i, atom in enumerate(mol.atoms):
        if atom.isotope is not None:
            weight += float(atom.isotope)
        else:
            weight += atom.element.standard_atomic_weight
        weight += hs[i] * h_weight
        if atom.element.atomic_number > 1:
            heavy += 1
    rings = len(mol.bonds) - len(mol.atoms) + len(mol.fragments)
    return MolStats(heavy, round(weight, 3), rings)
