"""Random drug-like molecule generation for soak tests and benchmarks."""

from __future__ import annotations

import random
from typing import Optional

from chemtune.chem.errors import ChemError
from chemtune.chem.molecule import H_SLOT, SINGLE, Bond, Molecule
from chemtune.chem.smiles import parse_smiles, write_smiles
from chemtune.chem.valence import check_valid

# Attachment happens at atom 0 of each fragment.
FRAGMENTS = (
    "C", "C", "C", "CC", "CCC", "C(C)C", "O", "N", "F", "Cl", "Br", "I",
    "C(=O)O", "C(=O)N", "C(=O)OC", "C#N", "C=C", "OC", "NC", "SC", "S(=O)(=O)N",
    "[N+](=O)[O-]", "C(F)(F)F", "P(=O)(O)O", "[NH3+]", "C(=O)[O-]",
    "c1ccccc1", "c1ccccc1", "c1ccncc1", "c1ccsc1", "c1ccoc1", "c1cc[nH]c1",
    "n1ccnc1", "c1ccc2ccccc2c1", "c1ncncn1", "C1CCCCC1", "C1CCNCC1", "C1CCOC1",
    "C1CC1", "N1CCOCC1", "c1ccc2[nH]ccc2c1", "B(O)O", "[2H]", "[13CH3]",
)


def _merge(a: Molecule, b: Molecule, at_a: int, at_b: int) -> Molecule:
    off = len(a.atoms)
    atoms = list(a.atoms) + list(b.atoms)
    bonds = list(a.bonds) + [Bond(x.a + off, x.b + off, x.order, x.direction) for x in b.bonds]
    bonds.append(Bond(at_a, at_b + off, SINGLE, None))
    return Molecule(atoms, bonds)


def _open_sites(mol: Molecule) -> list[int]:
    hs = mol.total_hs
    return [i for i, a in enumerate(mol.atoms) if hs[i] > 0 and a.explicit_h is None]


def _add_stereo(mol: Molecule, rng: random.Random) -> Molecule:
    hs = mol.total_hs
    atoms = list(mol.atoms)
    stereo = {}
    for i, a in enumerate(atoms):
        if a.element.symbol != "C" or a.aromatic or a.explicit_h is not None:
            continue
        nb = mol.adjacency[i]
        if len(nb) + hs[i] != 4 or hs[i] > 1 or len(nb) < 3:
            continue
        if any(mol.bonds[k].order != SINGLE for _, k in nb):
            continue
        if rng.random() < 0.5:
            atoms[i] = a._replace(chirality=rng.choice(("@", "@@")), explicit_h=hs[i])
            refs = [j for j, _ in nb]
            if hs[i]:
                refs.insert(1, H_SLOT)
            stereo[i] = tuple(refs)
    return Molecule(atoms, mol.bonds, stereo)


def random_molecule(rng: random.Random, max_heavy: int = 50, stereo: bool = True) -> Optional[str]:
    """SMILES of a random valid molecule with at most ``max_heavy`` heavy atoms."""
    frags = [parse_smiles(f) for f in FRAGMENTS]
    mol = rng.choice([m for m, f in zip(frags, FRAGMENTS) if "1" in f])
    target = rng.randint(5, max_heavy)
    for _ in range(40):
        if mol.heavy_atom_count() >= target:
            break
        frag = rng.choice(frags)
        if mol.heavy_atom_count() + frag.heavy_atom_count() > max_heavy:
            continue
        sites = _open_sites(mol)
        if not sites or not _open_sites(frag) or 0 not in _open_sites(frag):
            continue
        mol = _merge(mol, frag, rng.choice(sites), 0)
    # Occasionally close an extra aliphatic ring.
    if rng.random() < 0.3:
        sites = [i for i in _open_sites(mol) if not mol.atoms[i].aromatic and mol.atoms[i].element.symbol == "C"]
        if len(sites) >= 2:
            i, j = rng.sample(sites, 2)
            if mol.bond_between(i, j) is None:
                mol = Molecule(list(mol.atoms), list(mol.bonds) + [Bond(i, j, SINGLE, None)])
    if stereo:
        mol = _add_stereo(mol, rng)
    if rng.random() < 0.05:
        mol = _merge_disconnected(mol, parse_smiles(rng.choice(("[Na+]", "[Cl-]", "O", "[K+]"))))
    try:
        check_valid(mol)
    except ChemError:
        return None
    order = list(range(len(mol.atoms)))
    rng.shuffle(order)
    return write_smiles(mol, order)


def _merge_disconnected(a: Molecule, b: Molecule) -> Molecule:
    off = len(a.atoms)
    bonds = list(a.bonds) + [Bond(x.a + off, x.b + off, x.order, x.direction) for x in b.bonds]
    return Molecule(list(a.atoms) + list(b.atoms), bonds, dict(a.stereo))


def molecule_set(n: int, seed: int = 0, max_heavy: int = 50, stereo: bool = True) -> list[str]:
    """``n`` distinct-by-text random molecules, reproducible from ``seed``."""
    rng = random.Random(seed)
    out: list[str] = []
    seen = set()
    while len(out) < n:
        smi = random_molecule(rng, max_heavy, stereo)
        if smi is not None and smi not in seen:
            seen.add(smi)
            out.append(smi)
    return out


def random_rewrite(smiles: str, rng: random.Random) -> str:
    """Same molecule written from a random atom order."""
    mol = parse_smiles(smiles)
    order = list(range(len(mol.atoms)))
    rng.shuffle(order)
    return write_smiles(mol, order)
