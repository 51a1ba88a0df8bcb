"""Chemistry instruction-corpus toolkit: SMILES handling, corpus building and scoring."""

from chemtune.canon import canonical_ranks, canonical_smiles, try_canonical
from chemtune.chem import Molecule, kekulize, parse_smiles, validate, write_smiles

__version__ = "0.1.0"

__all__ = [
    "Molecule",
    "canonical_ranks",
    "canonical_smiles",
    "kekulize",
    "parse_smiles",
    "try_canonical",
    "validate",
    "write_smiles",
]
