from chemtune.chem.elements import BY_NUMBER, BY_SYMBOL, ELEMENTS, Element, allowed_valences, element
from chemtune.chem.errors import (
    ChemError,
    KekulizationError,
    RingClosureError,
    SmilesSyntaxError,
    UnknownElementError,
    ValenceError,
)
from chemtune.chem.molecule import AROMATIC, DOUBLE, SINGLE, TRIPLE, Atom, Bond, Molecule
from chemtune.chem.smiles import parse_smiles, write_smiles
from chemtune.chem.valence import (
    Failure,
    ValidityReport,
    check_valid,
    implicit_hydrogens,
    kekulize,
    validate,
)
