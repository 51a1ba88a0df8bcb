"""Periodic table data: symbols, standard atomic weights and valence rules.

Atomic weights are conventional standard values rounded to three decimals.
Elements without a stable isotope carry the mass number of their longest
lived isotope.
"""

from __future__ import annotations

from dataclasses import dataclass

# (symbol, standard atomic weight) in atomic-number order.
_WEIGHTS: list[tuple[str, float]] = [
    ("H", 1.008), ("He", 4.003), ("Li", 6.94), ("Be", 9.012), ("B", 10.81),
    ("C", 12.011), ("N", 14.007), ("O", 15.999), ("F", 18.998), ("Ne", 20.180),
    ("Na", 22.990), ("Mg", 24.305), ("Al", 26.982), ("Si", 28.085), ("P", 30.974),
    ("S", 32.06), ("Cl", 35.45), ("Ar", 39.948), ("K", 39.098), ("Ca", 40.078),
    ("Sc", 44.956), ("Ti", 47.867), ("V", 50.942), ("Cr", 51.996), ("Mn", 54.938),
    ("Fe", 55.845), ("Co", 58.933), ("Ni", 58.693), ("Cu", 63.546), ("Zn", 65.38),
    ("Ga", 69.723), ("Ge", 72.630), ("As", 74.922), ("Se", 78.971), ("Br", 79.904),
    ("Kr", 83.798), ("Rb", 85.468), ("Sr", 87.62), ("Y", 88.906), ("Zr", 91.224),
    ("Nb", 92.906), ("Mo", 95.95), ("Tc", 98.0), ("Ru", 101.07), ("Rh", 102.906),
    ("Pd", 106.42), ("Ag", 107.868), ("Cd", 112.414), ("In", 114.818), ("Sn", 118.710),
    ("Sb", 121.760), ("Te", 127.60), ("I", 126.904), ("Xe", 131.293), ("Cs", 132.905),
    ("Ba", 137.327), ("La", 138.905), ("Ce", 140.116), ("Pr", 140.908), ("Nd", 144.242),
    ("Pm", 145.0), ("Sm", 150.36), ("Eu", 151.964), ("Gd", 157.25), ("Tb", 158.925),
    ("Dy", 162.500), ("Ho", 164.930), ("Er", 167.259), ("Tm", 168.934), ("Yb", 173.045),
    ("Lu", 174.967), ("Hf", 178.49), ("Ta", 180.948), ("W", 183.84), ("Re", 186.207),
    ("Os", 190.23), ("Ir", 192.217), ("Pt", 195.084), ("Au", 196.967), ("Hg", 200.592),
    ("Tl", 204.38), ("Pb", 207.2), ("Bi", 208.980), ("Po", 209.0), ("At", 210.0),
    ("Rn", 222.0), ("Fr", 223.0), ("Ra", 226.0), ("Ac", 227.0), ("Th", 232.038),
    ("Pa", 231.036), ("U", 238.029), ("Np", 237.0), ("Pu", 244.0), ("Am", 243.0),
    ("Cm", 247.0), ("Bk", 247.0), ("Cf", 251.0), ("Es", 252.0), ("Fm", 257.0),
    ("Md", 258.0), ("No", 259.0), ("Lr", 262.0), ("Rf", 267.0), ("Db", 268.0),
    ("Sg", 269.0), ("Bh", 270.0), ("Hs", 269.0), ("Mt", 278.0), ("Ds", 281.0),
    ("Rg", 282.0), ("Cn", 285.0), ("Nh", 286.0), ("Fl", 289.0), ("Mc", 290.0),
    ("Lv", 293.0), ("Ts", 294.0), ("Og", 294.0),
]

# Allowed total valences (bond-order sum + hydrogens) for neutral atoms.
# Elements absent here are not valence-checked.
_VALENCES: dict[str, tuple[int, ...]] = {
    "H": (1,), "Li": (1,), "Be": (2,), "B": (3,), "C": (4,), "N": (3,),
    "O": (2,), "F": (1,), "Na": (1,), "Mg": (2,), "Al": (3,), "Si": (4,),
    "P": (3, 5, 7), "S": (2, 4, 6), "Cl": (1,), "K": (1,), "Ca": (2,),
    "Ge": (4,), "As": (3, 5, 7), "Se": (2, 4, 6), "Br": (1,), "Rb": (1,),
    "Sr": (2,), "Sn": (2, 4), "Sb": (3, 5), "Te": (2, 4, 6), "I": (1, 3, 5),
    "Cs": (1,), "Ba": (2,), "He": (0,), "Ne": (0,), "Ar": (0,), "Kr": (0, 2),
    "Xe": (0, 2, 4, 6),
}

# Valences for charged atoms, keyed by (symbol, formal charge).
CHARGED_VALENCES: dict[tuple[str, int], tuple[int, ...]] = {
    ("H", 1): (0,), ("H", -1): (0,),
    ("Li", 1): (0,), ("Na", 1): (0,), ("K", 1): (0,), ("Rb", 1): (0,), ("Cs", 1): (0,),
    ("Mg", 2): (0,), ("Ca", 2): (0,), ("Sr", 2): (0,), ("Ba", 2): (0,), ("Be", 2): (0,),
    ("B", -1): (4,), ("B", 1): (2,),
    ("C", 1): (3,), ("C", -1): (3,),
    ("N", 1): (4,), ("N", -1): (2,), ("N", -2): (1,),
    ("O", 1): (3,), ("O", -1): (1,), ("O", -2): (0,),
    ("F", -1): (0,), ("Cl", -1): (0,), ("Br", -1): (0,), ("I", -1): (0,),
    ("Cl", 1): (2,), ("Br", 1): (2,), ("I", 1): (2,),
    ("Cl", 3): (4,), ("Cl", 2): (3,),
    ("P", 1): (4,), ("P", -1): (2, 4, 6),
    ("S", 1): (3, 5), ("S", -1): (1, 3, 5), ("S", -2): (0,),
    ("Se", 1): (3, 5), ("Se", -1): (1, 3, 5), ("Se", -2): (0,),
    ("As", 1): (4,), ("Si", -1): (3, 5),
    ("Al", -1): (4,), ("Al", 3): (0,), ("Sn", 1): (3,),
}

ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
AROMATIC_SYMBOLS = frozenset({"B", "C", "N", "O", "P", "S", "Se", "As", "Te"})


@dataclass(frozen=True)
class Element:
    atomic_number: int
    symbol: str
    standard_atomic_weight: float
    default_valences: tuple[int, ...]
    organic_subset: bool
    aromatic_eligible: bool


ELEMENTS: tuple[Element, ...] = tuple(
    Element(
        atomic_number=z,
        symbol=sym,
        standard_atomic_weight=weight,
        default_valences=_VALENCES.get(sym, ()),
        organic_subset=sym in ORGANIC_SUBSET,
        aromatic_eligible=sym in AROMATIC_SYMBOLS,
    )
    for z, (sym, weight) in enumerate(_WEIGHTS, start=1)
)

BY_SYMBOL: dict[str, Element] = {e.symbol: e for e in ELEMENTS}
BY_NUMBER: dict[int, Element] = {e.atomic_number: e for e in ELEMENTS}


def element(symbol: str) -> Element:
    """Look up an element by its capitalised symbol; raises KeyError."""
    return BY_SYMBOL[symbol]


def allowed_valences(symbol: str, charge: int) -> tuple[tuple[int, ...], bool]:
    """Return ``(valences, listed)`` for an atom of the given charge.

    ``listed`` is False when a charged atom has no entry in the charge table
    and the neutral valences were used as a fallback.
    """
    if charge == 0:
        return _VALENCES.get(symbol, ()), True
    found = CHARGED_VALENCES.get((symbol, charge))
    if found is not None:
        return found, True
    return _VALENCES.get(symbol, ()), False
