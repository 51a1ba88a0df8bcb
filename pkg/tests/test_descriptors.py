import math
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from chemtune.canon import canonical_smiles
from chemtune.chem import parse_smiles, write_smiles
from chemtune.chem.valence import kekulize
from chemtune.descriptors import (
    Fingerprint,
    FormulaError,
    mol_stats,
    molecular_formula,
    morgan_fingerprint,
    murcko_scaffold,
    parse_formula,
    path_fingerprint,
    tanimoto,
)
from chemtune.generate import random_rewrite

from conftest import CORPUS

# Frozen from the environment-enumeration oracle below: CCO has 6 distinct
# environments, CCC has 4, and 3 are shared, so T = 3 / 7.
T_CCO_CCC = 0.42857142857142855


def environment_oracle(smiles: str, radius: int = 2) -> set:
    """Distinct circular environments as nested tuples, no hashing involved.

    An environment is dropped when it covers an atom set already covered by
    a kept one from an earlier round.
    """
    mol = parse_smiles(smiles)
    kek = kekulize(mol)
    hs = mol.total_hs
    ring = mol.ring_atoms()
    adj = kek.adjacency
    orders = [b.order for b in mol.bonds]
    ident = [
        (a.element.atomic_number, len(adj[i]), hs[i], a.charge, a.isotope or 0, ring[i], a.aromatic)
        for i, a in enumerate(mol.atoms)
    ]
    cover = [frozenset([i]) for i in range(len(mol.atoms))]
    kept = set(ident)
    seen_sets = set(cover)
    for r in range(1, radius + 1):
        new_ident, new_cover = [], []
        for i in range(len(mol.atoms)):
            nb = sorted((orders[k], ident[j]) for j, k in adj[i])
            new_ident.append((r, ident[i], tuple(nb)))
            new_cover.append(cover[i].union(*(cover[j] for j, _ in adj[i])))
        round_sets = {}
        for env, atoms in zip(new_ident, new_cover):
            if atoms in seen_sets:
                continue
            # Ties inside one round would depend on hash order; the oracle
            # is only used where none occur.
            assert round_sets.get(atoms, env) == env
            round_sets[atoms] = env
        kept.update(round_sets.values())
        seen_sets.update(round_sets)
        ident, cover = new_ident, new_cover
    return kept


# --- formulas -----------------------------------------------------------------------


@pytest.mark.parametrize(
    "smiles, hill",
    [
        ("C(C1C(C(C(C(O1)O)O)O)O)O", "C6H12O6"),
        ("CCO", "C2H6O"),
        ("[NH4+]", "H4N+"),
        ("[O-]C(=O)C(=O)[O-]", "C2O4-2"),
        ("CC(=O)[O-].[Na+]", "C2H3NaO2"),
        ("c1ccccc1", "C6H6"),
        ("ClC(Cl)(Cl)Br", "CBrCl3"),
    ],
)
def test_molecular_formula(smiles, hill):
    assert molecular_formula(smiles).hill() == hill


def test_parse_formula_order_free():
    a = parse_formula("C6H12O6")
    assert a.as_dict() == {"C": 6, "H": 12, "O": 6}
    assert parse_formula("H12C6O6").same_atoms(a)
    assert not parse_formula("C6H12O").same_atoms(a)


def test_formula_charge_compared_only_when_both_stated():
    assert parse_formula("H4N+").same_atoms(parse_formula("H4N"))
    assert not parse_formula("H4N+").same_atoms(parse_formula("H4N-"))
    assert parse_formula("C2O4-2").charge == -2


@pytest.mark.parametrize("bad", ["", "c6", "C6H12O6x", "6C", "Qq2", "C6 H12"])
def test_parse_formula_rejects(bad):
    with pytest.raises(FormulaError):
        parse_formula(bad)


def test_formula_round_trips_through_hill(corpus):
    for s in corpus:
        f = molecular_formula(s)
        assert parse_formula(f.hill()).same_atoms(f)


# --- fingerprints ---------------------------------------------------------------------


def test_morgan_identical_is_one():
    assert tanimoto(morgan_fingerprint("CCO"), morgan_fingerprint("CCO")) == 1.0


def test_morgan_methane_vs_ethane_is_zero():
    assert environment_oracle("C").isdisjoint(environment_oracle("CC"))
    assert tanimoto(morgan_fingerprint("C"), morgan_fingerprint("CC")) == 0.0


def test_morgan_ethanol_vs_propane_matches_oracle():
    a, b = environment_oracle("CCO"), environment_oracle("CCC")
    assert (len(a), len(b), len(a & b)) == (6, 4, 3)
    assert len(a & b) / len(a | b) == T_CCO_CCC
    assert tanimoto(morgan_fingerprint("CCO"), morgan_fingerprint("CCC")) == T_CCO_CCC


@pytest.mark.parametrize("smiles", ["CCO", "c1ccccc1O", "CC(=O)Nc1ccc(O)cc1", "C1CC2CCC1CC2"])
def test_morgan_popcount_matches_oracle(smiles):
    # No folding collisions for these small molecules at width 2048.
    assert morgan_fingerprint(smiles).popcount() == len(environment_oracle(smiles))


def test_morgan_radius_zero_counts_atom_types():
    assert morgan_fingerprint("CCO", radius=0).popcount() == 3
    assert morgan_fingerprint("CCC", radius=0).popcount() == 2


def test_morgan_ignores_atom_maps():
    assert morgan_fingerprint("[CH3:1][CH2:2][OH:3]").bits == morgan_fingerprint("CCO").bits


def test_fingerprint_width_must_be_power_of_two():
    with pytest.raises(ValueError):
        morgan_fingerprint("C", width=1000)
    with pytest.raises(ValueError):
        path_fingerprint("C", width=0)


def test_path_fingerprint_examples():
    assert path_fingerprint("C").popcount() == 1
    assert path_fingerprint("CCO").popcount() >= path_fingerprint("CC").popcount()
    assert path_fingerprint("c1ccccc1").bits == path_fingerprint("c1ccc(cc1)").bits


def test_path_fingerprint_rotation_invariant(rng):
    ref = path_fingerprint("c1ccccc1").bits
    for _ in range(5):
        assert path_fingerprint(random_rewrite("c1ccccc1", rng)).bits == ref


def test_tanimoto_set_arithmetic():
    a = Fingerprint(0b110, 2048, "morgan", (2,))
    b = Fingerprint(0b1100, 2048, "morgan", (2,))
    assert tanimoto(a, b) == pytest.approx(1 / 3, abs=1e-15)
    assert tanimoto(a, a) == 1.0
    assert tanimoto(a, Fingerprint(0b1000, 2048, "morgan", (2,))) == 0.0


def test_tanimoto_empty_is_zero():
    e = Fingerprint(0, 2048, "morgan", (2,))
    assert tanimoto(e, e) == 0.0


def test_tanimoto_rejects_mismatched_params():
    with pytest.raises(ValueError):
        tanimoto(morgan_fingerprint("C"), morgan_fingerprint("C", width=1024))
    with pytest.raises(ValueError):
        tanimoto(morgan_fingerprint("C"), path_fingerprint("C"))


# --- scaffolds and statistics ------------------------------------------------------------


def test_scaffold_examples():
    assert canonical_smiles(murcko_scaffold("CCc1ccccc1")) == canonical_smiles("c1ccccc1")
    assert len(murcko_scaffold("CCO").atoms) == 0
    assert canonical_smiles(murcko_scaffold("c1ccccc1")) == canonical_smiles("c1ccccc1")


def test_scaffold_keeps_exocyclic_double_bond():
    assert canonical_smiles(murcko_scaffold("O=C1CCCCC1CC")) == canonical_smiles("O=C1CCCCC1")


def test_scaffold_keeps_linker():
    scaffold = murcko_scaffold("c1ccccc1CCc1ccncc1CC(=O)O")
    assert canonical_smiles(scaffold) == canonical_smiles("c1ccccc1CCc1ccncc1")


def test_mol_stats_examples():
    s = mol_stats("C")
    assert (s.heavy_atom_count, s.ring_count) == (1, 0)
    assert s.molecular_weight == pytest.approx(12.011 + 4 * 1.008, abs=1e-9)
    s = mol_stats("c1ccccc1")
    assert (s.heavy_atom_count, s.ring_count) == (6, 1)
    assert s.molecular_weight == pytest.approx(6 * 12.011 + 6 * 1.008, abs=1e-9)
    assert mol_stats("C1CC1C2CC2").ring_count == 2


def test_mol_stats_uses_isotope_mass():
    assert mol_stats("[13CH4]").molecular_weight == pytest.approx(13 + 4 * 1.008, abs=1e-9)


def test_ring_count_is_circuit_rank_for_fused_rings():
    assert mol_stats("c1ccc2ccccc2c1").ring_count == 2
    assert mol_stats("C12C3C4C1C5C2C3C45").ring_count == 5


# --- properties -----------------------------------------------------------------------------


@given(st.sampled_from(CORPUS), st.randoms(use_true_random=False))
def test_descriptors_invariant_under_reindexing(smiles, r):
    other = random_rewrite(smiles, r)
    assert molecular_formula(other).hill() == molecular_formula(smiles).hill()
    assert morgan_fingerprint(other).bits == morgan_fingerprint(smiles).bits
    assert path_fingerprint(other).bits == path_fingerprint(smiles).bits
    assert mol_stats(other) == mol_stats(smiles)
    a, b = murcko_scaffold(other), murcko_scaffold(smiles)
    assert (canonical_smiles(a) if a.atoms else "") == (canonical_smiles(b) if b.atoms else "")


@given(st.sampled_from(CORPUS))
def test_descriptors_invariant_under_canonicalization(smiles):
    canon = canonical_smiles(smiles)
    assert morgan_fingerprint(canon).bits == morgan_fingerprint(smiles).bits
    assert path_fingerprint(canon).bits == path_fingerprint(smiles).bits
    assert mol_stats(canon) == mol_stats(smiles)


@given(st.sampled_from(CORPUS), st.sampled_from(CORPUS))
def test_tanimoto_symmetric_and_bounded(a, b):
    fa, fb = morgan_fingerprint(a), morgan_fingerprint(b)
    t = tanimoto(fa, fb)
    assert t == tanimoto(fb, fa)
    assert 0.0 <= t <= 1.0
    assert tanimoto(fa, fa) == 1.0


@given(st.sampled_from(CORPUS))
def test_scaffold_idempotent_and_contained(smiles):
    scaffold = murcko_scaffold(smiles)
    again = murcko_scaffold(scaffold) if scaffold.atoms else scaffold
    assert len(again.atoms) == len(scaffold.atoms)
    if scaffold.atoms:
        assert canonical_smiles(again) == canonical_smiles(scaffold)
    mol = parse_smiles(smiles)
    heavy = Counter(a.element.symbol for a in mol.atoms if a.element.symbol != "H")
    kept = Counter(a.element.symbol for a in scaffold.atoms if a.element.symbol != "H")
    assert not kept - heavy


def test_generated_descriptors_stable(generated, rng):
    for s in generated[:60]:
        other = random_rewrite(s, rng)
        assert morgan_fingerprint(other).bits == morgan_fingerprint(s).bits
        assert math.isclose(mol_stats(other).molecular_weight, mol_stats(s).molecular_weight)
