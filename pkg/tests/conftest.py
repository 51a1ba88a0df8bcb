import os
import random
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from chemtune.generate import molecule_set

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile(
    "default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# Hand-picked molecules covering charges, isotopes, aromatic heterocycles,
# fused and bridged rings, stereo marks and multi-fragment salts.
CORPUS = [
    "C",
    "CCO",
    "CC(=O)O",
    "C(C1C(C(C(C(O1)O)O)O)O)O",
    "c1ccccc1",
    "c1ccncc1",
    "c1cc[nH]c1",
    "c1ccoc1",
    "c1ccsc1",
    "c1ccc2ccccc2c1",
    "c1ccc2[nH]ccc2c1",
    "C1CC2CCC1CC2",
    "C12C3C4C1C5C2C3C45",
    "[NH4+]",
    "[O-][N+](=O)c1ccccc1",
    "CC(=O)[O-].[Na+]",
    "[2H]C([2H])([2H])[2H]",
    "[13CH3]O",
    "OB(O)c1ccccc1",
    "CS(=O)(=O)N",
    "OP(=O)(O)O",
    "FC(F)(F)c1ccc(Cl)cc1Br",
    "N#Cc1ccccc1",
    "C=CC=C",
    "F/C=C/F",
    "F/C=C\\F",
    "N[C@@H](C)C(=O)O",
    "C[C@H]1CC[C@@H](C)CC1",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
    "O=C1NC(=O)c2ccccc12",
    "[Cl-].[K+]",
    "O.O",
]


@pytest.fixture(scope="session")
def corpus():
    return list(CORPUS)


@pytest.fixture(scope="session")
def generated():
    """A few hundred random valid molecules, stereo marks included."""
    return molecule_set(300, seed=2024)


@pytest.fixture
def rng():
    return random.Random(12345)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
