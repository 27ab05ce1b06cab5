import functools

import numpy as np
import pytest

from gpqe.ansatz import PoolSpec, build_ansatz, default_cso
from gpqe.hamio import Molecule, fixture_metadata, fixture_path
from gpqe.solvers import ResidualEngine


@functools.lru_cache(maxsize=None)
def molecule(label: str) -> Molecule:
    return Molecule.from_fcidump(fixture_path(label))


@functools.lru_cache(maxsize=None)
def engine(label: str, level: str) -> ResidualEngine:
    mol = molecule(label)
    cso = default_cso(mol.reference) if level == "GENERALIZED" else ()
    build = build_ansatz(mol, PoolSpec(level, cso=cso))
    return ResidualEngine(mol, build.ansatz, build.manifold)


def e_fci(label: str) -> float:
    return fixture_metadata(label)["e_fci"]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def h2():
    return molecule("h2_0.735")


@pytest.fixture(scope="session")
def h4():
    return molecule("h4_1.500")
