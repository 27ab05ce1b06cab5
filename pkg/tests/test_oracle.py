import numpy as np
import pytest

from gpqe.fermion import Excitation
from gpqe.hamio import MolecularIntegrals, Molecule, hartree_fock_reference, spinorbitalize
from gpqe.oracle import (
    OracleSizeError,
    SectorBasis,
    dense_unitary,
    exact_depolarizing_channel,
    fci_ground_state,
    full_residual_vector,
    sector_matrix_slater_condon,
)
from gpqe.simulator import Gate, apply_ansatz, apply_gate, init_reference

from conftest import engine, molecule


def test_sector_basis():
    sector = SectorBasis(8, 2, 2)
    assert len(sector) == 36
    assert sector.determinants == sorted(sector.determinants)
    for det in sector.determinants:
        assert bin(det & 0x55).count("1") == 2 and bin(det & 0xAA).count("1") == 2


def test_noninteracting_fci():
    h1 = np.diag([-1.0, -0.3, 0.4])
    ints = MolecularIntegrals(3, 2, 0, 0.5, h1, np.zeros((3,) * 4))
    ham = spinorbitalize(ints)
    e, _, _ = fci_ground_state(ham, 1, 1)
    assert e == pytest.approx(0.5 - 2.0)


@pytest.mark.parametrize("label", ["h2_0.735", "h4_1.500", "bh_1.400", "beh2_1.500"])
def test_dual_path_fci(label):
    mol = molecule(label)
    ref = mol.reference
    e_sc, _, _ = fci_ground_state(mol.hamiltonian, ref.n_alpha, ref.n_beta, method="slater-condon")
    e_jw, _, _ = fci_ground_state(mol.hamiltonian, ref.n_alpha, ref.n_beta, method="jw", qubit_ham=mol.qubit_hamiltonian)
    assert abs(e_sc - e_jw) < 1e-12
    assert e_sc <= ref.e_hf


def test_fci_invariant_under_spin_channel_relabelling():
    mol = molecule("h4_1.000")
    perm = np.array([1, 0, 2, 3])  # swap two spatial orbitals: relabels both spin channels consistently
    ints = mol.integrals
    h1 = ints.h1[np.ix_(perm, perm)]
    eri = ints.eri[np.ix_(perm, perm, perm, perm)]
    ham = spinorbitalize(MolecularIntegrals(4, 4, 0, ints.core_energy, h1, eri))
    e0, _, _ = fci_ground_state(mol.hamiltonian, 2, 2)
    e1, _, _ = fci_ground_state(ham, 2, 2)
    assert e1 == pytest.approx(e0, abs=1e-10)


def test_size_caps(monkeypatch):
    import gpqe.oracle as oracle

    monkeypatch.setattr(oracle, "MAX_SECTOR_DIM", 10)
    mol = molecule("h4_1.500")
    with pytest.raises(OracleSizeError, match="36"):
        fci_ground_state(mol.hamiltonian, 2, 2)
    with pytest.raises(OracleSizeError):
        dense_unitary([], 7)
    with pytest.raises(OracleSizeError):
        exact_depolarizing_channel([], 0.0, 0.0, np.eye(32))


def test_dense_unitary_identity_and_unitarity():
    factors = [(Excitation((0,), (2,)), 0.3), (Excitation((0, 1), (2, 3)), -0.8)]
    assert np.allclose(dense_unitary([(g, 0.0) for g, _ in factors], 4), np.eye(16))
    u = dense_unitary(factors, 4)
    assert np.allclose(u.conj().T @ u, np.eye(16), atol=1e-12)
    for col in range(16):
        e = np.zeros(16, dtype=complex)
        e[col] = 1
        assert np.allclose(apply_ansatz(e, factors), u[:, col], atol=1e-10)


TEST_GATES = [
    Gate("H", (0,)),
    Gate("CX", (0, 1), noisy=True),
    Gate("RZ", (1,), 0.3, noisy=True),
    Gate("S", (1,)),
    Gate("CX", (1, 0), noisy=True),
]


def _pure(gates, n=2):
    psi = init_reference(n, 0)
    for g in gates:
        apply_gate(psi, g)
    return psi


def test_channel_noiseless_is_pure_evolution():
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[0, 0] = 1
    rho = exact_depolarizing_channel(TEST_GATES, 0.0, 0.0, rho0)
    psi = _pure(TEST_GATES)
    assert np.allclose(rho, np.outer(psi, psi.conj()), atol=1e-12)


def test_channel_trace_and_positivity():
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[0, 0] = 1
    rho = exact_depolarizing_channel(TEST_GATES, 0.2, 0.3, rho0)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rho, rho.conj().T)
    assert np.linalg.eigvalsh(rho).min() >= -1e-12


def test_full_depolarization_of_one_qubit():
    rho0 = np.array([[1, 0], [0, 0]], dtype=complex)
    rho = exact_depolarizing_channel([Gate("RZ", (0,), 0.0, noisy=True)], 0.75, 0.0, rho0)
    assert np.allclose(rho, np.eye(2) / 2)


def test_full_residual_vector_at_zero_is_hamiltonian_column():
    mol = molecule("h4_1.500")
    eng = engine("h4_1.500", "SD")
    sector = eng.sector
    hbar = eng.hbar_on_reference(np.zeros(eng.n_params))
    vec = full_residual_vector(hbar, mol.reference.occupation, sector)
    col = sector_matrix_slater_condon(mol.hamiltonian, sector)[:, sector.index[mol.reference.occupation]]
    from gpqe.oracle import determinant_phase

    signs = np.array([determinant_phase(mol.reference.occupation, d) for d in sector.determinants])
    assert np.allclose(vec, signs * col, atol=1e-12)
    assert vec[sector.index[mol.reference.occupation]] == pytest.approx(mol.reference.e_hf)


def test_full_residual_vector_norm_and_ansatz_entries(rng):
    eng = engine("h4_1.500", "SD")
    theta = rng.normal(scale=0.1, size=eng.n_params)
    hbar = eng.hbar_on_reference(theta)
    vec = full_residual_vector(hbar, eng.reference, eng.sector)
    psi = eng.state(theta)
    assert np.linalg.norm(vec) == pytest.approx(np.linalg.norm(eng.hamiltonian.apply(psi)), abs=1e-10)
    for gen in eng.ansatz.excitations:
        det, _ = eng.determinant(gen)
        assert vec[eng.sector.index[det]] == eng.residual_direct(theta, gen, hbar)
