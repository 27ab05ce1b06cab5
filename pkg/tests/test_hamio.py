import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpqe.hamio import (
    CapacityError,
    FCIDumpError,
    MolecularIntegrals,
    Molecule,
    fixture_metadata,
    fixture_path,
    hartree_fock_reference,
    list_fixtures,
    parse_fcidump,
    spinorbitalize,
    write_fcidump,
)
from gpqe.simulator import expectation, init_reference

from conftest import molecule

HEADER = "&FCIDUMP NORB=2,NELEC=2,MS2=0,\n&END\n"


def test_header_echo():
    ints = parse_fcidump(HEADER + "0.5 1 2 1 2\n")
    assert (ints.n_spatial, ints.n_elec, ints.ms2) == (2, 2, 0)


def test_two_electron_line_fills_eight_images():
    ints = parse_fcidump(HEADER + "0.5 1 2 1 2\n")
    for idx in [(0, 1, 0, 1), (1, 0, 0, 1), (0, 1, 1, 0), (1, 0, 1, 0)]:
        assert ints.eri[idx] == 0.5
    assert np.count_nonzero(ints.eri) == 4  # (12|12) has only 4 distinct index tuples


def test_one_electron_and_core_lines():
    ints = parse_fcidump(HEADER + "-1.25 2 1 0 0\n0.7 0 0 0 0\n")
    assert ints.h1[0, 1] == ints.h1[1, 0] == -1.25
    assert ints.core_energy == 0.7


def test_slash_terminated_header_and_fortran_exponent():
    ints = parse_fcidump(" &FCI NORB=1, NELEC=2, MS2=0\n /\n 1.0D-01 1 1 1 1\n")
    assert ints.eri[0, 0, 0, 0] == pytest.approx(0.1)


@pytest.mark.parametrize(
    "text, needle",
    [
        ("NORB=2\n", "line 1"),
        ("&FCI NORB=2,NELEC=2,\n&END\n", "MS2"),
        (HEADER + "0.5 1 2 1\n", "line 3"),
        (HEADER + "abc 1 2 1 2\n", "line 3"),
    ],
)
def test_malformed_input_names_the_line(text, needle):
    with pytest.raises(FCIDumpError, match=needle):
        parse_fcidump(text)


def test_index_out_of_range():
    with pytest.raises(IndexError, match="line 3"):
        parse_fcidump(HEADER + "0.5 1 3 1 1\n")


def test_h2_core_energy_is_nuclear_repulsion():
    meta = fixture_metadata("h2_0.735")
    ints = molecule("h2_0.735").integrals
    expected = 1.0 / (0.735 / meta["bohr_angstrom"])
    assert ints.core_energy == pytest.approx(expected, abs=1e-10)
    assert ints.core_energy == pytest.approx(0.7199689, abs=1e-7)


def test_round_trip_is_exact():
    for label in ("h2_0.735", "bh_1.400"):
        ints = molecule(label).integrals
        again = parse_fcidump(write_fcidump(ints))
        assert np.array_equal(again.h1, ints.h1)
        assert np.array_equal(again.eri, ints.eri)
        assert again.core_energy == ints.core_energy


def test_eps_invariant_under_line_order(rng):
    text = fixture_path("h4_1.000").read_text().splitlines()
    head = text[:text.index(next(l for l in text if l.strip().upper().startswith("&END"))) + 1]
    body = text[len(head):]
    shuffled = "\n".join(head + [body[k] for k in rng.permutation(len(body))])
    a = Molecule.from_integrals(parse_fcidump("\n".join(text)))
    b = Molecule.from_integrals(parse_fcidump(shuffled))
    assert np.array_equal(a.reference.eps, b.reference.eps)


def test_spin_block_structure():
    ints = MolecularIntegrals(1, 2, 0, 0.0, np.array([[-1.0]]), np.zeros((1, 1, 1, 1)))
    ham = spinorbitalize(ints)
    assert ham.h[0, 0] == ham.h[1, 1] == -1.0
    assert ham.h[0, 1] == 0.0


def test_antisymmetry_and_spin_forbidden_zeros():
    ham = molecule("h4_1.500").hamiltonian
    v = ham.v_antisym
    assert np.allclose(v, -v.transpose(1, 0, 2, 3))
    assert np.allclose(v, -v.transpose(0, 1, 3, 2))
    assert np.all(v[np.arange(8), np.arange(8)] == 0)
    s = np.arange(8) & 1
    forbidden = (s[:, None, None, None] + s[None, :, None, None]) != (s[None, None, :, None] + s[None, None, None, :])
    assert np.all(v[forbidden] == 0)


def test_h2_opposite_spin_integral():
    mol = molecule("h2_0.735")
    assert mol.hamiltonian.v_antisym[0, 1, 0, 1] == pytest.approx(mol.integrals.eri[0, 0, 0, 0])


def test_zero_two_body_gives_bare_eps():
    ints = MolecularIntegrals(2, 2, 0, 0.0, np.diag([-1.0, 0.5]), np.zeros((2,) * 4))
    ref = hartree_fock_reference(spinorbitalize(ints), 1, 1)
    assert np.allclose(ref.eps, [-1.0, -1.0, 0.5, 0.5])
    assert ref.e_hf == pytest.approx(-2.0)


def test_capacity_error():
    ham = molecule("h2_0.735").hamiltonian
    with pytest.raises(CapacityError):
        hartree_fock_reference(ham, 3, 0)


def test_h4_occupation():
    assert molecule("h4_1.500").reference.occupation == 0b1111


@pytest.mark.parametrize("label", list_fixtures())
def test_hf_energy_matches_qubit_path_and_generator(label):
    mol = molecule(label)
    ref = mol.reference
    psi = init_reference(mol.n_qubits, ref.occupation)
    assert expectation(psi, mol.qubit_hamiltonian) == pytest.approx(ref.e_hf, abs=1e-10)
    assert ref.e_hf == pytest.approx(fixture_metadata(label)["e_hf"], abs=1e-8)
    # canonical orbitals: eps ascending per spin channel
    for sigma in (0, 1):
        assert np.all(np.diff(ref.eps[sigma::2]) >= -1e-10)


def test_fixture_inventory():
    assert len(list_fixtures("h2_")) == 1
    for prefix in ("h4_", "bh_", "beh2_"):
        assert len(list_fixtures(prefix)) >= 6
    meta = fixture_metadata("bh_1.400")
    assert meta["frozen_core_spatial_orbitals"] == 1


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(-1, 1))
@settings(max_examples=30, deadline=None)
def test_round_trip_property(h_vals, g):
    h1 = np.array([[h_vals[0], h_vals[1]], [h_vals[1], h_vals[2]]])
    eri = np.zeros((2,) * 4)
    for idx in [(0, 1, 0, 1), (1, 0, 0, 1), (0, 1, 1, 0), (1, 0, 1, 0)]:
        eri[idx] = g
    ints = MolecularIntegrals(2, 2, 0, 0.25, h1, eri)
    again = parse_fcidump(write_fcidump(ints))
    assert np.array_equal(again.h1, h1) and np.array_equal(again.eri, eri)
