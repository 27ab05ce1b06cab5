"""Independent ground truth: FCI, dense unitaries, exact noise channels.

Nothing here goes through the fast statevector kernels except
``full_residual_vector``, whose job is bookkeeping over the whole sector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .fermion import Generator, apply_string, excitation_string, generator_qubit_operator
from .hamio import SpinOrbitalHamiltonian
from .pauli import QubitOperator, popcount

MAX_SECTOR_DIM = 100_000
MAX_DENSE_QUBITS = 6
MAX_CHANNEL_QUBITS = 4


class OracleSizeError(ValueError):
    pass


@dataclass
class SectorBasis:
    n_so: int
    n_alpha: int
    n_beta: int
    determinants: list[int] = field(init=False)
    index: dict[int, int] = field(init=False)

    def __post_init__(self):
        alphas = range(0, self.n_so, 2)
        betas = range(1, self.n_so, 2)
        dets = []
        for a in combinations(alphas, self.n_alpha):
            for b in combinations(betas, self.n_beta):
                dets.append(sum(1 << p for p in a + b))
        self.determinants = sorted(dets)
        self.index = {d: k for k, d in enumerate(self.determinants)}

    def __len__(self) -> int:
        return len(self.determinants)


def _occ(det: int) -> list[int]:
    return [p for p in range(det.bit_length()) if (det >> p) & 1]


def slater_condon(ham: SpinOrbitalHamiltonian, bra: int, ket: int) -> float:
    """``<bra|H|ket>`` from the Slater-Condon rules (phase via the string sign)."""
    diff = popcount(bra ^ ket)
    if diff == 0:
        occ = _occ(ket)
        e = ham.core_energy + sum(ham.h[i, i] for i in occ)
        e += 0.5 * sum(ham.v_antisym[i, j, i, j] for i in occ for j in occ)
        return float(e)
    if diff == 2:
        (p,) = _occ(ket & ~bra)
        (q,) = _occ(bra & ~ket)
        _, sign = apply_string(((q, True), (p, False)), ket)
        common = _occ(ket & bra)
        val = ham.h[q, p] + sum(ham.v_antisym[q, k, p, k] for k in common)
        return float(sign * val)
    if diff == 4:
        p1, p2 = _occ(ket & ~bra)
        q1, q2 = _occ(bra & ~ket)
        _, sign = apply_string(((q1, True), (q2, True), (p2, False), (p1, False)), ket)
        return float(sign * ham.v_antisym[q1, q2, p1, p2])
    return 0.0


def _check_dim(sector: SectorBasis) -> None:
    if len(sector) > MAX_SECTOR_DIM:
        raise OracleSizeError(f"sector dimension {len(sector)} exceeds the cap of {MAX_SECTOR_DIM}")


def sector_matrix_slater_condon(ham: SpinOrbitalHamiltonian, sector: SectorBasis) -> np.ndarray:
    _check_dim(sector)
    dets = sector.determinants
    m = np.zeros((len(dets), len(dets)))
    for a, da in enumerate(dets):
        for b in range(a, len(dets)):
            v = slater_condon(ham, da, dets[b])
            m[a, b] = m[b, a] = v
    return m


def sector_matrix_jw(qubit_ham: QubitOperator, sector: SectorBasis, n_qubits: int):
    _check_dim(sector)
    full = qubit_ham.to_sparse(n_qubits)
    idx = np.array(sector.determinants)
    return full[idx][:, idx]


def _lowest(m) -> tuple[float, np.ndarray]:
    if isinstance(m, np.ndarray) or m.shape[0] <= 2000:
        dense = m if isinstance(m, np.ndarray) else m.toarray()
        w, v = np.linalg.eigh(dense)
        return float(w[0].real), v[:, 0]
    w, v = scipy.sparse.linalg.eigsh(m, k=1, which="SA", tol=1e-12)
    return float(w[0]), v[:, 0]


def fci_ground_state(
    ham: SpinOrbitalHamiltonian,
    n_alpha: int,
    n_beta: int,
    method: str = "slater-condon",
    qubit_ham: QubitOperator | None = None,
) -> tuple[float, np.ndarray, SectorBasis]:
    """Lowest eigenpair of H in the ``(n_alpha, n_beta)`` sector."""
    sector = SectorBasis(ham.n_so, n_alpha, n_beta)
    _check_dim(sector)
    if method == "slater-condon":
        m = sector_matrix_slater_condon(ham, sector)
    elif method == "jw":
        if qubit_ham is None:
            qubit_ham = ham.qubit_operator()
        m = sector_matrix_jw(qubit_ham, sector, ham.n_so)
        m = (m.real if not isinstance(m, np.ndarray) else m.real)
    else:
        raise ValueError(f"unknown FCI method {method!r}")
    e, vec = _lowest(m)
    return e, vec, sector


# ---------------------------------------------------------------------------
# dense unitaries and channels


def dense_unitary(factors: Sequence[tuple[Generator, float]], n_qubits: int) -> np.ndarray:
    """Matrix ``prod exp(theta K)`` with the first factor acting first."""
    if n_qubits > MAX_DENSE_QUBITS:
        raise OracleSizeError(f"dense_unitary is capped at {MAX_DENSE_QUBITS} qubits")
    u = np.eye(1 << n_qubits, dtype=complex)
    for gen, theta in factors:
        k = generator_qubit_operator(gen).to_dense(n_qubits)
        u = scipy.linalg.expm(theta * k) @ u
    return u


_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_ONE_Q = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
}


def _embed(op2: np.ndarray, q: int, n: int) -> np.ndarray:
    # qubit 0 is the least significant bit -> rightmost kron factor
    mats = [op2 if k == q else _I2 for k in reversed(range(n))]
    return reduce(np.kron, mats)


def _cnot(c: int, t: int, n: int) -> np.ndarray:
    dim = 1 << n
    m = np.zeros((dim, dim))
    for k in range(dim):
        m[k ^ (((k >> c) & 1) << t), k] = 1.0
    return m


def gate_matrix(gate, n: int) -> np.ndarray:
    if gate.name == "CX":
        return _cnot(*gate.qubits, n)
    if gate.name == "RZ":
        lam = gate.param
        return _embed(np.diag([np.exp(-0.5j * lam), np.exp(0.5j * lam)]), gate.qubits[0], n)
    return _embed(_ONE_Q[gate.name], gate.qubits[0], n)


def _paulis_on(qubits: Sequence[int], n: int) -> list[np.ndarray]:
    singles = [_I2, _X, _Y, _Z]
    out = []
    for code in range(1, 4 ** len(qubits)):
        m = np.eye(1 << n, dtype=complex)
        for j, q in enumerate(qubits):
            d = (code >> (2 * j)) & 3
            if d:
                m = _embed(singles[d], q, n) @ m
        out.append(m)
    return out


def exact_depolarizing_channel(gates, p1: float, p2: float, rho0: np.ndarray) -> np.ndarray:
    """Gate-by-gate density-matrix evolution with depolarizing noise after noisy gates."""
    n = int(rho0.shape[0]).bit_length() - 1
    if n > MAX_CHANNEL_QUBITS:
        raise OracleSizeError(f"exact channel is capped at {MAX_CHANNEL_QUBITS} qubits")
    rho = rho0.astype(complex).copy()
    cache: dict[tuple[int, ...], list[np.ndarray]] = {}
    for gate in gates:
        g = gate_matrix(gate, n)
        rho = g @ rho @ g.conj().T
        if gate.noisy:
            k = len(gate.qubits)
            p = p2 if k == 2 else p1
            if p > 0.0:
                paulis = cache.setdefault(gate.qubits, _paulis_on(gate.qubits, n))
                mixed = sum(P @ rho @ P.conj().T for P in paulis)
                rho = (1.0 - p) * rho + p / (4 ** k - 1) * mixed
    return rho


# ---------------------------------------------------------------------------
# residual bookkeeping over the sector


def determinant_phase(reference: int, det: int) -> int:
    """Sign ``s`` with ``Y_mu |ref> = s |det>`` for the canonical excitation ``ref -> det``."""
    if det == reference:
        return 1
    return apply_string(excitation_string(reference, det), reference)[1]


def full_residual_vector(hbar_ref: np.ndarray, reference: int, sector: SectorBasis) -> np.ndarray:
    """Signed ``<phi_mu|Hbar|phi_0>`` for every sector determinant (phi_0 entry = E_0)."""
    out = np.empty(len(sector))
    for k, det in enumerate(sector.determinants):
        val = determinant_phase(reference, det) * hbar_ref[det]
        out[k] = val.real
    return out
