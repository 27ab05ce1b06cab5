"""Dense statevector engine.

States are plain complex numpy arrays of length ``2**n``; basis index bit ``q``
set means spinorbital ``q`` is occupied (qubit ``q`` in ``|1>``).

Exponentials ``exp(theta * (Y - Y^dagger))`` are applied exactly as two-level
rotations between the determinant pairs connected by ``Y``.  The compiled
Pauli-rotation circuit is used only for gate accounting and for placing noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from .fermion import Generator, connections, generator_qubit_operator
from .pauli import QubitOperator, popcount


class NonHermitianError(ValueError):
    pass


def init_reference(n_qubits: int, occupation: int) -> np.ndarray:
    if not 0 <= occupation < (1 << n_qubits):
        raise ValueError(f"occupation {occupation:#b} does not fit in {n_qubits} qubits")
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[occupation] = 1.0
    return psi


def n_qubits_of(state: np.ndarray) -> int:
    return int(state.shape[0]).bit_length() - 1


def apply_exp_generator(state: np.ndarray, gen: Generator, theta: float, adjoint: bool = False) -> np.ndarray:
    """Return ``exp(+-theta (Y - Y^dagger)) state``."""
    if adjoint:
        theta = -theta
    out = state.copy()
    if theta == 0.0:
        return out
    src, dst, sgn = connections(gen.ops, n_qubits_of(state))
    c, s = np.cos(theta), np.sin(theta)
    a = state[src]
    b = state[dst]
    out[src] = c * a - sgn * s * b
    out[dst] = sgn * s * a + c * b
    return out


def apply_ansatz(state: np.ndarray, factors: Iterable[tuple[Generator, float]], adjoint: bool = False) -> np.ndarray:
    """Apply factors in list order (first factor acts first on the ket).

    ``adjoint=True`` applies the inverse: reversed order with negated angles.
    """
    factors = list(factors)
    if adjoint:
        factors = factors[::-1]
    for gen, theta in factors:
        state = apply_exp_generator(state, gen, theta, adjoint)
    return state


def apply_qubit_operator(state: np.ndarray, op: QubitOperator) -> np.ndarray:
    return op.apply(state)


def _check_hermitian(op: QubitOperator) -> None:
    flag = op.__dict__.get("_hermitian")
    if flag is None:
        flag = op.is_hermitian(1e-10)
        op.__dict__["_hermitian"] = flag
    if not flag:
        raise NonHermitianError("expectation() requires a hermitian operator")


def expectation(state: np.ndarray, op: QubitOperator, hpsi: np.ndarray | None = None) -> float:
    _check_hermitian(op)
    if hpsi is None:
        hpsi = op.apply(state)
    val = np.vdot(state, hpsi)
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise NonHermitianError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def amplitude(state: np.ndarray, det: int) -> complex:
    return complex(state[det])


# ---------------------------------------------------------------------------
# compilation to Pauli rotations and gates


@dataclass(frozen=True)
class Rotation:
    """``exp(i * theta_slot * weight * P)`` with hermitian Pauli ``P`` (Y = iXZ)."""

    x_mask: int
    z_mask: int
    weight: float
    slot: int

    @property
    def support(self) -> list[int]:
        m = self.x_mask | self.z_mask
        return [q for q in range(m.bit_length()) if (m >> q) & 1]

    @property
    def pauli_weight(self) -> int:
        return popcount(self.x_mask | self.z_mask)

    @property
    def cnots(self) -> int:
        return 2 * (self.pauli_weight - 1) if self.pauli_weight >= 1 else 0


@dataclass(frozen=True)
class Gate:
    name: str  # H, S, SDG, CX, RZ
    qubits: tuple[int, ...]
    param: float = 0.0
    noisy: bool = False


def rotation_gates(rot: Rotation, theta: float) -> list[Gate]:
    """Staircase decomposition of ``exp(i theta w P)``.

    Basis change to Z on every support qubit, CNOT ladder, one RZ on the last
    support qubit, ladder back, basis change back.  Every gate is
    noise-bearing.
    """
    phi = theta * rot.weight
    qs = rot.support
    pre, post = [], []
    for q in qs:
        xb, zb = (rot.x_mask >> q) & 1, (rot.z_mask >> q) & 1
        if xb and zb:  # Y: S^dagger then H maps Y -> Z
            pre += [Gate("SDG", (q,), noisy=True), Gate("H", (q,), noisy=True)]
            post = [Gate("H", (q,), noisy=True), Gate("S", (q,), noisy=True)] + post
        elif xb:
            pre.append(Gate("H", (q,), noisy=True))
            post = [Gate("H", (q,), noisy=True)] + post
    ladder = [Gate("CX", (qs[k], qs[k + 1]), noisy=True) for k in range(len(qs) - 1)]
    # exp(i phi Z...Z) = RZ(-2 phi) in the exp(-i lambda Z / 2) convention
    rz = Gate("RZ", (qs[-1],), -2.0 * phi, noisy=True)
    return pre + ladder + [rz] + ladder[::-1] + post


@dataclass
class CompiledCircuit:
    rotations: list[Rotation]
    n_qubits: int
    n_factors: int

    @property
    def rotation_count(self) -> int:
        return len(self.rotations)

    @property
    def cnot_count(self) -> int:
        return sum(r.cnots for r in self.rotations)

    @property
    def single_qubit_count(self) -> int:
        return len(self.rotations)

    def gates(self, thetas: Sequence[float]) -> list[Gate]:
        out: list[Gate] = []
        for rot in self.rotations:
            out += rotation_gates(rot, thetas[rot.slot])
        return out

    @cached_property
    def noise_layout(self) -> tuple[np.ndarray, np.ndarray]:
        """Per noise slot: owning rotation index and whether it is a 2-qubit gate."""
        owner, two = [], []
        for r, rot in enumerate(self.rotations):
            noisy = [g for g in rotation_gates(rot, 0.0) if g.noisy]
            owner += [r] * len(noisy)
            two += [len(g.qubits) == 2 for g in noisy]
        return np.array(owner, dtype=np.int64), np.array(two, dtype=bool)

    def summary(self) -> dict:
        hist: dict[int, int] = {}
        for r in self.rotations:
            hist[r.pauli_weight] = hist.get(r.pauli_weight, 0) + 1
        return {
            "n_qubits": self.n_qubits,
            "factors": self.n_factors,
            "rotations": self.rotation_count,
            "cnots": self.cnot_count,
            "weight_histogram": dict(sorted(hist.items())),
        }


def _rotations_for(gen: Generator, slot: int) -> list[Rotation]:
    kappa = generator_qubit_operator(gen)
    rots = []
    for term, c in sorted(kappa.hermitian_terms(), key=lambda tc: (tc[0].x_mask, tc[0].z_mask)):
        # kappa = sum_k i a_k P_k with real a_k
        a = (c / 1j)
        assert abs(a.imag) < 1e-12, "generator image is not anti-hermitian"
        rots.append(Rotation(term.x_mask, term.z_mask, float(a.real), slot))
    return rots


def compile(generators: Sequence[Generator] | Sequence[tuple[Generator, float]], n_qubits: int) -> CompiledCircuit:
    """Expand each factor's JW image into commuting Pauli rotations."""
    gens = [g[0] if isinstance(g, tuple) else g for g in generators]
    rotations: list[Rotation] = []
    for slot, gen in enumerate(gens):
        rotations += _rotations_for(gen, slot)
    return CompiledCircuit(rotations, n_qubits, len(gens))


# ---------------------------------------------------------------------------
# gate-level statevector kernels

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])
_SDG = np.diag([1, -1j])
_PAULI_1Q = [(1, 0), (1, 1), (0, 1)]  # X, Y, Z as (x, z) bits


def _apply_1q(psi: np.ndarray, q: int, u: np.ndarray) -> None:
    view = psi.reshape(-1, 2, 1 << q)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    view[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1


def _apply_cx(psi: np.ndarray, c: int, t: int) -> None:
    idx = np.arange(psi.shape[0], dtype=np.int64)
    sel = idx[((idx >> c) & 1 == 1) & ((idx >> t) & 1 == 0)]
    other = sel | (1 << t)
    psi[sel], psi[other] = psi[other].copy(), psi[sel].copy()


def apply_gate(psi: np.ndarray, gate: Gate) -> None:
    """In-place gate application."""
    if gate.name == "H":
        _apply_1q(psi, gate.qubits[0], _H)
    elif gate.name == "S":
        _apply_1q(psi, gate.qubits[0], _S)
    elif gate.name == "SDG":
        _apply_1q(psi, gate.qubits[0], _SDG)
    elif gate.name == "RZ":
        lam = gate.param
        _apply_1q(psi, gate.qubits[0], np.diag([np.exp(-0.5j * lam), np.exp(0.5j * lam)]))
    elif gate.name == "CX":
        _apply_cx(psi, *gate.qubits)
    else:
        raise ValueError(f"unknown gate {gate.name}")


@lru_cache(maxsize=8192)
def _pauli_action(x_mask: int, z_mask: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    src = np.arange(dim, dtype=np.int64) ^ x_mask
    phase = _string_phase(src, z_mask) * 1j ** (popcount(x_mask & z_mask) % 4)
    src.setflags(write=False)
    phase.setflags(write=False)
    return src, phase


def apply_pauli(psi: np.ndarray, x_mask: int, z_mask: int) -> np.ndarray:
    """Hermitian Pauli string (Y = iXZ convention) applied to ``psi`` (1-D, or columns of 2-D)."""
    src, phase = _pauli_action(x_mask, z_mask, psi.shape[0])
    if psi.ndim == 2:
        phase = phase[:, None]
    return phase * psi[src]


def apply_rotation(psi: np.ndarray, rot: Rotation, theta: float) -> np.ndarray:
    """``exp(i theta w P) psi = cos(phi) psi + i sin(phi) P psi``."""
    phi = theta * rot.weight
    if phi == 0.0:
        return psi
    src, phase = _pauli_action(rot.x_mask, rot.z_mask, psi.shape[0])
    if psi.ndim == 2:
        phase = phase[:, None]
    return np.cos(phi) * psi + (1j * np.sin(phi)) * phase * psi[src]


def _string_phase(src: np.ndarray, z_mask: int) -> np.ndarray:
    par = np.zeros(src.shape[0], dtype=np.int64)
    m = src & z_mask
    for _ in range(z_mask.bit_length()):
        par ^= m & 1
        m >>= 1
    return 1.0 - 2.0 * par


def _apply_error(psi: np.ndarray, qubits: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Uniform non-identity Pauli on ``qubits``."""
    k = len(qubits)
    code = int(rng.integers(1, 4 ** k))
    x = z = 0
    for j, q in enumerate(qubits):
        d = (code >> (2 * j)) & 3
        if d == 0:
            continue
        xb, zb = _PAULI_1Q[d - 1]
        x |= xb << q
        z |= zb << q
    return apply_pauli(psi, x, z)


# ---------------------------------------------------------------------------
# noisy trajectories


@dataclass(frozen=True)
class NoiseSpec:
    p1: float = 0.0
    p2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"noise probability {name}={v} outside [0, 1]")

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0


def sample_error_slots(circuit: CompiledCircuit, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Indices of the noise slots hit by an error in one trajectory."""
    _, two = circuit.noise_layout
    prob = np.where(two, noise.p2, noise.p1)
    return np.flatnonzero(rng.random(prob.shape[0]) < prob)


def simulate_with_errors(
    state: np.ndarray,
    circuit: CompiledCircuit,
    thetas: Sequence[float],
    error_slots: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Run ``circuit`` with Pauli errors after the given noise slots.

    Rotations without an error use the exact rotation; a rotation hit by an
    error is expanded to gates so the error lands at its place in the ladder.
    """
    owner, _ = circuit.noise_layout
    hits: dict[int, set[int]] = {}
    if len(error_slots):
        starts = np.searchsorted(owner, np.arange(len(circuit.rotations)))
        for s in error_slots:
            r = int(owner[s])
            hits.setdefault(r, set()).add(int(s - starts[r]))
    psi = state.copy()
    for r, rot in enumerate(circuit.rotations):
        theta = thetas[rot.slot]
        if r not in hits:
            psi = apply_rotation(psi, rot, theta)
            continue
        local = hits[r]
        k = 0
        for gate in rotation_gates(rot, theta):
            apply_gate(psi, gate)
            if gate.noisy:
                if k in local:
                    psi = _apply_error(psi, gate.qubits, rng)
                k += 1
    return psi


def run_gate_trajectory(
    gates: Sequence[Gate], noise: NoiseSpec, state: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One trajectory of an explicit gate list; noisy gates draw a depolarizing error."""
    psi = state.astype(complex, copy=True)
    for gate in gates:
        apply_gate(psi, gate)
        if gate.noisy:
            p = noise.p2 if len(gate.qubits) == 2 else noise.p1
            if rng.random() < p:
                psi = _apply_error(psi, gate.qubits, rng)
    return psi


def run_trajectory(
    factors: Sequence[tuple[Generator, float]],
    noise: NoiseSpec,
    seed: int | None = None,
    state: np.ndarray | None = None,
    n_qubits: int | None = None,
) -> np.ndarray:
    """One pure-state trajectory of the compiled ansatz under depolarizing noise."""
    if state is None:
        if n_qubits is None:
            raise ValueError("run_trajectory needs an initial state or n_qubits")
        state = init_reference(n_qubits, 0)
    circuit = compile([g for g, _ in factors], n_qubits_of(state))
    thetas = [t for _, t in factors]
    rng = np.random.default_rng(noise.seed if seed is None else seed)
    slots = sample_error_slots(circuit, noise, rng)
    return simulate_with_errors(state, circuit, thetas, slots, rng)


def _conjugate(x: int, z: int, gate: Gate) -> tuple[int, int]:
    """Pauli bits of ``g P g^dagger`` for a Clifford gate (sign dropped)."""
    if gate.name == "H":
        q = gate.qubits[0]
        xb, zb = (x >> q) & 1, (z >> q) & 1
        x = (x & ~(1 << q)) | (zb << q)
        z = (z & ~(1 << q)) | (xb << q)
    elif gate.name in ("S", "SDG"):
        q = gate.qubits[0]
        z ^= ((x >> q) & 1) << q
    elif gate.name == "CX":
        c, t = gate.qubits
        x ^= ((x >> c) & 1) << t
        z ^= ((z >> t) & 1) << c
    else:
        raise ValueError(f"{gate.name} is not a Clifford gate")
    return x, z


def _error_paulis(qubits: Sequence[int]) -> list[tuple[int, int]]:
    out = []
    for code in range(1, 4 ** len(qubits)):
        x = z = 0
        for j, q in enumerate(qubits):
            d = (code >> (2 * j)) & 3
            if d:
                xb, zb = _PAULI_1Q[d - 1]
                x |= xb << q
                z |= zb << q
        out.append((x, z))
    return out


def propagated_errors(rot: Rotation) -> list[tuple[bool, list[tuple[int, int]]]]:
    """Per noise slot of ``rot``: ``(before, paulis)``.

    A Pauli ``E`` inserted after gate ``k`` of the staircase equals (up to a
    global phase) ``U E'`` or ``E'' U`` with ``U`` the exact rotation:
    errors before the RZ are pulled back through the Clifford prefix
    (``before=True``), errors at or after the RZ are pushed through the
    Clifford suffix.  Each list holds the uniform error choices already mapped.
    """
    gates = rotation_gates(rot, 0.0)
    rz_at = next(k for k, g in enumerate(gates) if g.name == "RZ")
    out = []
    for k, gate in enumerate(gates):
        if not gate.noisy:
            continue
        mapped = []
        for x, z in _error_paulis(gate.qubits):
            if k < rz_at:
                for g in reversed(gates[: k + 1]):
                    x, z = _conjugate(x, z, g)
            else:
                for g in gates[k + 1:]:
                    x, z = _conjugate(x, z, g)
            mapped.append((x, z))
        out.append((k < rz_at, mapped))
    return out


@dataclass
class NoisyEstimator:
    """Trajectory-averaged expectation values of a compiled circuit.

    Error-free trajectories all equal the noiseless state, so only the
    corrupted ones are simulated.  Those run together as the columns of one
    matrix, with each error replaced by its propagated Pauli before or after
    the exact rotation (see ``propagated_errors``).  The average has exactly
    the distribution of the mean of ``n_traj`` independent trajectories.
    """

    noise: NoiseSpec
    n_traj: int = 1
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be positive, got {self.n_traj}")
        self._tables: dict[int, list] = {}

    def _table(self, circuit: CompiledCircuit) -> list[tuple[int, bool, list[tuple[int, int]]]]:
        key = id(circuit)
        if key not in self._tables:
            flat = []
            for r, rot in enumerate(circuit.rotations):
                for before, paulis in propagated_errors(rot):
                    flat.append((r, before, paulis))
            self._tables[key] = (circuit, flat)
        return self._tables[key][1]

    def sample_events(self, circuit: CompiledCircuit) -> dict[int, dict[int, list[tuple[bool, int, int]]]]:
        """``{trajectory: {rotation: [(before, x, z), ...]}}`` for corrupted trajectories."""
        table = self._table(circuit)
        _, two = circuit.noise_layout
        prob = np.where(two, self.noise.p2, self.noise.p1)
        counts = self.rng.binomial(self.n_traj, prob)
        events: dict[int, dict[int, list]] = {}
        for slot in np.flatnonzero(counts):
            r, before, paulis = table[slot]
            trajs = self.rng.choice(self.n_traj, size=counts[slot], replace=False)
            picks = self.rng.integers(0, len(paulis), size=counts[slot])
            for t, c in zip(trajs, picks):
                events.setdefault(int(t), {}).setdefault(r, []).append((before, *paulis[c]))
        return events

    def expectation(
        self,
        state: np.ndarray,
        circuit: CompiledCircuit,
        thetas: Sequence[float],
        op: QubitOperator,
        clean: np.ndarray | None = None,
    ) -> float:
        events = self.sample_events(circuit)
        n_bad = len(events)
        total = 0.0
        if n_bad < self.n_traj:
            if clean is None:
                clean = state
                for rot in circuit.rotations:
                    clean = apply_rotation(clean, rot, thetas[rot.slot])
            total += (self.n_traj - n_bad) * expectation(clean, op)
        if n_bad:
            cols = list(events.values())
            psi = np.repeat(state[:, None], n_bad, axis=1).astype(complex)
            by_rot: dict[int, list[tuple[int, bool, int, int]]] = {}
            for j, ev in enumerate(cols):
                for r, errs in ev.items():
                    by_rot.setdefault(r, []).extend((j, *e) for e in errs)
            for r, rot in enumerate(circuit.rotations):
                errs = by_rot.get(r, ())
                for j, before, x, z in errs:
                    if before:
                        psi[:, j] = apply_pauli(psi[:, j], x, z)
                psi = apply_rotation(psi, rot, thetas[rot.slot])
                for j, before, x, z in errs:
                    if not before:
                        psi[:, j] = apply_pauli(psi[:, j], x, z)
            hpsi = op.apply(psi)
            total += float(np.einsum("ij,ij->", psi.conj(), hpsi).real)
        return total / self.n_traj
