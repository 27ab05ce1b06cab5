"""Residuals of the similarity-transformed Hamiltonian against the reference."""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

import numpy as np

from ..ansatz import AnsatzSpec, mp_denominator
from ..fermion import ContractedManifold, Excitation, Scatterer, apply_string
from ..hamio import Molecule
from ..oracle import SectorBasis, determinant_phase
from ..simulator import apply_ansatz, apply_exp_generator, expectation, init_reference

IMAG_TOL = 1e-10
PROBE_ANGLE = np.pi / 4


class ConventionError(ValueError):
    """A residual came out complex: the phase convention is broken."""


class ResidualEngine:
    """Evaluates energies and residuals of one ansatz on one molecule.

    The residual vector is ordered like the ansatz factors: one entry per
    excitation (projective condition on its own determinant) and one per
    scatterer (projection on its contracted manifold row).
    """

    def __init__(self, mol: Molecule, ansatz: AnsatzSpec, manifold: ContractedManifold | None = None):
        self.mol = mol
        self.ansatz = ansatz
        self.manifold = manifold or ContractedManifold()
        self.n_qubits = mol.n_qubits
        self.reference = mol.reference.occupation
        self.hamiltonian = mol.qubit_hamiltonian
        self.phi0 = init_reference(self.n_qubits, self.reference)
        self.slot = {g: k for k, g in enumerate(ansatz.factors)}
        missing = [a for a in ansatz.scatterers if a not in self.manifold.entries]
        if missing:
            raise ValueError(f"scatterers without a manifold row: {', '.join(map(str, missing))}")
        for alpha in ansatz.scatterers:
            for dbl, _, _ in self.manifold.entries[alpha]:
                if dbl not in self.slot:
                    raise ValueError(f"manifold row of {alpha} uses {dbl}, which is not in the ansatz")
        self._dets: dict[Excitation, tuple[int, int]] = {}

    @property
    def n_params(self) -> int:
        return len(self.ansatz)

    def determinant(self, exc: Excitation) -> tuple[int, int]:
        """``(det, s)`` with ``Y_mu |phi_0> = s |det>``."""
        if exc not in self._dets:
            hit = apply_string(exc.ops, self.reference)
            if hit is None:
                raise ValueError(f"{exc} annihilates the reference")
            self._dets[exc] = hit
        return self._dets[exc]

    def factors(self, theta: Sequence[float]):
        return self.ansatz.with_theta(theta)

    def state(self, theta: Sequence[float], initial: np.ndarray | None = None) -> np.ndarray:
        return apply_ansatz(self.phi0 if initial is None else initial, self.factors(theta))

    def energy(self, theta: Sequence[float]) -> float:
        return expectation(self.state(theta), self.hamiltonian)

    def hbar_on_reference(self, theta: Sequence[float]) -> np.ndarray:
        """``U^dagger H U |phi_0>``."""
        psi = self.state(theta)
        return apply_ansatz(self.hamiltonian.apply(psi), self.factors(theta), adjoint=True)

    # -- direct (amplitude) route ---------------------------------------

    def _signed(self, hbar: np.ndarray, exc: Excitation) -> float:
        det, s = self.determinant(exc)
        val = s * hbar[det]
        if abs(val.imag) > IMAG_TOL:
            raise ConventionError(f"residual of {exc} has imaginary part {val.imag:.3e}")
        return float(val.real)

    def residual_direct(self, theta: Sequence[float], mu: Excitation, hbar: np.ndarray | None = None) -> float:
        if hbar is None:
            hbar = self.hbar_on_reference(theta)
        return self._signed(hbar, mu)

    def scatterer_residual(
        self,
        theta: Sequence[float],
        alpha: Scatterer,
        path: str = "direct",
        hbar: np.ndarray | None = None,
    ) -> float:
        """``sum_I theta_I * sign * r_X`` over the manifold row of ``alpha``."""
        row = self.manifold.entries.get(alpha)
        if not row:
            raise ValueError(f"{alpha} is inert and has no residual")
        if path == "direct" and hbar is None:
            hbar = self.hbar_on_reference(theta)
        e0 = self.energy(theta) if path == "measurable" else None
        total = 0.0
        for dbl, triple, sign in row:
            w = theta[self.slot[dbl]]
            if w == 0.0:
                continue
            if path == "direct":
                r_x = self._signed(hbar, triple)
            else:
                r_x = self.residual_measurable(theta, triple, e0=e0)
            total += w * sign * r_x
        return total

    # -- measurable (three diagonal terms) route -------------------------

    def residual_measurable(self, theta: Sequence[float], mu: Excitation, e0: float | None = None) -> float:
        """``<Omega|Hbar|Omega> - E_mu/2 - E_0/2`` with ``Omega = exp(pi/4 kappa_mu)|phi_0>``."""
        if e0 is None:
            e0 = self.energy(theta)
        omega = apply_exp_generator(self.phi0, mu, PROBE_ANGLE)
        e_omega = expectation(self.state(theta, omega), self.hamiltonian)
        det, _ = self.determinant(mu)
        e_mu = expectation(self.state(theta, init_reference(self.n_qubits, det)), self.hamiltonian)
        return e_omega - 0.5 * e_mu - 0.5 * e0

    # -- whole vectors -----------------------------------------------------

    def residual_vector(self, theta: Sequence[float], path: str = "direct") -> tuple[np.ndarray, float, np.ndarray | None]:
        """Residuals in factor order, the energy and (direct path) ``Hbar|phi_0>``."""
        theta = np.asarray(theta, dtype=float)
        r = np.empty(self.n_params)
        if path == "direct":
            hbar = self.hbar_on_reference(theta)
            energy = float(hbar[self.reference].real)
            for k, gen in enumerate(self.ansatz.factors):
                if isinstance(gen, Excitation):
                    r[k] = self._signed(hbar, gen)
                else:
                    r[k] = self.scatterer_residual(theta, gen, hbar=hbar)
            return r, energy, hbar
        if path != "measurable":
            raise ValueError(f"unknown residual path {path!r}")
        energy = self.energy(theta)
        cache: dict[Excitation, float] = {}

        def rmeas(mu):
            if mu not in cache:
                cache[mu] = self.residual_measurable(theta, mu, e0=energy)
            return cache[mu]

        for k, gen in enumerate(self.ansatz.factors):
            if isinstance(gen, Excitation):
                r[k] = rmeas(gen)
            else:
                r[k] = sum(theta[self.slot[d]] * s * rmeas(x) for d, x, s in self.manifold.entries[gen])
        return r, energy, None

    # -- denominators and diagnostics ------------------------------------------

    def denominators(self, theta: Sequence[float] | None = None, scatterer_mode: str = "bare") -> np.ndarray:
        """Quasi-Newton preconditioner per parameter.

        ``bare`` uses the scatterer's own destroyed-minus-created orbital
        energies; ``contracted`` uses the diagonal of the contracted
        determinant, ``sum_I theta_I^2 D_X`` over the manifold row.
        """
        eps = self.mol.reference.eps
        d = np.empty(self.n_params)
        for k, gen in enumerate(self.ansatz.factors):
            if isinstance(gen, Scatterer) and scatterer_mode == "contracted":
                if theta is None:
                    raise ValueError("contracted scatterer denominators need theta")
                val = sum(
                    theta[self.slot[dbl]] ** 2 * mp_denominator(x, eps, level_shift=False)
                    for dbl, x, _ in self.manifold.entries[gen]
                )
                d[k] = val if abs(val) > 1e-8 else mp_denominator(gen, eps)
            elif scatterer_mode not in ("bare", "contracted"):
                raise ValueError(f"unknown scatterer denominator mode {scatterer_mode!r}")
            else:
                d[k] = mp_denominator(gen, eps)
        return d

    @cached_property
    def sector(self) -> SectorBasis:
        ref = self.mol.reference
        return SectorBasis(self.n_qubits, ref.n_alpha, ref.n_beta)

    @cached_property
    def _diagnostic_dets(self) -> tuple[np.ndarray, np.ndarray]:
        enforced = {self.determinant(g)[0] for g in self.ansatz.excitations}
        enforced.add(self.reference)
        dets = [d for d in self.sector.determinants if d not in enforced]
        signs = [determinant_phase(self.reference, d) for d in dets]
        return np.array(dets, dtype=np.int64), np.array(signs, dtype=float)

    def gershgorin_radius(self, hbar: np.ndarray) -> float:
        """Sum of |residual| over sector determinants not enforced by an excitation."""
        dets, _ = self._diagnostic_dets
        return float(np.abs(hbar[dets]).sum())
