"""Parameter-noise and gate-noise studies."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..fermion import Excitation
from ..simulator import CompiledCircuit, NoiseSpec, NoisyEstimator, compile, init_reference
from .residuals import PROBE_ANGLE, ResidualEngine
from .vqe import VQEResult, vqe_minimize

CHEMICAL_ACCURACY = 1.6e-3


def gaussian_noise_study(
    energy: Callable[[np.ndarray], float],
    theta_opt: Sequence[float],
    sd: float,
    n_samples: int,
    seed: int,
) -> tuple[float, float]:
    """Mean and sample standard deviation of ``energy`` over ``Normal(theta_opt, sd^2)`` draws."""
    if sd <= 0:
        raise ValueError(f"sd must be positive, got {sd}")
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples, got {n_samples}")
    theta_opt = np.asarray(theta_opt, dtype=float)
    rng = np.random.default_rng(seed)
    draws = rng.normal(theta_opt, sd, size=(n_samples, theta_opt.size))
    values = np.array([energy(t) for t in draws])
    return float(values.mean()), float(values.std(ddof=1))


def plateau_iteration(trace: Sequence[float], band: float = CHEMICAL_ACCURACY) -> int:
    """First index after which every trace value stays within ``band`` of the last one."""
    trace = np.asarray(trace, dtype=float)
    if trace.size == 0:
        raise ValueError("empty trace")
    outside = np.flatnonzero(np.abs(trace - trace[-1]) > band)
    return int(outside[-1] + 1) if outside.size else 0


class NoisyResidualEngine:
    """Measurable-form residuals estimated from noisy trajectories.

    Every expectation value runs the compiled circuit under depolarizing
    noise.  The probe ``Omega_mu`` is prepared by the compiled (and noisy)
    ``exp(pi/4 kappa_mu)`` in front of the ansatz; determinant inputs are
    prepared noiselessly.
    """

    def __init__(self, engine: ResidualEngine, noise: NoiseSpec, n_traj: int, seed: int):
        self.engine = engine
        self.estimator = NoisyEstimator(noise, n_traj, np.random.default_rng(seed))
        self.circuit = compile(engine.ansatz.factors, engine.n_qubits)
        self._probe: dict[Excitation, CompiledCircuit] = {}

    def _probe_circuit(self, mu: Excitation) -> CompiledCircuit:
        if mu not in self._probe:
            self._probe[mu] = compile([mu] + list(self.engine.ansatz.factors), self.engine.n_qubits)
        return self._probe[mu]

    def energy(self, theta: Sequence[float], initial: np.ndarray | None = None) -> float:
        eng = self.engine
        state = eng.phi0 if initial is None else initial
        return self.estimator.expectation(state, self.circuit, theta, eng.hamiltonian, clean=eng.state(theta, state))

    def residual(self, theta: Sequence[float], mu: Excitation, e0: float) -> float:
        eng = self.engine
        probe = self._probe_circuit(mu)
        e_omega = self.estimator.expectation(eng.phi0, probe, [PROBE_ANGLE, *theta], eng.hamiltonian)
        det, _ = eng.determinant(mu)
        e_mu = self.energy(theta, init_reference(eng.n_qubits, det))
        return e_omega - 0.5 * e_mu - 0.5 * e0

    def residual_vector(self, theta: Sequence[float]) -> tuple[np.ndarray, float]:
        eng = self.engine
        theta = np.asarray(theta, dtype=float)
        e0 = self.energy(theta)
        cache: dict[Excitation, float] = {}

        def r(mu):
            if mu not in cache:
                cache[mu] = self.residual(theta, mu, e0)
            return cache[mu]

        out = np.empty(eng.n_params)
        for k, gen in enumerate(eng.ansatz.factors):
            if isinstance(gen, Excitation):
                out[k] = r(gen)
            else:
                out[k] = sum(theta[eng.slot[d]] * s * r(x) for d, x, s in eng.manifold.entries[gen])
        return out, e0


@dataclass
class NoisyRun:
    """Outcome of one optimization under gate noise.

    ``energy_trace`` holds the noisy energy estimate per iteration and
    ``exact_trace`` the noiseless energy of the same parameters.
    """

    method: str
    theta: np.ndarray
    energy_trace: list[float]
    exact_trace: list[float]
    iterations: int
    converged: bool
    trace: list[dict] = field(default_factory=list)

    @property
    def plateau(self) -> int:
        return plateau_iteration(self.exact_trace)


def noisy_pqe(
    engine: ResidualEngine,
    noise: NoiseSpec,
    n_traj: int,
    sweeps: int,
    seed: int,
    scatterer_denominator: str = "bare",
) -> NoisyRun:
    """Fixed number of quasi-Newton sweeps on noisy measurable residuals (no DIIS)."""
    noisy = NoisyResidualEngine(engine, noise, n_traj, seed)
    theta = np.zeros(engine.n_params)
    energies, exact, trace = [], [], []
    start = time.perf_counter()
    for k in range(sweeps):
        r, e0 = noisy.residual_vector(theta)
        energies.append(e0)
        exact.append(engine.energy(theta))
        trace.append({
            "iteration": k,
            "energy": e0,
            "exact_energy": exact[-1],
            "residual_norm": float(np.linalg.norm(r)),
            "wall_time": time.perf_counter() - start,
        })
        theta = theta + r / engine.denominators(theta, scatterer_denominator)
    energies.append(noisy.energy(theta))
    exact.append(engine.energy(theta))
    return NoisyRun("GPQE" if engine.ansatz.scatterers else "PQE", theta, energies, exact, sweeps, True, trace)


def noisy_vqe(
    engine: ResidualEngine,
    noise: NoiseSpec,
    n_traj: int,
    seed: int,
    maxiter: int = 500,
) -> tuple[NoisyRun, VQEResult]:
    """BFGS (restarted on line-search failure) on noisy energies from one seeded trajectory stream."""
    noisy = NoisyResidualEngine(engine, noise, n_traj, seed)
    res = vqe_minimize(noisy.energy, np.zeros(engine.n_params), maxiter=maxiter, restart=True)
    exact = [engine.energy(t) for t in res.iterates]
    for rec, e in zip(res.trace, exact):
        rec["exact_energy"] = e
    return NoisyRun("VQE", res.theta, res.energy_trace, exact, res.iterations, res.converged, res.trace), res


def _pad(traces: Sequence[Sequence[float]]) -> np.ndarray:
    width = max(len(t) for t in traces)
    return np.array([list(t) + [t[-1]] * (width - len(t)) for t in traces])


@dataclass
class DepolarizingComparison:
    """GPQE and VQE runs on one ansatz under the same depolarizing noise.

    ``final_*`` are noisy energy estimates of each run's final parameters made
    with ``final_n_traj`` trajectories; plateaus are read off the run-averaged
    noiseless-energy traces.
    """

    pqe_runs: list[NoisyRun]
    vqe_runs: list[NoisyRun]
    final_pqe: np.ndarray
    final_vqe: np.ndarray

    @property
    def mean_trace_pqe(self) -> np.ndarray:
        return _pad([r.exact_trace for r in self.pqe_runs]).mean(axis=0)

    @property
    def mean_trace_vqe(self) -> np.ndarray:
        return _pad([r.exact_trace for r in self.vqe_runs]).mean(axis=0)

    @property
    def plateau_pqe(self) -> int:
        return plateau_iteration(self.mean_trace_pqe)

    @property
    def plateau_vqe(self) -> int:
        return plateau_iteration(self.mean_trace_vqe)


def depolarizing_comparison(
    engine: ResidualEngine,
    noise: NoiseSpec,
    runs: int,
    seed: int,
    sweeps: int = 15,
    n_traj: int = 500,
    vqe_maxiter: int = 500,
    vqe_n_traj: int = 1,
    final_n_traj: int = 2000,
) -> DepolarizingComparison:
    children = np.random.SeedSequence(seed).spawn(runs)
    pqe_runs, vqe_runs, fin_p, fin_v = [], [], [], []
    for child in children:
        s_pqe, s_vqe, s_fin = (int(v) for v in child.generate_state(3))
        prun = noisy_pqe(engine, noise, n_traj, sweeps, s_pqe)
        vrun, _ = noisy_vqe(engine, noise, vqe_n_traj, s_vqe, maxiter=vqe_maxiter)
        judge = NoisyResidualEngine(engine, noise, final_n_traj, s_fin)
        pqe_runs.append(prun)
        vqe_runs.append(vrun)
        fin_p.append(judge.energy(prun.theta))
        fin_v.append(judge.energy(vrun.theta))
    return DepolarizingComparison(pqe_runs, vqe_runs, np.array(fin_p), np.array(fin_v))
