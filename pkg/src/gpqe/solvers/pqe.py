"""Projective quantum eigensolver sweeps (PQE and GPQE)."""

from __future__ import annotations

import json
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .diis import diis_extrapolate
from .residuals import ResidualEngine

log = logging.getLogger(__name__)

TOLERANCE = 1e-6
MAX_SWEEPS = 200
DIIS_DEPTH = 6
DIVERGENCE_STREAK = 5
MODES = ("PQE", "GPQE")


class DivergenceError(RuntimeError):
    """The residual norm grew for too many consecutive sweeps."""

    def __init__(self, message: str, trace: list[dict]):
        super().__init__(message)
        self.trace = trace


@dataclass
class SolverState:
    theta: np.ndarray
    residuals: np.ndarray
    energy: float
    iteration: int = 0
    history: deque = field(default_factory=lambda: deque(maxlen=DIIS_DEPTH))
    hbar: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def initial(cls, n_params: int, diis_depth: int = DIIS_DEPTH, theta0: Sequence[float] | None = None) -> SolverState:
        theta = np.zeros(n_params) if theta0 is None else np.array(theta0, dtype=float)
        if theta.shape != (n_params,):
            raise ValueError(f"theta0 has {theta.size} entries, ansatz has {n_params} parameters")
        return cls(theta, np.full(n_params, np.nan), np.nan, 0, deque(maxlen=max(diis_depth, 1)))

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residuals))


@dataclass
class ConvergenceReport:
    converged: bool
    final_residual_norm: float
    iterations: int
    energy_trace: list[float]
    gershgorin_radius: float
    theta: np.ndarray
    energy: float
    residual_trace: list[float] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)

    def write_trace(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.trace:
                fh.write(json.dumps(rec) + "\n")


def _check_mode(engine: ResidualEngine, mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "PQE" and engine.ansatz.scatterers:
        raise ValueError("PQE mode given an ansatz with scatterers; use GPQE")


def iterate(
    state: SolverState,
    engine: ResidualEngine,
    mode: str = "PQE",
    use_diis: bool = True,
    scatterer_denominator: str = "bare",
    residual_path: str = "direct",
) -> SolverState:
    """One simultaneous quasi-Newton sweep followed by DIIS extrapolation.

    The returned state carries the residuals and energy evaluated at the
    *incoming* parameters together with the updated parameters.
    """
    _check_mode(engine, mode)
    r, energy, hbar = engine.residual_vector(state.theta, path=residual_path)
    denom = engine.denominators(state.theta, scatterer_denominator)
    theta = state.theta + r / denom
    history = deque(state.history, maxlen=state.history.maxlen)
    if use_diis:
        history.append((theta, r))
        if len(history) >= 2:
            theta = diis_extrapolate(list(history))
    return SolverState(theta, r, energy, state.iteration + 1, history, hbar)


def solve(
    engine: ResidualEngine,
    mode: str = "PQE",
    tol: float = TOLERANCE,
    max_sweeps: int = MAX_SWEEPS,
    use_diis: bool = True,
    diis_depth: int = DIIS_DEPTH,
    scatterer_denominator: str = "bare",
    theta0: Sequence[float] | None = None,
    on_record: Callable[[dict], None] | None = None,
) -> ConvergenceReport:
    """Iterate until the 2-norm of the residual vector drops below ``tol``."""
    _check_mode(engine, mode)
    state = SolverState.initial(engine.n_params, diis_depth, theta0)
    trace: list[dict] = []
    energies: list[float] = []
    norms: list[float] = []
    streak = 0
    start = time.perf_counter()
    converged = False
    radius = float("nan")
    while True:
        theta_in = state.theta
        if state.iteration >= max_sweeps:
            r, energy, hbar = engine.residual_vector(theta_in)
            radius = engine.gershgorin_radius(hbar)
            norm = float(np.linalg.norm(r))
            converged = norm < tol
            energies.append(energy)
            norms.append(norm)
            break
        state = iterate(state, engine, mode, use_diis, scatterer_denominator)
        radius = engine.gershgorin_radius(state.hbar)
        norm = state.residual_norm
        rec = {
            "iteration": state.iteration - 1,
            "energy": state.energy,
            "residual_norm": norm,
            "gershgorin_radius": radius,
            "wall_time": time.perf_counter() - start,
        }
        trace.append(rec)
        if on_record is not None:
            on_record(rec)
        streak = streak + 1 if norms and norm > norms[-1] else 0
        energies.append(state.energy)
        norms.append(norm)
        if norm < tol:
            # residuals belong to theta_in: report that point, not the extrapolated one
            converged = True
            state.theta = theta_in
            break
        if not np.isfinite(norm) or streak >= DIVERGENCE_STREAK:
            raise DivergenceError(
                f"residual norm increased for {streak} consecutive sweeps (now {norm:.3e})", trace
            )
    return ConvergenceReport(
        converged=converged,
        final_residual_norm=norms[-1],
        iterations=len(trace),
        energy_trace=energies,
        gershgorin_radius=radius,
        theta=np.array(state.theta),
        energy=energies[-1],
        residual_trace=norms,
        trace=trace,
    )
