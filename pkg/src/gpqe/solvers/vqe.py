"""VQE baseline: BFGS on the ansatz energy with central-difference gradients."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

FD_STEP = 1e-6
GTOL = 1e-7
MAXITER = 500


@dataclass
class VQEResult:
    theta: np.ndarray
    energy: float
    converged: bool
    iterations: int
    n_evaluations: int
    message: str
    trace: list[dict] = field(default_factory=list)
    iterates: list[np.ndarray] = field(default_factory=list)

    @property
    def energy_trace(self) -> list[float]:
        return [rec["energy"] for rec in self.trace]


def central_gradient(fun: Callable[[np.ndarray], float], x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (fun(x + e) - fun(x - e)) / (2.0 * step)
    return g


def vqe_minimize(
    energy: Callable[[np.ndarray], float],
    theta0: Sequence[float],
    step: float = FD_STEP,
    gtol: float = GTOL,
    maxiter: int = MAXITER,
    restart: bool = False,
    on_record: Callable[[dict], None] | None = None,
) -> VQEResult:
    """Minimize ``energy`` with BFGS.

    ``energy`` may be stochastic (noisy trajectories); every call is treated
    as a fresh measurement.  With ``restart=True`` a BFGS run that stops on a
    failed line search is restarted (identity Hessian) from the best iterate
    until ``maxiter`` iterations are spent; each failed attempt counts as one
    iteration.  Unless ``gtol`` is met the lowest-energy iterate seen is
    returned with ``converged=False``.
    """
    x = np.array(theta0, dtype=float)
    calls = 0
    start = time.perf_counter()

    def fun(z):
        nonlocal calls
        calls += 1
        return energy(z)

    trace: list[dict] = []
    iterates: list[tuple[float, np.ndarray]] = []

    def record(z, e):
        rec = {"iteration": len(trace), "energy": float(e), "wall_time": time.perf_counter() - start}
        trace.append(rec)
        iterates.append((float(e), np.array(z)))
        if on_record is not None:
            on_record(rec)

    def callback(intermediate_result):
        # scipy passes the OptimizeResult only to a parameter with this exact name
        record(intermediate_result.x, intermediate_result.fun)

    record(x, fun(x))
    spent = 0
    while True:
        before = len(trace)
        res = scipy.optimize.minimize(
            fun,
            x,
            jac=lambda z: central_gradient(fun, z, step),
            method="BFGS",
            callback=callback,
            options={"gtol": gtol, "maxiter": maxiter - spent, "norm": np.inf},
        )
        if len(trace) == before:
            record(res.x, res.fun)
        spent += len(trace) - before
        if res.success or not restart or spent >= maxiter:
            break
        x = min(iterates, key=lambda t: t[0])[1]
    if res.success:
        theta, e = np.array(res.x), float(res.fun)
    else:
        e, theta = min(iterates, key=lambda t: t[0])
    return VQEResult(theta, e, bool(res.success), spent, calls, str(res.message), trace, [t for _, t in iterates])
