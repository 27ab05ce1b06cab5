"""PQE/GPQE residual solvers, the VQE baseline and parameter-noise studies."""

from ..ansatz import mp_denominator
from .diis import diis_extrapolate
from .pqe import ConvergenceReport, DivergenceError, SolverState, iterate, solve
from .residuals import ConventionError, ResidualEngine

__all__ = [
    "ConvergenceReport",
    "ConventionError",
    "DivergenceError",
    "ResidualEngine",
    "SolverState",
    "diis_extrapolate",
    "iterate",
    "mp_denominator",
    "solve",
]
