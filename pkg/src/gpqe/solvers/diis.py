"""Pulay DIIS over parameter vectors."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)


def diis_extrapolate(history: Sequence[tuple[np.ndarray, np.ndarray]], cond_limit: float = 1e14) -> np.ndarray:
    """Extrapolate from ``(vector, error)`` pairs; coefficients sum to one.

    Falls back to the newest vector when fewer than two entries exist or the
    bordered B-matrix is too ill-conditioned.
    """
    if len(history) < 2:
        return np.array(history[-1][0], copy=True)
    vecs = np.array([h[0] for h in history])
    errs = np.array([h[1] for h in history])
    n = len(history)
    b = np.empty((n + 1, n + 1))
    b[:n, :n] = errs @ errs.T
    b[n, :n] = b[:n, n] = -1.0
    b[n, n] = 0.0
    scale = np.abs(np.diag(b)[:n]).max()
    if scale > 0:
        b[:n, :n] /= scale
    rhs = np.zeros(n + 1)
    rhs[n] = -1.0
    if scale == 0 or np.linalg.cond(b) > cond_limit:
        log.info("DIIS B-matrix singular (cond > %.1e); plain update used", cond_limit)
        return np.array(history[-1][0], copy=True)
    coeff = np.linalg.solve(b, rhs)[:n]
    return coeff @ vecs
