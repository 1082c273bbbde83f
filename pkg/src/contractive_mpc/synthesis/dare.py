"""Discrete algebraic Riccati equation by fixed-point iteration."""

from __future__ import annotations

import numpy as np

from ..errors import DareDivergenceError
from ..systems import LinearSystem


def riccati_map(sys: LinearSystem, Q, R, P) -> np.ndarray:
    A, B = sys.A, sys.B
    S = R + B.T @ P @ B
    nxt = A.T @ P @ A + Q - A.T @ P @ B @ np.linalg.solve(S, B.T @ P @ A)
    return 0.5 * (nxt + nxt.T)


def solve_dare(sys: LinearSystem, Q, R, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Iterate ``P <- A'PA + Q - A'PB (R + B'PB)^{-1} B'PA`` from ``P = Q``.

    Stops when the infinity-norm update is at most ``tol``; raises
    :class:`DareDivergenceError` on blow-up or when ``max_iter`` is reached.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    P = 0.5 * (Q + Q.T)
    for _ in range(max_iter):
        try:
            nxt = riccati_map(sys, Q, R, P)
        except np.linalg.LinAlgError as exc:
            raise DareDivergenceError("DARE iteration diverged: singular R + B'PB") from exc
        if not np.all(np.isfinite(nxt)) or np.max(np.abs(nxt)) > 1e15:
            raise DareDivergenceError("DARE iteration diverged")
        if np.max(np.abs(nxt - P)) <= tol:
            return nxt
        P = nxt
    raise DareDivergenceError(f"DARE iteration diverged: no convergence in {max_iter} iterations")


def dare_residual(sys: LinearSystem, Q, R, P) -> np.ndarray:
    return riccati_map(sys, np.atleast_2d(Q), np.atleast_2d(R), np.atleast_2d(P)) - P


def lqr_gain(sys: LinearSystem, R, P) -> np.ndarray:
    """``K = -(R + B'PB)^{-1} B'PA`` so that ``u = K x``."""
    A, B = sys.A, sys.B
    R = np.atleast_2d(np.asarray(R, dtype=float))
    return -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
