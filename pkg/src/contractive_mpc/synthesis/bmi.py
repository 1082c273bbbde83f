"""Terminal weight synthesis through the bilinear matrix inequality

    [[M, G'M], [MG, M]] > 0,    G = [[A + B K1, 0], [K2, 0]]

where ``M`` is the rotated one-step block matrix of ``P``.  Feasibility makes
``m(x) = x' M_P x`` a control Lyapunov function for the linear system.  The
inequality is attacked by alternating ascent of its smallest eigenvalue over
``P`` and over the gain pair ``(K1, K2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DareDivergenceError, IllPosedError
from ..optim import max_min_eigenvalue
from ..osvf import assemble_M, osvf_matrix
from ..systems import LinearSystem
from .dare import lqr_gain, solve_dare

BMI_TOL = 1e-8


@dataclass
class BmiCandidate:
    P: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    min_eig: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return bmi_feasible(self)

    def to_json(self) -> dict:
        return {
            "P": self.P.tolist(),
            "K1": self.K1.tolist(),
            "K2": self.K2.tolist(),
            "min_eig": float(self.min_eig),
        }


@dataclass(frozen=True)
class BmiOptions:
    margin: float = 1e-3
    p_scale: float = 0.3
    max_rounds: int = 50
    max_iter: int = 200
    improve_tol: float = 1e-8
    smoothing: float = 1e-6


def bmi_assemble(sys: LinearSystem, Q, R, P, K1, K2) -> np.ndarray:
    n, m = sys.n, sys.m
    M = assemble_M(sys, Q, R, P).M
    K1 = np.asarray(K1, dtype=float).reshape(m, n)
    K2 = np.asarray(K2, dtype=float).reshape(m, n)
    G = np.zeros((n + m, n + m))
    G[:n, :n] = sys.A + sys.B @ K1
    G[n:, :n] = K2
    MG = M @ G
    out = np.block([[M, MG.T], [MG, M]])
    return 0.5 * (out + out.T)


def bmi_min_eig(sys, Q, R, P, K1, K2) -> float:
    return float(np.linalg.eigvalsh(bmi_assemble(sys, Q, R, P, K1, K2))[0])


def bmi_feasible(candidate: BmiCandidate, tol: float = BMI_TOL) -> bool:
    return bool(candidate.min_eig > tol)


def _sym_from_params(theta, n):
    P = np.zeros((n, n))
    P[np.triu_indices(n)] = theta
    return P + np.triu(P, 1).T


def _sym_params(P):
    return np.asarray(P, dtype=float)[np.triu_indices(P.shape[0])]


def initial_gains(sys: LinearSystem, Q, R, P, K1=None):
    """``K1`` defaults to the one-step gain of ``P``; ``K2 = K_os (A + B K1)``."""
    try:
        K_os = osvf_matrix(sys, Q, R, P).K_os
    except IllPosedError:
        K_os = np.zeros((sys.m, sys.n))
    if K1 is None:
        K1 = K_os
    return K1, K_os @ (sys.A + sys.B @ K1)


def optimize_gains(sys: LinearSystem, Q, R, P, K1=None, K2=None, max_iter: int = 500,
                   stop_at=None, smoothing=None) -> BmiCandidate:
    """Maximise the BMI's smallest eigenvalue over ``(K1, K2)`` with ``P`` fixed."""
    n, m = sys.n, sys.m
    if K1 is None or K2 is None:
        K1, K2 = initial_gains(sys, Q, R, P, K1)
    theta0 = np.concatenate([np.ravel(K1), np.ravel(K2)])

    def family(th):
        return bmi_assemble(sys, Q, R, P, th[:m * n], th[m * n:])

    theta, lam = max_min_eigenvalue(family, theta0, max_iter=max_iter, stop_at=stop_at,
                                    smoothing=smoothing)
    return BmiCandidate(np.array(P, dtype=float), theta[:m * n].reshape(m, n),
                        theta[m * n:].reshape(m, n), lam)


def synth_terminal_bmi(sys: LinearSystem, Q, R, options: BmiOptions = BmiOptions()) -> BmiCandidate:
    """Search for ``(P, K1, K2)`` satisfying the BMI.

    Starts from ``K1`` = LQR gain, ``K2`` = one-step gain applied after
    ``K1``, and ``P`` = ``p_scale`` times the Riccati solution, then alternates
    eigenvalue ascent over ``P`` and over the gains.  Always returns the best
    candidate; infeasible results carry diagnostics instead of raising.
    """
    n, m = sys.n, sys.m
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    diagnostics = {"rounds": 0, "history": []}
    try:
        P_dare = solve_dare(sys, Q, R)
        K1 = lqr_gain(sys, R, P_dare)
        diagnostics["init"] = "dare"
    except (DareDivergenceError, np.linalg.LinAlgError) as exc:
        P_dare = np.array(Q)
        K1 = np.zeros((m, n))
        diagnostics["init"] = f"dare failed: {exc}"
    P = options.p_scale * P_dare
    _, K2 = initial_gains(sys, Q, R, P, K1)
    best = BmiCandidate(P, K1, K2, bmi_min_eig(sys, Q, R, P, K1, K2))
    diagnostics["history"].append(best.min_eig)

    for rnd in range(options.max_rounds):
        diagnostics["rounds"] = rnd + 1
        if best.min_eig >= options.margin:
            break
        start = best.min_eig

        def over_p(th, K1=best.K1, K2=best.K2):
            return bmi_assemble(sys, Q, R, _sym_from_params(th, n), K1, K2)

        th, _ = max_min_eigenvalue(over_p, _sym_params(best.P), max_iter=options.max_iter,
                                   smoothing=options.smoothing, stop_at=options.margin)
        P = _sym_from_params(th, n)
        cand = optimize_gains(sys, Q, R, P, best.K1, best.K2, max_iter=options.max_iter,
                              stop_at=options.margin, smoothing=options.smoothing)
        if cand.min_eig > best.min_eig:
            best = cand
        diagnostics["history"].append(best.min_eig)
        if best.min_eig - start <= options.improve_tol:
            break
    best.diagnostics = diagnostics
    diagnostics["feasible"] = bmi_feasible(best)
    return best
