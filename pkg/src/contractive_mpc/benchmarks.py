"""The two shipped closed-loop examples."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .config import CART_PROPOSED_P
from .costs import QuadStageCost, QuadTerminalCost
from .mpc import MpcConfig, MpcCosts
from .osvf import osvf_matrix
from .synthesis import lqr_gain, size_terminal_alpha, solve_dare
from .systems import BoxSet, CartSpringSystem, DiscreteSystem, LinearSystem, linearize


@dataclass(frozen=True)
class Benchmark:
    system: DiscreteSystem
    costs: MpcCosts
    config: MpcConfig
    x0: np.ndarray
    T_steps: int


def scalar_example(x0: float = 5.0, T_steps: int = 50) -> Benchmark:
    """``x+ = 0.5 x + u`` with ``q = r = p = 1``; ``m(x) = 0.125 x^2``, gain ``-0.25``."""
    sys = LinearSystem([[0.5]], [[1.0]])
    Q, R, P = np.eye(1), np.eye(1), np.eye(1)
    o = osvf_matrix(sys, Q, R, P)
    X, U = BoxSet.symmetric([10.0]), BoxSet.symmetric([4.0])
    alpha0 = size_terminal_alpha(sys, o.M_P, X, U, o.K_os)
    costs = MpcCosts(QuadStageCost(Q, R), QuadTerminalCost(P), o.M_P, o.K_os)
    return Benchmark(sys, costs, MpcConfig(3, alpha0, U, X), np.array([x0]), T_steps)


def cart_spring_example(mode: str = "contractive", P: Optional[np.ndarray] = None,
                        alpha0: Optional[float] = None, T_steps: int = 125) -> Benchmark:
    """Cart on a nonlinear spring from ``x0 = (-2, 1)`` with ``N = 3``.

    ``contractive`` uses the reference proposed weight and its OSVF sublevel
    set; ``conventional`` uses the Riccati weight with an ellipsoid in ``P``.
    Levels default to :func:`size_terminal_alpha`.
    """
    sys = CartSpringSystem()
    lin = linearize(sys, np.zeros(2), np.zeros(1))
    Q, R = np.diag([2.0, 4.0]), np.eye(1)
    X, U = BoxSet.symmetric([2.0, 3.0]), BoxSet.symmetric([4.0])
    if mode == "contractive":
        P = np.array(CART_PROPOSED_P if P is None else P, dtype=float)
        o = osvf_matrix(lin, Q, R, P)
        shape, gain = o.M_P, o.K_os
    else:
        P = solve_dare(lin, Q, R) if P is None else np.asarray(P, dtype=float)
        shape, gain = P, lqr_gain(lin, R, P)
    if alpha0 is None:
        alpha0 = size_terminal_alpha(sys, shape, X, U, gain)
    costs = MpcCosts(QuadStageCost(Q, R), QuadTerminalCost(P), shape, gain)
    return Benchmark(sys, costs, MpcConfig(3, alpha0, U, X, mode=mode), np.array([-2.0, 1.0]), T_steps)


def with_config(b: Benchmark, **changes) -> Benchmark:
    return replace(b, config=replace(b.config, **changes))
