"""Receding-horizon control with a contracting terminal set.

Each step solves::

    min  sum_i ell(x_i, u_i)          (contractive mode, rotated cost)
    min  sum_i l(x_i, u_i) + Vf(x_N)  (conventional mode)
    s.t. u_i in U, x_1..x_N in X, x_N' S x_N <= alpha_k

and, in contractive mode, shrinks the level with
``alpha_{k+1} = m_s - delta`` (or 0 once ``m_s < delta``) where
``m_s = min(m(x*_1), m(x*_N))`` and ``m(x) = x' S x``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .costs import QuadStageCost, QuadTerminalCost
from .errors import InfeasibleError
from .optim import NlpProblem, SolveReport, SolverSettings, minimize
from .systems import BoxSet, DiscreteSystem, rollout, rollout_sensitivities, step

MODES = ("contractive", "conventional")


@dataclass(frozen=True)
class MpcCosts:
    """Weights plus the terminal-set shape ``S`` and the gain used for warm starts."""

    stage: QuadStageCost
    terminal: QuadTerminalCost
    shape: np.ndarray
    gain: np.ndarray

    def m(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(x @ self.shape @ x)


@dataclass(frozen=True)
class MpcConfig:
    N: int
    alpha0: float
    U: BoxSet
    X: Optional[BoxSet] = None
    delta: Optional[float] = None  # None means 1e-3 * alpha0
    eps_term: float = 1e-8
    mode: str = "contractive"
    settings: SolverSettings = field(default_factory=lambda: SolverSettings(n_starts=2, max_outer=10))

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("horizon N must be at least 1")
        if not self.alpha0 >= 0:
            raise ValueError("alpha0 must be non-negative")
        if not self.eps_term > 0:
            raise ValueError("eps_term must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be positive")
        self.U.require_origin_interior("U")
        if self.X is not None:
            self.X.require_origin_interior("X")

    @property
    def delta_value(self) -> float:
        if self.delta is not None:
            return float(self.delta)
        d = 1e-3 * self.alpha0
        if not d > 0:
            raise ValueError("delta must be given when alpha0 is 0")
        return d


@dataclass
class MpcIterate:
    k: int
    alpha_k: float
    u_seq_star: np.ndarray
    x_seq_star: np.ndarray
    V: float
    m_1: float
    m_N: float
    report: Optional[SolveReport] = None


@dataclass
class ClosedLoopResult:
    states: np.ndarray
    inputs: np.ndarray
    alphas: np.ndarray  # level used at each solved step
    values: np.ndarray
    stage_costs: np.ndarray
    J_run: float
    feasible_all: bool
    terminal_norm: float
    mode: str = "contractive"
    delta: float = 0.0
    m_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"J_run": float(self.J_run), "feasible_all": bool(self.feasible_all),
                "terminal_norm": float(self.terminal_norm)}

    def to_csv(self) -> str:
        n, m = self.states.shape[1], self.inputs.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", *[f"x{i + 1}" for i in range(n)], *[f"u{i + 1}" for i in range(m)],
                    "alpha", "V", "stage_cost"])
        for k in range(self.inputs.shape[0]):
            w.writerow([k, *map(repr, map(float, self.states[k])), *map(repr, map(float, self.inputs[k])),
                        repr(float(self.alphas[k])), repr(float(self.values[k])),
                        repr(float(self.stage_costs[k]))])
        return buf.getvalue()


def _terminal_radius(alpha_k: float, config: MpcConfig) -> Optional[float]:
    """Bound on ``sqrt(m(x_N))``; ``None`` disables the terminal constraint.

    The square-root form keeps the constraint gradient bounded away from zero
    on small sets.  Positive levels are tightened by the solver tolerance so
    that an accepted solution satisfies ``m(x_N) <= alpha_k`` exactly.
    """
    if math.isinf(alpha_k):
        return None
    if alpha_k <= 0:
        return math.sqrt(config.eps_term)
    r = math.sqrt(alpha_k)
    return max(r - config.settings.tol, 0.5 * r)


def online_problem(sys: DiscreteSystem, costs: MpcCosts, config: MpcConfig, x_k,
                   alpha_k: float) -> NlpProblem:
    x_k = np.asarray(x_k, dtype=float).reshape(-1)
    N, m = config.N, sys.m
    Q, R, P = costs.stage.Q, costs.stage.R, costs.terminal.P
    S = costs.shape
    radius = _terminal_radius(alpha_k, config)
    box = BoxSet(np.tile(config.U.lower, N), np.tile(config.U.upper, N))
    rotated = config.mode == "contractive"
    offset = float(x_k @ P @ x_k) if rotated else 0.0
    cache = {}

    def traj(z):
        key = z.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = rollout_sensitivities(sys, x_k, z.reshape(N, m))
        return cache[key]

    def obj(z):
        xs = rollout(sys, x_k, z.reshape(N, m))
        J = float(np.einsum("ij,jk,ik->", xs[:-1], Q, xs[:-1]))
        J += float(np.einsum("ij,jk,ik->", z.reshape(N, m), R, z.reshape(N, m)))
        J += float(xs[-1] @ P @ xs[-1])
        return J - offset

    def grad(z):
        xs, Sx = traj(z)
        g = 2.0 * np.kron(np.eye(N), R) @ z
        for i in range(1, N):
            g += Sx[i].T @ (2.0 * Q @ xs[i])
        return g + Sx[N].T @ (2.0 * P @ xs[N])

    def cons(z):
        xs = rollout(sys, x_k, z.reshape(N, m))
        parts = []
        if config.X is not None:
            parts += [(xs[1:] - config.X.upper).ravel(), (config.X.lower - xs[1:]).ravel()]
        if radius is not None:
            parts.append(np.array([math.sqrt(max(float(xs[-1] @ S @ xs[-1]), 0.0)) - radius]))
        return np.concatenate(parts) if parts else np.zeros(0)

    def cons_jac(z):
        xs, Sx = traj(z)
        rows = []
        if config.X is not None:
            D = Sx[1:].reshape(-1, N * m)
            rows += [D, -D]
        if radius is not None:
            r = math.sqrt(max(float(xs[-1] @ S @ xs[-1]), 0.0))
            rows.append((S @ xs[-1]) @ Sx[N] / r if r > 1e-300 else np.zeros(N * m))
        return np.vstack(rows) if rows else np.zeros((0, N * m))

    has_cons = config.X is not None or radius is not None
    return NlpProblem(N * m, obj, box, cons if has_cons else None, grad,
                      cons_jac if has_cons else None)


def gain_warm_start(sys: DiscreteSystem, costs: MpcCosts, U: BoxSet, x, N: int) -> np.ndarray:
    """Inputs from the clipped gain applied along its own rollout."""
    x = np.asarray(x, dtype=float).reshape(-1)
    us = []
    for _ in range(N):
        u = U.project(costs.gain @ x)
        us.append(u)
        x = step(sys, x, u)
    return np.array(us)


def shifted_warm_start(sys: DiscreteSystem, costs: MpcCosts, U: BoxSet, it: MpcIterate) -> np.ndarray:
    """Previous inputs shifted by one with the clipped gain appended at the old terminal state."""
    tail = U.project(costs.gain @ it.x_seq_star[-1])
    return np.vstack([it.u_seq_star[1:], tail[None, :]])


def solve_online(sys: DiscreteSystem, costs: MpcCosts, config: MpcConfig, x_k, alpha_k: float,
                 warm_start=None, k: int = 0) -> MpcIterate:
    """One receding-horizon solve; ``alpha_k = inf`` drops the terminal constraint."""
    x_k = np.asarray(x_k, dtype=float).reshape(-1)
    if config.X is not None and (np.any(x_k < config.X.lower) or np.any(x_k > config.X.upper)):
        raise InfeasibleError(f"online problem infeasible at k={k}: state outside X", step=k)
    if warm_start is None:
        warm_start = gain_warm_start(sys, costs, config.U, x_k, config.N)
    problem = online_problem(sys, costs, config, x_k, alpha_k)
    rep = minimize(problem, config.settings, warm_start=np.ravel(warm_start))
    if not rep.feasible:
        raise InfeasibleError(f"online problem infeasible at k={k}", step=k, report=rep)
    u = rep.z_star.reshape(config.N, sys.m)
    xs = rollout(sys, x_k, u)
    return MpcIterate(k, float(alpha_k), u, xs, rep.value, costs.m(xs[1]), costs.m(xs[-1]), rep)


def update_alpha(it: MpcIterate, delta: float) -> float:
    m_s = min(it.m_1, it.m_N)
    return float(m_s - delta) if m_s >= delta else 0.0


def run_closed_loop(sys: DiscreteSystem, costs: MpcCosts, config: MpcConfig, x0,
                    T_steps: int) -> ClosedLoopResult:
    """Simulate ``T_steps`` closed-loop steps on the plant itself.

    Raises :class:`InfeasibleError` (with ``step``) when an online solve fails.
    """
    x = np.asarray(x0, dtype=float).reshape(-1)
    delta = config.delta_value if config.mode == "contractive" else 0.0
    alpha = float(config.alpha0)
    states, inputs, alphas, values, stage, mvals = [x], [], [], [], [], []
    lam_max = float(np.linalg.eigvalsh(costs.shape)[-1])
    lam_min = float(np.linalg.eigvalsh(costs.shape)[0])
    diag = {"bound_violations": [], "delta_above_beta3": [], "alpha_zero_step": None}
    warm = None
    for k in range(T_steps):
        it = solve_online(sys, costs, config, x, alpha, warm_start=warm, k=k)
        u = it.u_seq_star[0]
        alphas.append(alpha)
        values.append(it.V)
        mvals.append(costs.m(x))
        stage.append(costs.stage(x, u))
        if config.mode == "contractive":
            if it.V > config.N * lam_max * float(x @ x) + 1e-6:
                diag["bound_violations"].append(k)
            if alpha > 0 and delta > lam_min * float(x @ x):
                diag["delta_above_beta3"].append(k)
            alpha = update_alpha(it, delta)
            if alpha == 0.0 and diag["alpha_zero_step"] is None:
                diag["alpha_zero_step"] = k + 1
        warm = shifted_warm_start(sys, costs, config.U, it)
        x = step(sys, x, u)
        states.append(x)
        inputs.append(u)
    states = np.array(states)
    inputs = np.array(inputs).reshape(T_steps, sys.m)
    J_run = float(np.sum(stage))
    return ClosedLoopResult(states, inputs, np.array(alphas), np.array(values), np.array(stage),
                            J_run, True, float(np.linalg.norm(states[-1])), config.mode, delta,
                            np.array(mvals), diag)


def running_cost(result: ClosedLoopResult, stage: Optional[QuadStageCost] = None) -> float:
    """Sum of stage costs over applied pairs; recomputed from ``stage`` when given."""
    if stage is None:
        return float(np.sum(result.stage_costs))
    return float(sum(stage(x, u) for x, u in zip(result.states[:-1], result.inputs)))


def assert_feasibility_chain(result: ClosedLoopResult, tol: float = 1e-12) -> dict:
    """Check the level chain and the per-step feasibility record.

    Returns ``{"passed": bool, "first_violation": index or None, "reason": str}``.
    """
    if not result.feasible_all:
        return {"passed": False, "first_violation": None, "reason": "an online solve failed"}
    if result.mode == "contractive":
        a = np.asarray(result.alphas, dtype=float)
        for k in range(1, a.size):
            if a[k] > a[k - 1] + tol:
                return {"passed": False, "first_violation": k, "reason": "alpha increased"}
            if a[k] > 0 and a[k] > a[k - 1] - result.delta + tol:
                return {"passed": False, "first_violation": k, "reason": "alpha did not contract by delta"}
    return {"passed": True, "first_violation": None, "reason": ""}


def value_monotonicity(result: ClosedLoopResult, tol: float = 1e-6) -> dict:
    """Once the level is 0, check ``V(x_{k+1}) <= V(x_k) - m(x_k) + tol``."""
    a, V, mv = result.alphas, result.values, result.m_values
    worst = -np.inf
    first = None
    for k in range(a.size - 1):
        if a[k] == 0 and a[k + 1] == 0:
            excess = V[k + 1] - (V[k] - mv[k])
            worst = max(worst, excess)
            if excess > tol and first is None:
                first = k + 1
    return {"passed": first is None, "first_violation": first, "worst_excess": float(worst)}
