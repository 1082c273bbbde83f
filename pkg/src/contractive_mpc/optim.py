"""Small dense constrained minimisation.

:func:`minimize` solves::

    min f(z)  s.t.  lower <= z <= upper,  g(z) <= 0

with an augmented Lagrangian outer loop (PHR multipliers for the
inequalities) around a projected-gradient inner loop.  Inner steps start from
a Barzilai-Borwein length and are accepted by Armijo backtracking.  Several
deterministic starts are tried and the best feasible report wins.

:func:`max_min_eigenvalue` ascends the smallest eigenvalue of a symmetric
matrix family using eigenvector-based (sub)gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .systems import BoxSet

FD_STEP = 1e-6


@dataclass(frozen=True)
class SolverSettings:
    rho0: float = 10.0
    rho_factor: float = 10.0
    max_outer: int = 8
    max_inner: int = 500
    tol: float = 1e-8
    n_starts: int = 5
    seed: int = 0
    armijo: float = 1e-4

    def with_(self, **kw) -> "SolverSettings":
        return replace(self, **kw)


@dataclass
class NlpProblem:
    """A box- and inequality-constrained problem on ``R^dim``.

    ``constraints`` returns the vector ``g(z)`` (feasible when ``g <= 0``).
    Missing derivatives are replaced by central differences.
    """

    dim: int
    objective: Callable[[np.ndarray], float]
    box: BoxSet
    constraints: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    constraint_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.box.dim != self.dim:
            raise ValueError(f"box has dimension {self.box.dim}, problem has {self.dim}")

    def grad(self, z):
        if self.gradient is not None:
            return np.asarray(self.gradient(z), dtype=float)
        return fd_gradient(self.objective, z)

    def cons(self, z):
        if self.constraints is None:
            return np.zeros(0)
        return np.asarray(self.constraints(z), dtype=float).reshape(-1)

    def cons_jac(self, z):
        if self.constraints is None:
            return np.zeros((0, self.dim))
        if self.constraint_jacobian is not None:
            return np.asarray(self.constraint_jacobian(z), dtype=float).reshape(-1, self.dim)
        return fd_jacobian(self.cons, z)


@dataclass
class SolveReport:
    z_star: np.ndarray
    value: float
    kkt_residual: float
    constraint_violation: float
    iterations: int
    status: str  # "converged" | "max_iter" | "infeasible"
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def fd_gradient(fun, z, h: float = FD_STEP) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    g = np.empty_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        g[i] = (fun(z + e) - fun(z - e)) / (2 * h)
    return g


def fd_jacobian(fun, z, h: float = FD_STEP) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    cols = []
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        cols.append((np.asarray(fun(z + e)) - np.asarray(fun(z - e))) / (2 * h))
    return np.array(cols).T.reshape(-1, z.size)


def _projected_gradient(problem: NlpProblem, z0, fun, grad, tol, settings):
    lo, hi = problem.box.lower, problem.box.upper
    z = np.clip(z0, lo, hi)
    f, g = fun(z), grad(z)
    t = 1.0 / max(1.0, np.max(np.abs(g), initial=0.0))
    it = 0
    for it in range(1, settings.max_inner + 1):
        if np.max(np.abs(z - np.clip(z - g, lo, hi)), initial=0.0) <= tol:
            break
        while True:
            zn = np.clip(z - t * g, lo, hi)
            d = zn - z
            fn = fun(zn)
            if fn <= f + settings.armijo * float(g @ d):
                break
            t *= 0.5
            if t < 1e-20:
                return z, it
        gn = grad(zn)
        s, y = zn - z, gn - g
        sy = float(s @ y)
        t = float(s @ s) / sy if sy > 0 else 2.0 * t
        t = min(max(t, 1e-12), 1e12)
        z, f, g = zn, fn, gn
    return z, it


def _lagrangian_parts(problem, lam, rho):
    def fun(z):
        g = problem.cons(z)
        shifted = np.maximum(0.0, lam + rho * g)
        return problem.objective(z) + float(shifted @ shifted - lam @ lam) / (2 * rho)

    def grad(z):
        gz = problem.grad(z)
        if lam.size:
            shifted = np.maximum(0.0, lam + rho * problem.cons(z))
            if np.any(shifted > 0):
                gz = gz + problem.cons_jac(z).T @ shifted
        return gz

    return fun, grad


def _kkt(problem, z, lam):
    lo, hi = problem.box.lower, problem.box.upper
    g = problem.grad(z)
    c = problem.cons(z)
    if c.size:
        g = g + problem.cons_jac(z).T @ lam
        comp = np.max(np.abs(np.minimum(lam, -c)), initial=0.0)
    else:
        comp = 0.0
    stat = np.max(np.abs(z - np.clip(z - g, lo, hi)), initial=0.0)
    return max(float(stat), float(comp))


def _solve_from(problem: NlpProblem, z0, settings: SolverSettings) -> SolveReport:
    n_con = problem.cons(np.clip(z0, problem.box.lower, problem.box.upper)).size
    lam = np.zeros(n_con)
    rho = settings.rho0
    z = np.clip(np.asarray(z0, dtype=float), problem.box.lower, problem.box.upper)
    iterations = 0
    prev_viol = np.inf
    viol = kkt = np.inf
    for _ in range(settings.max_outer):
        fun, grad = _lagrangian_parts(problem, lam, rho)
        z, it = _projected_gradient(problem, z, fun, grad, settings.tol, settings)
        iterations += it
        c = problem.cons(z)
        viol = float(np.max(c, initial=0.0)) if n_con else 0.0
        if n_con:
            lam = np.maximum(0.0, lam + rho * c)
        kkt = _kkt(problem, z, lam)
        if viol <= settings.tol and kkt <= settings.tol:
            break
        if n_con == 0:
            break
        if viol > 0.25 * prev_viol or viol > settings.tol:
            rho *= settings.rho_factor
        prev_viol = viol
    if viol > settings.tol:
        status = "infeasible"
    elif kkt <= settings.tol:
        status = "converged"
    else:
        status = "max_iter"
    return SolveReport(z, float(problem.objective(z)), kkt, viol, iterations, status, lam)


def _starts(problem: NlpProblem, settings: SolverSettings, warm_start) -> list[np.ndarray]:
    lo, hi = problem.box.lower, problem.box.upper
    center = np.where(np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi),
                      np.clip(0.0, lo, hi))
    starts = [center]
    if warm_start is not None:
        starts.append(np.clip(np.asarray(warm_start, dtype=float).reshape(-1), lo, hi))
    rng = np.random.default_rng(settings.seed)
    a = np.where(np.isfinite(lo), lo, center - 1.0)
    b = np.where(np.isfinite(hi), hi, center + 1.0)
    while len(starts) < settings.n_starts:
        starts.append(rng.uniform(a, b))
    return starts[:max(settings.n_starts, 1 + (warm_start is not None))]


def _better(a: SolveReport, b: Optional[SolveReport]) -> bool:
    if b is None:
        return True
    if a.feasible != b.feasible:
        return a.feasible
    if not a.feasible:
        return a.constraint_violation < b.constraint_violation
    return a.value < b.value


def minimize(problem: NlpProblem, settings: Optional[SolverSettings] = None,
             warm_start=None) -> SolveReport:
    """Multi-start augmented Lagrangian solve; returns the best report.

    Starts are the box centre, ``warm_start`` when given, and seeded uniform
    points in the box.  Feasible reports beat infeasible ones, then lower
    objective wins.
    """
    settings = settings or SolverSettings()
    best = None
    for z0 in _starts(problem, settings, warm_start):
        rep = _solve_from(problem, z0, settings)
        if _better(rep, best):
            best = rep
    return best


def max_min_eigenvalue(family: Callable[[np.ndarray], np.ndarray], init,
                       bounds: Optional[BoxSet] = None,
                       derivatives: Optional[Callable[[np.ndarray], Sequence[np.ndarray]]] = None,
                       max_iter: int = 500, cluster_tol: float = 1e-8,
                       smoothing: Optional[float] = None, ftol: float = 1e-12,
                       stop_at: Optional[float] = None) -> tuple[np.ndarray, float]:
    """Ascend ``lambda_min(family(theta))``.

    The ascent direction is ``v' dM/dtheta_i v`` for the bottom eigenvector,
    averaged over eigenvalues within ``cluster_tol`` of the minimum (or
    softmin-weighted with temperature ``smoothing``).  Steps are halved until
    the true minimum eigenvalue increases.  Returns ``(theta, lambda_min)``.
    """
    theta = np.array(init, dtype=float).reshape(-1)
    lo = bounds.lower if bounds is not None else np.full(theta.size, -np.inf)
    hi = bounds.upper if bounds is not None else np.full(theta.size, np.inf)
    theta = np.clip(theta, lo, hi)

    def lam_min(th):
        return float(np.linalg.eigvalsh(family(th))[0])

    def dmats(th):
        if derivatives is not None:
            return derivatives(th)
        out = []
        for i in range(th.size):
            e = np.zeros_like(th)
            e[i] = FD_STEP
            out.append((family(th + e) - family(th - e)) / (2 * FD_STEP))
        return out

    def ascent(th):
        w, V = np.linalg.eigh(family(th))
        if smoothing:
            weights = np.exp(-(w - w[0]) / smoothing)
        else:
            weights = (w <= w[0] + cluster_tol).astype(float)
        weights /= weights.sum()
        keep = weights > 1e-12
        Vk, wk = V[:, keep], weights[keep]
        return np.array([float(np.sum(wk * np.einsum("ij,ik,kj->j", Vk, D, Vk))) for D in dmats(th)])

    value = lam_min(theta)
    t = 1.0
    for _ in range(max_iter):
        if stop_at is not None and value >= stop_at:
            break
        g = ascent(theta)
        if not np.any(np.abs(g) > 0):
            break
        improved = False
        while t > 1e-14:
            cand = np.clip(theta + t * g, lo, hi)
            if np.array_equal(cand, theta):
                break
            cv = lam_min(cand)
            if cv > value:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        gain = cv - value
        theta, value = cand, cv
        t = min(4.0 * t, 1e6)
        if gain <= ftol * max(1.0, abs(value)):
            break
    return theta, value
