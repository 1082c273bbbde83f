"""One-step value function (OSVF) of the rotated stage cost.

For linear dynamics and quadratic weights the OSVF is the quadratic form
``m(x) = x' M_P x`` with::

    M_P = A'PA + Q - P - A'PB (R + B'PB)^{-1} B'PA

and the one-step minimiser is ``u = K_os x``.  For nonlinear plants the
quadratic surrogate from the origin linearisation is used for terminal sets,
while :func:`verify_clf` checks decrease on the true dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .costs import AugmentedStageCost, QuadStageCost, QuadTerminalCost, augmented_stage_cost
from .errors import IllPosedError, InfeasibleError
from .optim import NlpProblem, SolverSettings, minimize
from .systems import BoxSet, DiscreteSystem, LinearSystem, step

ILL_POSED_TOL = 1e-10
CERTIFY_TOL = 1e-8
MEMBERSHIP_TOL = 1e-12


def _sym(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class BlockMatrixM:
    """``[[A'PA + Q - P, A'PB], [B'PA, R + B'PB]]`` with its block sizes."""

    M: np.ndarray
    n: int
    m: int

    @property
    def xx(self):
        return self.M[:self.n, :self.n]

    @property
    def xu(self):
        return self.M[:self.n, self.n:]

    @property
    def uu(self):
        return self.M[self.n:, self.n:]


@dataclass(frozen=True)
class OsvfQuadratic:
    M_P: np.ndarray
    K_os: np.ndarray
    RBB: np.ndarray

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(x @ self.M_P @ x)


@dataclass(frozen=True)
class TerminalSet:
    """Ellipsoidal sublevel set ``{x : x' shape x <= alpha}``."""

    shape: np.ndarray
    alpha: float

    def __post_init__(self):
        S = _sym(self.shape)
        if self.alpha < 0:
            raise ValueError("terminal level alpha must be non-negative")
        if np.linalg.eigvalsh(S)[0] <= 0:
            raise ValueError("terminal set shape must be positive definite")
        object.__setattr__(self, "shape", S)
        object.__setattr__(self, "alpha", float(self.alpha))

    def level(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(x @ self.shape @ x)

    def half_widths(self) -> np.ndarray:
        """Axis-aligned half widths of the bounding box."""
        return np.sqrt(self.alpha * np.diag(np.linalg.inv(self.shape)))

    def with_alpha(self, alpha: float) -> "TerminalSet":
        return TerminalSet(self.shape, alpha)


@dataclass
class ClfCertificate:
    lower_bound: float
    upper_bound: float
    decrease_margin: float
    samples_checked: int
    verified: bool
    witness: Optional[np.ndarray] = None
    reason: str = ""

    def to_json(self) -> dict:
        out = {
            "lambda_min": self.lower_bound,
            "lambda_max": self.upper_bound,
            "margin": self.decrease_margin,
            "samples": self.samples_checked,
            "verified": self.verified,
        }
        if self.witness is not None:
            out["witness"] = [float(v) for v in self.witness]
        return out


def assemble_M(sys: LinearSystem, Q, R, P) -> BlockMatrixM:
    A, B = sys.A, sys.B
    Q, R, P = _sym(Q), _sym(R), _sym(P)
    top = np.hstack([A.T @ P @ A + Q - P, A.T @ P @ B])
    bottom = np.hstack([B.T @ P @ A, R + B.T @ P @ B])
    return BlockMatrixM(_sym(np.vstack([top, bottom])), sys.n, sys.m)


def osvf_matrix(sys: LinearSystem, Q, R, P) -> OsvfQuadratic:
    """Closed-form OSVF and one-step gain.

    Raises :class:`IllPosedError` unless ``R + B'PB`` is positive definite.
    """
    blk = assemble_M(sys, Q, R, P)
    RBB = blk.uu
    if np.linalg.eigvalsh(RBB)[0] <= ILL_POSED_TOL:
        raise IllPosedError("one-step problem ill-posed: R + B'PB is not positive definite")
    K = -np.linalg.solve(RBB, blk.xu.T)
    M_P = _sym(blk.xx + blk.xu @ K)
    return OsvfQuadratic(M_P, K, RBB)


def is_M_positive_definite(M: BlockMatrixM, tol: float = CERTIFY_TOL) -> bool:
    return bool(np.linalg.eigvalsh(M.M)[0] > tol)


def schur_positive_definite(M: BlockMatrixM, tol: float = 0.0) -> bool:
    """``R + B'PB > 0`` and ``M_P > 0`` (the Schur-complement route)."""
    if np.linalg.eigvalsh(M.uu)[0] <= tol:
        return False
    MP = M.xx - M.xu @ np.linalg.solve(M.uu, M.xu.T)
    return bool(np.linalg.eigvalsh(_sym(MP))[0] > tol)


@dataclass
class OneStepProblem:
    """Numeric OSVF: ``min_u ell(x, u)`` over ``u in U`` with ``f(x, u)`` in ``omega``."""

    cost: AugmentedStageCost
    U: BoxSet
    omega: Optional[TerminalSet] = None
    settings: SolverSettings = field(default_factory=lambda: SolverSettings(n_starts=3))

    def problem(self, x) -> NlpProblem:
        x = np.asarray(x, dtype=float).reshape(-1)
        sysm = self.cost.system
        quadratic = isinstance(self.cost.stage, QuadStageCost) and isinstance(self.cost.terminal, QuadTerminalCost)

        def obj(u):
            return augmented_stage_cost(self.cost, x, u)

        def grad(u):
            xn = step(sysm, x, u)
            _, Bu = sysm.jacobians(x, u)
            return 2.0 * self.cost.stage.R @ u + Bu.T @ (2.0 * self.cost.terminal.P @ xn)

        def cons(u):
            xn = step(sysm, x, u)
            return np.array([xn @ S @ xn - a])

        def jac(u):
            xn = step(sysm, x, u)
            _, Bu = sysm.jacobians(x, u)
            return (2.0 * S @ xn) @ Bu

        S, a = (self.omega.shape, self.omega.alpha) if self.omega is not None else (None, None)
        return NlpProblem(sysm.m, obj, self.U, cons if S is not None else None,
                          grad if quadratic else None, jac if S is not None else None)

    def solve(self, x, warm_start=None):
        rep = minimize(self.problem(x), self.settings, warm_start=warm_start)
        if not rep.feasible:
            raise InfeasibleError(f"one-step infeasible at x={np.asarray(x).tolist()}", report=rep)
        return rep


def osvf_eval(m: Union[OsvfQuadratic, OneStepProblem], x) -> float:
    if isinstance(m, OsvfQuadratic):
        return m(x)
    return m.solve(x).value


def sublevel_membership(s: TerminalSet, x) -> bool:
    return s.level(x) <= s.alpha + MEMBERSHIP_TOL


def sample_ellipsoid(region: TerminalSet, n_samples: int, seed: int = 0) -> np.ndarray:
    """Rejection-sample ``n_samples`` points in the region's bounding box."""
    rng = np.random.default_rng(seed)
    hw = region.half_widths()
    out = []
    have = 0
    while have < n_samples:
        batch = rng.uniform(-hw, hw, size=(max(64, 2 * (n_samples - have)), hw.size))
        keep = batch[np.einsum("ij,jk,ik->i", batch, region.shape, batch) <= region.alpha]
        out.append(keep)
        have += keep.shape[0]
    return np.vstack(out)[:n_samples]


def decrease_witness(system: DiscreteSystem, shape, gain, x, U: BoxSet,
                     one_step: Optional[OneStepProblem] = None,
                     settings: Optional[SolverSettings] = None) -> tuple[float, np.ndarray]:
    """Best decrease ``V(x) - V(f(x, u))`` found for an admissible ``u``, ``V(x) = x' shape x``.

    Candidates are tried in order until one decreases ``V``: the linear gain
    clipped to ``U``, the numeric one-step optimum on the true dynamics, and
    finally the input in ``U`` minimising ``V(f(x, u))`` directly.  The last
    candidate makes the test exact for the existence of a decreasing input.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    M = np.asarray(shape, dtype=float)

    def V(z):
        return float(z @ M @ z)

    vx = V(x)
    u = U.project(np.asarray(gain, dtype=float) @ x)
    best = (vx - V(step(system, x, u)), u)
    if best[0] > 0:
        return best
    if one_step is not None:
        try:
            u = one_step.solve(x, warm_start=u).z_star
            d = vx - V(step(system, x, u))
            if d > best[0]:
                best = (d, u)
            if d > 0:
                return best
        except InfeasibleError:
            pass

    def grad(v):
        xn = step(system, x, v)
        _, Bu = system.jacobians(x, v)
        return Bu.T @ (2.0 * M @ xn)

    rep = minimize(NlpProblem(system.m, lambda v: V(step(system, x, v)), U, gradient=grad),
                   settings or SolverSettings(n_starts=3), warm_start=best[1])
    d = vx - rep.value
    if d > best[0]:
        best = (d, rep.z_star)
    return best


def verify_clf(sys: DiscreteSystem, m: OsvfQuadratic, region: TerminalSet, X: BoxSet, U: BoxSet,
               n_samples: int = 10_000, seed: int = 0,
               one_step: Optional[OneStepProblem] = None) -> ClfCertificate:
    """Sampled check that ``m`` is a control Lyapunov function on ``region``.

    Bounds ``beta_1, beta_2`` are reported as the extreme eigenvalues of
    ``M_P``; the decrease margin is the worst decrease found over the
    samples.  A failing sample is returned as ``witness``.
    """
    w = np.linalg.eigvalsh(m.M_P)
    lo, hi = float(w[0]), float(w[-1])
    if lo <= CERTIFY_TOL:
        return ClfCertificate(lo, hi, float("nan"), 0, False, reason="M_P is not positive definite")
    if not ellipsoid_inside_box(region, X):
        return ClfCertificate(lo, hi, float("nan"), 0, False, reason="region is not inside X")
    margin = np.inf
    witness = None
    pts = sample_ellipsoid(region, n_samples, seed)
    for x in pts:
        d, _ = decrease_witness(sys, m.M_P, m.K_os, x, U, one_step)
        if d < margin:
            margin = d
        if d <= 0 and witness is None:
            witness = x
    verified = witness is None and margin > 0
    return ClfCertificate(lo, hi, float(margin), len(pts), verified, witness,
                          reason="" if verified else "decrease failed at witness")


def ellipsoid_inside_box(region: TerminalSet, box: BoxSet) -> bool:
    """Exact containment via the support function along each box face normal."""
    hw = region.half_widths()
    return bool(np.all(-hw >= box.lower) and np.all(hw <= box.upper))
