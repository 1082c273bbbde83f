"""Discrete-time plant models, box constraint sets and trajectory rollout.

Every model maps ``(x, u) -> x+`` and keeps the origin as an equilibrium,
``f(0, 0) = 0``.  Jacobians are analytic where the model provides them and
central finite differences otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, NumericOverflowError

FD_STEP = 1e-6


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


class DiscreteSystem:
    """Base class for ``x+ = f(x, u)``.

    Subclasses implement :meth:`transition` and may override
    :meth:`jacobians` with an analytic version.
    """

    n: int
    m: int

    def transition(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobians(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return finite_difference_jacobians(self, x, u)

    @property
    def has_analytic_jacobians(self) -> bool:
        return type(self).jacobians is not DiscreteSystem.jacobians

    def _check(self, x, u) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float).reshape(-1)
        u = np.asarray(u, dtype=float).reshape(-1)
        if x.shape != (self.n,):
            raise DimensionError(f"state has length {x.size}, system expects {self.n}")
        if u.shape != (self.m,):
            raise DimensionError(f"input has length {u.size}, system expects {self.m}")
        return x, u


def finite_difference_jacobians(system: DiscreteSystem, x, u, h: float = FD_STEP):
    """Central-difference Jacobians ``(df/dx, df/du)`` at ``(x, u)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    n, m = x.size, u.size
    A = np.empty((n, n))
    B = np.empty((n, m))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        A[:, j] = (system.transition(x + e, u) - system.transition(x - e, u)) / (2 * h)
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        B[:, j] = (system.transition(x, u + e) - system.transition(x, u - e)) / (2 * h)
    return A, B


@dataclass(frozen=True)
class LinearSystem(DiscreteSystem):
    """``x+ = A x + B u``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = _frozen(self.A, 2)
        B = np.array(self.B, dtype=float)
        if B.ndim < 2:
            # a bare vector is one input column
            B = B.reshape(A.shape[0], -1)
        B.setflags(write=False)
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise DimensionError(f"B has {B.shape[0]} rows, A has {A.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("A and B must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def transition(self, x, u):
        return self.A @ x + self.B @ u

    def jacobians(self, x, u):
        return np.array(self.A), np.array(self.B)


@dataclass(frozen=True)
class CartSpringSystem(DiscreteSystem):
    """Euler-discretised cart on a nonlinear spring ``k_s = k0 exp(-x1)``.

    States are displacement and velocity::

        x1+ = x1 + dt x2
        x2+ = -(dt k0 / mass) exp(-x1) x1 + (1 - dt hd / mass) x2 + (dt / mass) u

    With the default parameters the coefficients are -0.132, 0.56 and 0.4.
    """

    k0: float = 0.33
    hd: float = 1.1
    mass: float = 1.0
    dt: float = 0.4

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    n = 2
    m = 1

    def transition(self, x, u):
        c = self.dt / self.mass
        with np.errstate(over="ignore", invalid="ignore"):
            spring = np.exp(-x[0]) * x[0]
        return np.array([
            x[0] + self.dt * x[1],
            -c * self.k0 * spring + (1.0 - c * self.hd) * x[1] + c * u[0],
        ])

    def jacobians(self, x, u):
        c = self.dt / self.mass
        with np.errstate(over="ignore", invalid="ignore"):
            dspring = np.exp(-x[0]) * (1.0 - x[0])
        A = np.array([[1.0, self.dt], [-c * self.k0 * dspring, 1.0 - c * self.hd]])
        B = np.array([[0.0], [c]])
        return A, B


@dataclass(frozen=True)
class FunctionSystem(DiscreteSystem):
    """Wrap plain callables as a system."""

    n: int
    m: int
    fun: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray, np.ndarray], tuple]] = field(default=None, compare=False)

    def transition(self, x, u):
        return np.asarray(self.fun(x, u), dtype=float).reshape(-1)

    def jacobians(self, x, u):
        if self.jac is None:
            return finite_difference_jacobians(self, x, u)
        A, B = self.jac(x, u)
        return np.atleast_2d(np.asarray(A, float)), np.asarray(B, float).reshape(self.n, self.m)

    @property
    def has_analytic_jacobians(self) -> bool:
        return self.jac is not None


@dataclass(frozen=True)
class BoxSet:
    """Closed box ``{v : lower <= v <= upper}``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _frozen(self.lower, 1).reshape(-1)
        hi = _frozen(self.upper, 1).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionError("lower and upper bounds differ in length")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def symmetric(cls, half_widths) -> "BoxSet":
        h = np.abs(np.asarray(half_widths, dtype=float).reshape(-1))
        return cls(-h, h)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains_origin_interior(self) -> bool:
        return bool(np.all(self.lower < 0) and np.all(self.upper > 0))

    def require_origin_interior(self, name: str = "set") -> "BoxSet":
        if not self.contains_origin_interior():
            raise ValueError(f"{name} must contain the origin in its interior")
        return self

    def project(self, v) -> np.ndarray:
        return np.clip(v, self.lower, self.upper)


def step(system: DiscreteSystem, x, u) -> np.ndarray:
    """One application of the transition map."""
    x, u = system._check(x, u)
    return np.asarray(system.transition(x, u), dtype=float).reshape(system.n)


def linearize(system: DiscreteSystem, x_bar, u_bar) -> LinearSystem:
    x, u = system._check(x_bar, u_bar)
    A, B = system.jacobians(x, u)
    return LinearSystem(A, B)


def rollout(system: DiscreteSystem, x0, u_seq: Sequence) -> np.ndarray:
    """Return the ``(N+1, n)`` state trajectory driven by ``u_seq``.

    Raises :class:`NumericOverflowError` naming the first step whose state
    is not finite.
    """
    x = np.asarray(x0, dtype=float).reshape(-1)
    u_arr = np.asarray(u_seq, dtype=float).reshape(-1, system.m) if len(u_seq) else np.zeros((0, system.m))
    xs = np.empty((u_arr.shape[0] + 1, system.n))
    xs[0] = system._check(x, np.zeros(system.m))[0]
    for i, u in enumerate(u_arr):
        with np.errstate(over="ignore", invalid="ignore"):
            xs[i + 1] = step(system, xs[i], u)
        if not np.all(np.isfinite(xs[i + 1])):
            raise NumericOverflowError(f"non-finite state at step {i + 1}", step=i + 1)
    return xs


def rollout_sensitivities(system: DiscreteSystem, x0, u_seq) -> tuple[np.ndarray, np.ndarray]:
    """Trajectory and its derivative with respect to the stacked input sequence.

    Returns ``xs`` of shape ``(N+1, n)`` and ``S`` of shape ``(N+1, n, N*m)``
    with ``S[i] = d x_i / d (u_0, ..., u_{N-1})``.
    """
    u_arr = np.asarray(u_seq, dtype=float).reshape(-1, system.m)
    N, n, m = u_arr.shape[0], system.n, system.m
    xs = rollout(system, x0, u_arr)
    S = np.zeros((N + 1, n, N * m))
    for i in range(N):
        A, B = system.jacobians(xs[i], u_arr[i])
        S[i + 1] = A @ S[i]
        S[i + 1][:, i * m:(i + 1) * m] += B
    return xs, S


def box_contains(box: BoxSet, v) -> bool:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != box.lower.shape:
        raise DimensionError(f"vector has length {v.size}, box has dimension {box.dim}")
    return bool(np.all(v >= box.lower) and np.all(v <= box.upper))


def system_from_config(spec: dict) -> DiscreteSystem:
    """Build a system from ``{type: linear|cart_spring, ...}``."""
    kind = spec.get("type")
    if kind == "linear":
        return LinearSystem(spec["A"], spec["B"])
    if kind == "cart_spring":
        keys = ("k0", "hd", "mass", "dt")
        return CartSpringSystem(**{k: float(spec[k]) for k in keys if spec.get(k) is not None})
    raise ValueError(f"unknown system type {kind!r}")
