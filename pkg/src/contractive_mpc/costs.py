"""Stage, terminal and rotated stage costs.

The rotated stage cost moves the terminal weight onto every stage::

    ell(x, u) = -Vf(x) + l(x, u) + Vf(f(x, u))

so that summing it along a trajectory telescopes to ``J - Vf(x0)``.  Weights
may be indefinite; only symmetry is enforced.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DimensionError
from .systems import DiscreteSystem, step

SYMMETRY_TOL = 1e-12


def _sym(M, name: str) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got {M.shape}")
    if np.max(np.abs(M - M.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.max(np.abs(M), initial=0.0)):
        raise ValueError(f"{name} is not symmetric")
    M = 0.5 * (M + M.T)
    M.setflags(write=False)
    return M


def quad(M: np.ndarray, v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float).reshape(-1)
    return float(v @ (M @ v))


@dataclass(frozen=True)
class QuadStageCost:
    """``l(x, u) = x'Qx + u'Ru``."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Q", _sym(self.Q, "Q"))
        object.__setattr__(self, "R", _sym(self.R, "R"))

    def __call__(self, x, u) -> float:
        return stage_cost(self, x, u)

    def gradient(self, x, u) -> tuple[np.ndarray, np.ndarray]:
        return 2.0 * (self.Q @ x), 2.0 * (self.R @ u)


@dataclass(frozen=True)
class QuadTerminalCost:
    """``Vf(x) = x'Px``; P may be indefinite."""

    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", _sym(self.P, "P"))

    def __call__(self, x) -> float:
        return terminal_cost(self, x)

    def gradient(self, x) -> np.ndarray:
        return 2.0 * (self.P @ x)


StageFn = Union[QuadStageCost, Callable[[np.ndarray, np.ndarray], float]]
TerminalFn = Union[QuadTerminalCost, Callable[[np.ndarray], float]]


@dataclass(frozen=True)
class AugmentedStageCost:
    """Rotated stage cost built from a stage cost, terminal cost and plant.

    ``stage`` and ``terminal`` may be the quadratic classes above or any
    callables with the same signatures.
    """

    stage: StageFn
    terminal: TerminalFn
    system: DiscreteSystem

    def __call__(self, x, u) -> float:
        return augmented_stage_cost(self, x, u)


def stage_cost(c: QuadStageCost, x, u) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if x.size != c.Q.shape[0] or u.size != c.R.shape[0]:
        raise DimensionError("state/input length does not match Q/R")
    return quad(c.Q, x) + quad(c.R, u)


def terminal_cost(c: QuadTerminalCost, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != c.P.shape[0]:
        raise DimensionError("state length does not match P")
    return quad(c.P, x)


def augmented_stage_cost(a: AugmentedStageCost, x, u, x_next=None) -> float:
    """``-Vf(x) + l(x, u) + Vf(x+)``; ``x+`` is computed through the plant unless given."""
    if x_next is None:
        x_next = step(a.system, x, u)
    return -a.terminal(x) + a.stage(x, u) + a.terminal(x_next)


def _check_lengths(x_seq, u_seq):
    x_seq = np.asarray(x_seq, dtype=float)
    u_seq = np.asarray(u_seq, dtype=float)
    x_seq = x_seq.reshape(x_seq.shape[0], -1)
    u_seq = u_seq.reshape(u_seq.shape[0], -1) if u_seq.size else np.zeros((0, 1))
    if x_seq.shape[0] != u_seq.shape[0] + 1:
        raise DimensionError(
            f"need len(x_seq) == len(u_seq) + 1, got {x_seq.shape[0]} and {u_seq.shape[0]}")
    return x_seq, u_seq


def horizon_cost_J(c: StageFn, t: TerminalFn, x_seq, u_seq) -> float:
    """Classic finite-horizon cost ``sum l(x_i, u_i) + Vf(x_N)``."""
    x_seq, u_seq = _check_lengths(x_seq, u_seq)
    total = sum(c(x, u) for x, u in zip(x_seq[:-1], u_seq))
    return float(total + t(x_seq[-1]))


def rotated_cost(a: AugmentedStageCost, x_seq, u_seq) -> float:
    """Sum of rotated stage costs along a given trajectory (no initial-state term)."""
    x_seq, u_seq = _check_lengths(x_seq, u_seq)
    return float(sum(
        augmented_stage_cost(a, x_seq[i], u_seq[i], x_next=x_seq[i + 1])
        for i in range(u_seq.shape[0])
    ))
