"""Sizing of ellipsoidal terminal sets ``{x : x' S x <= alpha}``."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import DegenerateTerminalSetError
from ..optim import SolverSettings
from ..osvf import TerminalSet, decrease_witness, ellipsoid_inside_box
from ..systems import BoxSet, DiscreteSystem


def max_level_in_box(shape, X: BoxSet) -> float:
    """Largest ``alpha`` with the ellipsoid inside the symmetric box ``X``."""
    Si = np.linalg.inv(np.asarray(shape, dtype=float))
    reach = np.minimum(-X.lower, X.upper)
    return float(np.min(reach**2 / np.diag(Si)))


def boundary_directions(shape, n_boundary: Optional[int] = None, seed: int = 0) -> np.ndarray:
    """Points on ``{x' S x = 1}``: evenly spaced angles for ``n = 2``, seeded otherwise."""
    S = np.asarray(shape, dtype=float)
    n = S.shape[0]
    L = np.linalg.cholesky(np.linalg.inv(S))
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif n == 2:
        th = np.linspace(0.0, 2 * np.pi, n_boundary or 720, endpoint=False)
        dirs = np.column_stack([np.cos(th), np.sin(th)])
    else:
        g = np.random.default_rng(seed).standard_normal((n_boundary or 360 * n, n))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    return dirs @ L.T


def terminal_alpha_admissible(sys: DiscreteSystem, shape, alpha: float, X: BoxSet, U: BoxSet,
                              gain, n_boundary: Optional[int] = None, check_dynamics: bool = True,
                              settings: Optional[SolverSettings] = None) -> tuple[bool, Optional[np.ndarray]]:
    """Test a level: the set lies in ``X`` and every boundary sample admits a decreasing input.

    The decrease test uses :func:`decrease_witness` on the true dynamics, so
    the clipped gain is tried first and a search over ``U`` follows only where
    it fails.  Returns ``(ok, first failing point or None)``.
    """
    if alpha <= 0:
        return False, None
    region = TerminalSet(shape, alpha)
    if not ellipsoid_inside_box(region, X):
        return False, None
    if not check_dynamics:
        return True, None
    for x in np.sqrt(alpha) * boundary_directions(region.shape, n_boundary):
        d, _ = decrease_witness(sys, region.shape, gain, x, U, settings=settings)
        if d <= 0:
            return False, x
    return True, None


def size_terminal_alpha(sys: DiscreteSystem, shape, X: BoxSet, U: BoxSet, controller_gain,
                        n_boundary: Optional[int] = None, rel_tol: float = 1e-4,
                        check_dynamics: bool = True) -> float:
    """Largest admissible level found by bisection on ``(0, alpha_max]``.

    ``alpha_max`` is the exact containment limit of the ellipsoid in ``X``.
    Raises :class:`DegenerateTerminalSetError` when no positive level passes.
    """
    shape = np.asarray(shape, dtype=float)
    if np.linalg.eigvalsh(0.5 * (shape + shape.T))[0] <= 0:
        raise ValueError("terminal set shape must be positive definite")
    hi = max_level_in_box(shape, X)

    def ok(a):
        return terminal_alpha_admissible(sys, shape, a, X, U, controller_gain, n_boundary,
                                         check_dynamics)[0]

    if ok(hi):
        return hi
    lo = 0.0
    while hi - lo > rel_tol * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
        if hi < 1e-12:
            break
    if lo <= 0:
        raise DegenerateTerminalSetError("terminal set degenerate: no positive level passes")
    return lo
