"""Stability regions of the scalar example ``x+ = a x + b u``.

With ``l = q x^2 + r u^2`` and ``Vf = p x^2`` the rotated one-step value is
``m(x) = mp * x^2`` where ``mp = a^2 p + q - p - a^2 p^2 b^2 / (r + b^2 p)``.
The proposed condition is ``r + b^2 p > 0`` and ``mp > 0``.  The
conventional condition needs ``q > 0, r >= 0, p >= 0`` and the fake Riccati
inequality ``q <= (z + a^2 r^2 / z - (1 + a^2) r) / b^2`` with ``z = r + b^2 p``.

All functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEMBER_TOL = 1e-12


def _check_b(b):
    if np.any(np.asarray(b) == 0):
        raise ValueError("b must be nonzero (b != 0)")


def firstorder_qmin(a, b, r):
    """Lower bound on ``q`` for the proposed region.

    ``-(|a| - 1)^2 r / b^2`` for ``r > 0``, ``0`` for ``r = 0`` and
    ``-(|a| + 1)^2 r / b^2`` for ``r < 0``.
    """
    _check_b(b)
    a, b, r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, r)))
    out = np.where(r > 0, -(np.abs(a) - 1.0) ** 2 * r / b**2,
                   np.where(r < 0, -(np.abs(a) + 1.0) ** 2 * r / b**2, 0.0))
    return float(out) if out.ndim == 0 else out


def osvf_scalar(a, b, q, r, p):
    """``mp`` and ``r + b^2 p``; ``mp`` is ``nan`` where the latter is not positive."""
    z = r + b**2 * p
    with np.errstate(divide="ignore", invalid="ignore"):
        mp = np.where(z > 0, a**2 * p + q - p - a**2 * p**2 * b**2 / np.where(z > 0, z, 1.0), np.nan)
    return mp, z


def firstorder_proposed_member(a, b, q, r, p):
    _check_b(b)
    mp, z = osvf_scalar(*(np.asarray(v, dtype=float) for v in (a, b, q, r, p)))
    out = (z > MEMBER_TOL) & (np.nan_to_num(mp, nan=-1.0) > MEMBER_TOL)
    return bool(out) if out.ndim == 0 else out


def firstorder_conventional_member(a, b, q, r, p):
    _check_b(b)
    a, b, q, r, p = (np.asarray(v, dtype=float) for v in (a, b, q, r, p))
    z = r + b**2 * p
    signs = (q > 0) & (r >= 0) & (p >= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = np.where(z > 0, (z + a**2 * r**2 / np.where(z > 0, z, 1.0) - (1 + a**2) * r) / b**2,
                         -np.inf)
    out = signs & (q <= bound)
    return bool(out) if out.ndim == 0 else out


def scalar_dare_root(a, b, q, r):
    """Positive root of ``b^2 p^2 + ((1 - a^2) r - b^2 q) p - q r = 0`` (needs ``q r > 0``)."""
    c1 = (1 - a**2) * r - b**2 * q
    return (-c1 + np.sqrt(c1**2 + 4 * b**2 * q * r)) / (2 * b**2)


@dataclass
class RegionSweep:
    a: float
    b: float
    r: float
    q: np.ndarray
    p: np.ndarray
    proposed: np.ndarray  # shape (len(q), len(p))
    conventional: np.ndarray

    @property
    def overlap(self) -> int:
        return int(np.count_nonzero(self.proposed & self.conventional))

    def boundary(self) -> list[dict]:
        """Largest proposed ``p`` per ``q`` next to the Riccati root.

        Only ``r > 0, q > 0`` rows whose root lies inside the ``p`` grid are listed.
        """
        rows = []
        if self.r <= 0:
            return rows
        for i, q in enumerate(self.q):
            if q <= 0 or not self.proposed[i].any():
                continue
            p_star = float(scalar_dare_root(self.a, self.b, q, self.r))
            if not self.p[0] <= p_star <= self.p[-1]:
                continue
            p_sup = float(self.p[np.nonzero(self.proposed[i])[0][-1]])
            rows.append({"q": float(q), "p_sup_grid": p_sup, "p_star": p_star})
        return rows


def grid_of(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(n + 1), 12)


def region_sweep(a: float, b: float, r: float, q_grid, p_grid) -> RegionSweep:
    _check_b(b)
    q = np.asarray(q_grid, dtype=float)
    p = np.asarray(p_grid, dtype=float)
    Qg, Pg = np.meshgrid(q, p, indexing="ij")
    return RegionSweep(a, b, r, q, p,
                       firstorder_proposed_member(a, b, Qg, r, Pg),
                       firstorder_conventional_member(a, b, Qg, r, Pg))
