"""Experiment configuration loaded from TOML or JSON."""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .optim import SolverSettings
from .systems import BoxSet, CartSpringSystem, DiscreteSystem, LinearSystem

# reference weight for the proposed design on the cart-spring benchmark
CART_PROPOSED_P = [[3.5249, -0.3522], [-0.3522, 1.5731]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemSpec(_Strict):
    type: Literal["linear", "cart_spring"] = "cart_spring"
    A: Optional[list[list[float]]] = None
    B: Optional[list[list[float]]] = None
    k0: float = 0.33
    hd: float = 1.1
    mass: float = Field(1.0, gt=0)
    dt: float = Field(0.4, gt=0)

    @model_validator(mode="after")
    def _linear_needs_matrices(self):
        if self.type == "linear":
            if self.A is None or self.B is None:
                raise ValueError("linear system needs A and B")
            A, B = np.array(self.A, dtype=float), np.array(self.B, dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise ValueError("A must be square")
            if B.ndim != 2 or B.shape[0] != A.shape[0]:
                raise ValueError("B must have as many rows as A")
            if not np.any(B):
                raise ValueError("B must be nonzero (b != 0)")
        return self

    def build(self) -> DiscreteSystem:
        if self.type == "linear":
            return LinearSystem(self.A, self.B)
        return CartSpringSystem(self.k0, self.hd, self.mass, self.dt)

    @property
    def n(self) -> int:
        return len(self.A) if self.type == "linear" else 2


class Weights(_Strict):
    Q: list[list[float]] = [[2.0, 0.0], [0.0, 4.0]]
    R: list[list[float]] = [[1.0]]
    P: Optional[list[list[float]]] = None


class Constraints(_Strict):
    x_max: Optional[list[float]] = [2.0, 3.0]
    u_max: list[float] = [4.0]

    @field_validator("x_max", "u_max")
    @classmethod
    def _positive(cls, v):
        if v is not None and any(b <= 0 for b in v):
            raise ValueError("constraint half widths must be positive")
        return v

    def X(self) -> Optional[BoxSet]:
        return None if self.x_max is None else BoxSet.symmetric(self.x_max)

    def U(self) -> BoxSet:
        return BoxSet.symmetric(self.u_max)


class MpcSection(_Strict):
    N: int = Field(3, ge=1)
    T_steps: int = Field(125, ge=0)
    x0: list[float] = [-2.0, 1.0]
    delta: Optional[float] = Field(None, gt=0)
    eps_term: float = Field(1e-8, gt=0)
    alpha_proposed: Optional[float] = Field(None, ge=0)
    alpha_conventional: Optional[float] = Field(None, ge=0)
    proposed_P: Optional[list[list[float]]] = CART_PROPOSED_P


class RegionSection(_Strict):
    a_values: list[float] = [0.5, 1.0, 2.0]
    b: float = 1.0
    r_values: list[float] = [1.0, 0.0, -1.0]
    q_range: tuple[float, float] = (-1.0, 5.0)
    p_range: tuple[float, float] = (-2.0, 6.0)
    step: float = Field(0.05, gt=0)

    @model_validator(mode="after")
    def _ranges(self):
        if self.b == 0:
            raise ValueError("b must be nonzero (b != 0)")
        for name in ("q_range", "p_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must be increasing")
            if (hi - lo) / self.step > 1e5:
                raise ValueError(f"{name} with this step gives too many points")
        return self


class OptimSection(_Strict):
    rho0: float = Field(10.0, gt=0)
    rho_factor: float = Field(10.0, gt=1)
    max_outer: int = Field(10, ge=1)
    max_inner: int = Field(500, ge=1)
    tol: float = Field(1e-8, gt=0)
    n_starts: int = Field(2, ge=1)
    seed: int = 0

    def settings(self, seed: Optional[int] = None) -> SolverSettings:
        d = self.model_dump()
        if seed is not None:
            d["seed"] = seed
        return SolverSettings(**d)


class VerifySection(_Strict):
    n_samples: int = Field(10_000, ge=1)
    alpha: Optional[float] = Field(None, gt=0)


class SynthSection(_Strict):
    margin: float = Field(1e-3, gt=0)
    p_scale: float = 0.3
    max_rounds: int = Field(50, ge=1)
    max_iter: int = Field(200, ge=1)


class ExperimentConfig(_Strict):
    system: SystemSpec = SystemSpec()
    weights: Weights = Weights()
    constraints: Constraints = Constraints()
    mpc: MpcSection = MpcSection()
    region: RegionSection = RegionSection()
    optim: OptimSection = OptimSection()
    verify: VerifySection = VerifySection()
    synth: SynthSection = SynthSection()
    seed: int = 0

    @model_validator(mode="after")
    def _dimensions(self):
        n = self.system.n
        m = len(self.system.B[0]) if self.system.type == "linear" else 1
        Q, R = np.array(self.weights.Q), np.array(self.weights.R)
        if Q.shape != (n, n):
            raise ValueError(f"Q must be {n}x{n}")
        if R.shape != (m, m):
            raise ValueError(f"R must be {m}x{m}")
        if self.weights.P is not None and np.array(self.weights.P).shape != (n, n):
            raise ValueError(f"P must be {n}x{n}")
        if self.constraints.x_max is not None and len(self.constraints.x_max) != n:
            raise ValueError(f"x_max must have {n} entries")
        if len(self.constraints.u_max) != m:
            raise ValueError(f"u_max must have {m} entries")
        return self


def load_config(path: Optional[str]) -> ExperimentConfig:
    """Read a ``.toml`` or ``.json`` file; ``None`` gives the defaults."""
    if path is None:
        return ExperimentConfig()
    p = Path(path)
    text = p.read_bytes()
    data = tomllib.loads(text.decode("utf-8")) if p.suffix.lower() == ".toml" else json.loads(text)
    return ExperimentConfig.model_validate(data)
