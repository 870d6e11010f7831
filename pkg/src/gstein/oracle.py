"""Lattice dynamic program for ``N_G[phi]``, independent of the PDE stencil.

    u_n = phi,
    u_k(x) = max_{s in {sigma_lo, sigma_hi}} 1/2 [u_{k+1}(x + s sqrt(dt)) + u_{k+1}(x - s sqrt(dt))],

with ``dt = 1/n`` and ``u_0(0)`` as the answer. Values between lattice nodes
come from linear interpolation, which keeps the recursion monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gcore import GParams, NumericalContractError
from .testfns import TestFunction


class LatticeTooCoarse(NumericalContractError):
    """Lattice spacing exceeds ``sigma sqrt(1/n_steps)``."""


@dataclass(frozen=True)
class LatticeConfig:
    n_steps: int = 400
    x_min: float = -12.0
    x_max: float = 12.0
    nx: int = 3840

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if not self.x_min < 0.0 < self.x_max:
            raise ValueError("lattice must straddle 0")
        if int(self.nx) != self.nx or self.nx < 2:
            raise ValueError("nx must be an integer >= 2")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx + 1)

    @classmethod
    def for_params(cls, p: GParams, n_steps: int = 400, m: int = 8,
                   x_max: float | None = None) -> "LatticeConfig":
        """Spacing ``sigma_lo sqrt(dt) / m`` so both step sizes land on nodes
        whenever ``m * sigma_hi / sigma_lo`` is an integer."""
        if x_max is None:
            x_max = max(10.0, 6.0 * p.sigma_hi)
        s = p.sigma_lo if p.sigma_lo > 0.0 else p.sigma_hi
        if s == 0.0:
            return cls(n_steps, -x_max, x_max, 2)
        h = s * math.sqrt(1.0 / n_steps) / m
        half = math.ceil(x_max / h)
        return cls(n_steps, -half * h, half * h, 2 * half)

    def check(self, p: GParams) -> None:
        s = p.sigma_lo if p.sigma_lo > 0.0 else p.sigma_hi
        if s > 0.0 and self.h > s * math.sqrt(1.0 / self.n_steps) * (1.0 + 1e-12):
            raise LatticeTooCoarse(
                f"spacing {self.h:.4g} exceeds sigma sqrt(1/n) = {s / math.sqrt(self.n_steps):.4g}")


def tree_values(phi: TestFunction, p: GParams, cfg: LatticeConfig) -> np.ndarray:
    """``u_0`` on all lattice nodes."""
    cfg.check(p)
    x = cfg.nodes
    u = np.asarray(phi(x), dtype=float)
    r = math.sqrt(1.0 / cfg.n_steps)
    shifts = sorted({p.sigma_lo * r, p.sigma_hi * r})
    for _ in range(cfg.n_steps):
        best = None
        for s in shifts:
            v = 0.5 * (np.interp(x + s, x, u) + np.interp(x - s, x, u))
            best = v if best is None else np.maximum(best, v)
        u = best
    return u


def tree_expectation(phi: TestFunction, p: GParams, cfg: LatticeConfig | None = None) -> float:
    """Approximation of ``N_G[phi]`` from the two-point lattice recursion."""
    if cfg is None:
        cfg = LatticeConfig.for_params(p)
    u = tree_values(phi, p, cfg)
    return float(np.interp(0.0, cfg.nodes, u))


__all__ = ["LatticeConfig", "LatticeTooCoarse", "tree_expectation", "tree_values"]
