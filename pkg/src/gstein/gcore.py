"""Core types: the ellipticity band, grids, solved fields, discrete measures.

The sublinear generator of the one-dimensional G-normal law is

    G(a) = 1/2 (sigma_hi^2 a^+ - sigma_lo^2 a^-),

the supremum of sigma^2 a / 2 over sigma in [sigma_lo, sigma_hi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class GSteinError(Exception):
    """Base class for errors raised by this package."""


class DegenerateBandError(GSteinError, ValueError):
    """An operation needs sigma_lo > 0 (or sigma_lo < sigma_hi)."""


class NumericalContractError(GSteinError):
    """A numerical precondition (CFL, boundedness, mass leakage) is violated."""


class CFLError(NumericalContractError):
    pass


class UnboundedDataError(NumericalContractError):
    pass


class MassLeakageError(NumericalContractError):
    pass


class DomainError(GSteinError, ValueError):
    """A query point lies outside the region where a field is defined."""


@dataclass(frozen=True)
class GParams:
    """Volatility band ``0 <= sigma_lo <= sigma_hi < inf``."""

    sigma_lo: float
    sigma_hi: float

    def __post_init__(self):
        lo, hi = float(self.sigma_lo), float(self.sigma_hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"sigma bounds must be finite, got ({lo}, {hi})")
        if not 0.0 <= lo <= hi:
            raise ValueError(f"need 0 <= sigma_lo <= sigma_hi, got ({lo}, {hi})")
        object.__setattr__(self, "sigma_lo", lo)
        object.__setattr__(self, "sigma_hi", hi)

    @property
    def var_lo(self) -> float:
        return self.sigma_lo * self.sigma_lo

    @property
    def var_hi(self) -> float:
        return self.sigma_hi * self.sigma_hi

    @property
    def is_classical(self) -> bool:
        return self.sigma_lo == self.sigma_hi

    def beta(self) -> float:
        if self.sigma_lo <= 0.0:
            raise DegenerateBandError("beta = sigma_hi / sigma_lo needs sigma_lo > 0")
        return self.sigma_hi / self.sigma_lo

    def sigma_mid(self) -> float:
        return 0.5 * (self.sigma_lo + self.sigma_hi)

    def require_nondegenerate(self) -> None:
        if self.sigma_lo <= 0.0:
            raise DegenerateBandError("operation requires sigma_lo > 0")


def g_eval(a, p: GParams):
    """Evaluate G elementwise; scalars in, float out."""
    a_arr = np.asarray(a, dtype=float)
    out = 0.5 * np.where(a_arr >= 0.0, p.var_hi * a_arr, p.var_lo * a_arr)
    if out.ndim == 0:
        return float(out)
    return out


def g_inverse(c, p: GParams):
    """Return the unique ``a`` with ``G(a) = c``.

    Raises
    ------
    DegenerateBandError
        If ``sigma_lo == 0`` and some ``c < 0`` (G is flat on the negative axis).
        ``sigma_hi == 0`` makes G identically zero and is rejected for any c != 0.
    """
    c_arr = np.asarray(c, dtype=float)
    if p.sigma_lo == 0.0 and np.any(c_arr < 0.0):
        raise DegenerateBandError("G is not invertible on c < 0 when sigma_lo = 0")
    if p.sigma_hi == 0.0 and np.any(c_arr != 0.0):
        raise DegenerateBandError("G vanishes identically when sigma_hi = 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(c_arr >= 0.0, 2.0 * c_arr / p.var_hi, 2.0 * c_arr / p.var_lo)
    out = np.where(c_arr == 0.0, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform space-time grid.

    ``nx`` counts cells, so there are ``nx + 1`` nodes including both ends.
    ``dt=None`` lets the solver pick the largest CFL-safe step that divides
    unit time into a whole number of steps.
    """

    x_min: float = -10.0
    x_max: float = 10.0
    nx: int = 500
    t_max: float = 1.5
    dt: float | None = None

    def __post_init__(self):
        if not self.x_min < 0.0 < self.x_max:
            raise ValueError(f"grid must straddle 0, got [{self.x_min}, {self.x_max}]")
        if int(self.nx) != self.nx or self.nx < 2:
            raise ValueError(f"nx must be an integer >= 2, got {self.nx}")
        object.__setattr__(self, "nx", int(self.nx))
        if not self.t_max > 0.0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.dt is not None and not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @classmethod
    def from_dx(cls, dx: float, x_max: float = 10.0, t_max: float = 1.5,
                dt: float | None = None) -> "Grid":
        """Symmetric grid ``[-x_max, x_max]`` with spacing as close to ``dx`` as fits."""
        nx = int(round(2.0 * x_max / dx))
        if nx % 2:
            nx += 1  # keep x = 0 on a node
        return cls(-x_max, x_max, nx, t_max, dt)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx + 1)

    def cfl_number(self, dt: float, p: GParams) -> float:
        return dt * p.var_hi / self.dx ** 2

    def check_cfl(self, dt: float, p: GParams) -> None:
        nu = self.cfl_number(dt, p)
        if nu > 1.0 + 1e-12:
            raise CFLError(
                f"CFL violated: dt*sigma_hi^2/dx^2 = {nu:.4g} > 1 "
                f"(dt={dt:.4g}, dx={self.dx:.4g}, sigma_hi={p.sigma_hi:.4g})")

    def node_index(self, x: float) -> int:
        """Nearest node to ``x``."""
        return int(round((x - self.x_min) / self.dx))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Solution ``u(t, x)`` sampled at stored time levels.

    ``values[k]`` holds ``u(times[k], grid.nodes)``. Levels are stored every
    ``stride`` solver steps of size ``dt``; the solver can regenerate any
    intermediate step from the nearest stored level (see ``gheat.replay``).
    """

    grid: Grid
    values: np.ndarray
    times: np.ndarray
    dt: float
    stride: int
    params: GParams
    boundary: str = "freeze"

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def n_steps(self) -> int:
        """Number of solver steps covered by the stored levels."""
        return (len(self.times) - 1) * self.stride

    def level_index(self, t: float) -> int | None:
        """Stored-level index exactly at time ``t``, or None."""
        k = t / (self.dt * self.stride)
        kr = int(round(k))
        if abs(k - kr) < 1e-9 and 0 <= kr < len(self.times):
            return kr
        return None


@dataclass(frozen=True, eq=False)
class Measure:
    """Discrete probability measure with sorted support."""

    points: np.ndarray
    weights: np.ndarray
    atol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        w = np.ascontiguousarray(self.weights, dtype=float)
        if pts.ndim != 1 or pts.shape != w.shape or pts.size == 0:
            raise ValueError("points and weights must be equal-length 1-D arrays")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("support points must be strictly increasing")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > self.atol:
            raise ValueError(f"weights sum to {w.sum():.16g}, not 1")
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, x0: float = 0.0) -> "Measure":
        return cls(np.array([float(x0)]), np.array([1.0]))

    def expectation(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return measure_expectation(self, f)

    def mean(self) -> float:
        return float(self.weights @ self.points)

    def variance(self) -> float:
        m = self.mean()
        return float(self.weights @ (self.points - m) ** 2)

    def mass_outside(self, a: float, b: float) -> float:
        out = (self.points < a) | (self.points > b)
        return float(self.weights[out].sum())


def measure_expectation(m: Measure, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """``sum_i w_i f(x_i)``; ``f`` must accept an array."""
    vals = np.broadcast_to(np.asarray(f(m.points), dtype=float), m.points.shape)
    return float(m.weights @ vals)


def gaussian_measure(sigma: float, n: int = 4001, width: float = 8.0) -> Measure:
    """Midpoint-rule discretization of N(0, sigma^2) on ``[-width*sigma, width*sigma]``.

    ``sigma = 0`` gives the point mass at 0.
    """
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return Measure.point_mass(0.0)
    h = 2.0 * width * sigma / n
    pts = -width * sigma + h * (np.arange(n) + 0.5)
    w = np.exp(-0.5 * (pts / sigma) ** 2)
    return Measure(pts, w / w.sum())
