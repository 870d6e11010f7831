"""Explicit monotone solver for the G-heat equation ``u_t = G(u_xx)``, ``u(0) = phi``.

The update is

    u[n+1, i] = u[n, i] + dt * G((u[n, i+1] - 2 u[n, i] + u[n, i-1]) / dx^2),

which is monotone (nondecreasing in every stencil value) whenever
``dt * sigma_hi^2 / dx^2 <= 1``; monotone, stable and consistent schemes
converge to the viscosity solution. ``u(1, 0)`` is the G-normal expectation
of ``phi``; more generally ``u(t, x) = N_G[phi(x + sqrt(t) .)]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .gcore import (CFLError, DomainError, GParams, Grid, ScalarField,
                    UnboundedDataError)
from .testfns import TestFunction

BOUNDARIES = {"freeze": _kernels.FREEZE, "linear_extrapolate": _kernels.LINEAR_EXTRAPOLATE}

#: stored levels per unit time; unit time is always a whole number of steps
LEVELS_PER_UNIT = 200


@dataclass(frozen=True)
class SolveConfig:
    """Grid plus solver options.

    Parameters
    ----------
    grid : Grid
        Space-time grid. ``grid.dt=None`` selects the step automatically.
    boundary : {'freeze', 'linear_extrapolate'}
        Lateral boundary treatment.
    cfl_safety : float
        Fraction of the CFL limit used by the automatic step, in (0, 1].
    data_cap : float
        Largest admissible ``max |phi|`` on the grid nodes.
    """

    grid: Grid = Grid()
    boundary: str = "freeze"
    cfl_safety: float = 0.9
    data_cap: float = 1e6

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {sorted(BOUNDARIES)}")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")

    def with_grid(self, **changes) -> "SolveConfig":
        return replace(self, grid=replace(self.grid, **changes))

    def refined(self, factor: int = 2) -> "SolveConfig":
        """Same domain with ``dx`` divided by ``factor`` (automatic dt)."""
        g = self.grid
        return replace(self, grid=replace(g, nx=g.nx * factor, dt=None))

    def time_step(self, p: GParams) -> tuple[float, int]:
        """Return ``(dt, stride)``: the solver step and the number of steps between
        stored levels. The automatic step is the largest ``1/M`` with ``M`` a
        multiple of LEVELS_PER_UNIT and ``dt <= cfl_safety dx^2 / sigma_hi^2``."""
        g = self.grid
        if g.dt is not None:
            g.check_cfl(g.dt, p)
            stride = max(1, int(round(1.0 / (LEVELS_PER_UNIT * g.dt))))
            return g.dt, stride
        if p.var_hi == 0.0:
            return 1.0 / LEVELS_PER_UNIT, 1
        m0 = p.var_hi / (self.cfl_safety * g.dx ** 2)
        stride = max(1, math.ceil(m0 / LEVELS_PER_UNIT - 1e-12))
        dt = 1.0 / (stride * LEVELS_PER_UNIT)
        g.check_cfl(dt, p)
        return dt, stride


def default_config(p: GParams, dx: float = 0.04, t_max: float = 1.5,
                   x_max: float | None = None, **kwargs) -> SolveConfig:
    """Symmetric domain ``[-x_max, x_max]`` with ``x_max = max(10, 6 sigma_hi)`` by
    default, wide enough that the forward law loses < 1e-8 through the ends."""
    if x_max is None:
        x_max = max(10.0, 6.0 * p.sigma_hi)
    return SolveConfig(Grid.from_dx(dx, x_max=x_max, t_max=t_max), **kwargs)


def initial_values(phi: TestFunction, cfg: SolveConfig) -> np.ndarray:
    u0 = np.asarray(phi(cfg.grid.nodes), dtype=float)
    if not np.all(np.isfinite(u0)):
        raise UnboundedDataError(f"{phi.name}: non-finite initial data")
    sup = float(np.max(np.abs(u0)))
    if sup > cfg.data_cap:
        raise UnboundedDataError(
            f"{phi.name}: max |phi| = {sup:.4g} on the grid exceeds cap {cfg.data_cap:.4g}")
    return u0


def solve_g_heat(phi: TestFunction, p: GParams, cfg: SolveConfig) -> ScalarField:
    """Solve the G-heat equation with initial data ``phi`` up to ``cfg.grid.t_max``.

    Levels are stored every ``stride`` steps (spacing ``1/LEVELS_PER_UNIT`` for the
    automatic step); the remaining steps can be regenerated with :func:`replay`.

    Raises
    ------
    CFLError
        If an explicit ``dt`` violates ``dt sigma_hi^2 / dx^2 <= 1``.
    UnboundedDataError
        If ``max |phi|`` on the grid exceeds ``cfg.data_cap``.
    """
    dt, stride = cfg.time_step(p)
    u0 = initial_values(phi, cfg)
    g = cfg.grid
    n_store = int(math.ceil(g.t_max / (dt * stride) - 1e-9)) + 1
    values = _kernels.solve_stored(u0, n_store, stride, dt, g.dx, p.var_lo, p.var_hi,
                                   BOUNDARIES[cfg.boundary])
    times = np.arange(n_store) * (dt * stride)
    return ScalarField(g, values, times, dt, stride, p, cfg.boundary)


def replay(field: ScalarField, level: int, count: int) -> np.ndarray:
    """Solver levels ``level, ..., level + count - 1`` regenerated from the nearest
    stored level at or below ``level``. Bitwise identical to the original solve."""
    base, offset = divmod(level, field.stride)
    if base >= len(field.times) or level + count - 1 > field.n_steps:
        raise DomainError(f"levels {level}..{level + count - 1} beyond the solved range")
    rows = _kernels.replay(field.values[base], offset + count, field.dt, field.grid.dx,
                           field.params.var_lo, field.params.var_hi,
                           BOUNDARIES[field.boundary])
    return rows[offset:]


def field_value(field: ScalarField, t: float, x: float) -> float:
    """Bilinear interpolation of the stored levels at ``(t, x)``."""
    g = field.grid
    T = field.times[-1]
    if not (-1e-12 <= t <= T + 1e-12):
        raise DomainError(f"t = {t} outside [0, {T}]")
    if not (g.x_min <= x <= g.x_max):
        raise DomainError(f"x = {x} outside [{g.x_min}, {g.x_max}]")
    h = field.times[1] - field.times[0] if len(field.times) > 1 else 1.0
    kt = min(max(t / h, 0.0), len(field.times) - 1.0)
    k0 = min(int(math.floor(kt)), len(field.times) - 2) if len(field.times) > 1 else 0
    wt = kt - k0
    xs = field.x
    row0 = np.interp(x, xs, field.values[k0])
    if len(field.times) == 1 or wt == 0.0:
        return float(row0)
    row1 = np.interp(x, xs, field.values[k0 + 1])
    return float((1.0 - wt) * row0 + wt * row1)


def g_expectation(phi: TestFunction, t: float, x: float, p: GParams,
                  cfg: SolveConfig) -> float:
    """``N_G[phi(x + sqrt(t) .)] = u(t, x)``; ``N_G[phi]`` is the case ``(1, 0)``."""
    if t < 0.0 or t > cfg.grid.t_max:
        raise DomainError(f"t = {t} outside [0, {cfg.grid.t_max}]")
    g = cfg.grid
    if not (g.x_min < x < g.x_max):
        raise DomainError(f"x = {x} not in the grid interior")
    if t == 0.0:
        return float(phi(x))
    dt, stride = cfg.time_step(p)
    t_solve = min(g.t_max, math.ceil(t / (dt * stride) - 1e-9) * dt * stride)
    field = solve_g_heat(phi, p, cfg.with_grid(t_max=max(t_solve, dt * stride)))
    return field_value(field, t, x)


def _probe_margin(field: ScalarField, t: float, x: float, need_t: bool) -> float:
    g = field.grid
    h = field.times[1] - field.times[0]
    if need_t and not (t - h >= -1e-12 and t + h <= field.times[-1] + 1e-12):
        raise DomainError(f"time probe at t = {t} needs [t - {h:g}, t + {h:g}] inside the solve")
    if not (g.x_min + 2 * g.dx <= x <= g.x_max - 2 * g.dx):
        raise DomainError(f"space probe at x = {x} too close to the boundary")
    return h


def time_derivative(field: ScalarField, t: float, x: float) -> float:
    """Centered difference of stored levels ``t -+ h`` (h = stored spacing)."""
    h = _probe_margin(field, t, x, True)
    return (field_value(field, t + h, x) - field_value(field, t - h, x)) / (2.0 * h)


def space_derivative(field: ScalarField, t: float, x: float) -> float:
    dx = field.grid.dx
    _probe_margin(field, t, x, False)
    return (field_value(field, t, x + dx) - field_value(field, t, x - dx)) / (2.0 * dx)


def second_space_derivative(field: ScalarField, t: float, x: float) -> float:
    dx = field.grid.dx
    _probe_margin(field, t, x, False)
    return (field_value(field, t, x + dx) - 2.0 * field_value(field, t, x)
            + field_value(field, t, x - dx)) / (dx * dx)


def dump_field_csv(field: ScalarField, path, stride: int = 1) -> None:
    """CSV: header ``t, x_0, ..., x_nx``; one row per ``stride``-th stored level."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [repr(float(v)) for v in field.x])
        for k in range(0, len(field.times), stride):
            w.writerow([repr(float(field.times[k]))] + [repr(float(v)) for v in field.values[k]])


def check_cfl(cfg: SolveConfig, p: GParams) -> None:
    """Raise CFLError now rather than at solve time."""
    cfg.time_step(p)


__all__ = [
    "SolveConfig", "default_config", "solve_g_heat", "g_expectation", "field_value",
    "time_derivative", "space_derivative", "second_space_derivative", "replay",
    "dump_field_csv", "check_cfl", "CFLError", "LEVELS_PER_UNIT",
]
