"""Maximizing volatility policy and the law it induces.

Given the solved field ``u``, the control ``sigma*(t, x)`` picks ``sigma_hi``
where ``u_xx >= 0`` and ``sigma_lo`` elsewhere. The law of
``dX = sigma*(1 - t, X) dW``, ``X_0 = 0``, at time 1 attains ``N_G[phi]``.

Two discretizations are provided:

* :func:`forward_measure` runs the transpose of the backward scheme, so for
  the node policy ``mu[phi]`` equals the discrete ``u(1, 0)`` up to rounding;
  the default ``harmonic`` interface resolves the switch point inside each
  cell, which removes an O(dx) oscillation from the drift moments.
* :func:`mc_forward_measure` simulates Euler-Maruyama paths.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .gcore import (DomainError, GParams, Grid, MassLeakageError, Measure,
                    NumericalContractError, ScalarField)
from .gheat import SolveConfig, field_value, replay, solve_g_heat
from .testfns import TestFunction

INTERFACES = {"node": _kernels.NODE, "harmonic": _kernels.HARMONIC}

MASS_DRIFT_TOL = 1e-10
LEAK_TOL = 1e-8
MC_BLOCK = 16384
REFINE = 16


def default_tie_tol(p: GParams, dx: float) -> float:
    return 1e-9 * p.var_hi / (dx * dx)


class VolatilityPolicy:
    """Bang-bang control on the solver grid.

    Row ``n`` is the volatility used while the backward solution moves from
    level ``n`` to ``n + 1``; in physical (forward) time this is the step that
    ends at ``t_stop - n dt``. Rows are regenerated on demand from the stored
    checkpoints of the field, so nothing larger than one block is held unless
    :attr:`sigma` is requested.
    """

    def __init__(self, field: ScalarField, tie_tol: float | None = None,
                 t_stop: float | None = None):
        self.field = field
        self.params = field.params
        self.grid: Grid = field.grid
        self.dt = field.dt
        self.tie_tol = default_tie_tol(self.params, self.grid.dx) if tie_tol is None else float(tie_tol)
        t_stop = field.times[-1] if t_stop is None else t_stop
        n = int(round(t_stop / field.dt))
        if abs(n * field.dt - t_stop) > 1e-9 or n < 1:
            raise DomainError(f"t_stop = {t_stop} is not a positive multiple of dt = {field.dt}")
        if n > field.n_steps:
            raise DomainError(f"t_stop = {t_stop} beyond the solved horizon")
        self.n_levels = n
        self._sigma = None

    @property
    def t_stop(self) -> float:
        return self.n_levels * self.dt

    def _levels(self, base: int) -> np.ndarray:
        """Solver levels of block ``base`` (at most ``stride`` rows)."""
        s = self.field.stride
        start = base * s
        return replay(self.field, start, min(s, self.n_levels - start))

    def _var_rows(self, rows: np.ndarray, mode: int) -> np.ndarray:
        p = self.params
        out = np.empty_like(rows)
        for k in range(rows.shape[0]):
            _kernels.coefficients(rows[k], self.grid.dx, p.var_lo, p.var_hi,
                                  self.tie_tol, mode, out[k])
        return out

    def sigma_rows(self, levels) -> np.ndarray:
        """Volatility profiles for the requested levels (interior nodes; ends
        repeat their neighbour)."""
        levels = np.asarray(levels, dtype=np.int64)
        if levels.size and (levels.min() < 0 or levels.max() >= self.n_levels):
            raise DomainError("policy level out of range")
        out = np.empty((levels.size, self.grid.nx + 1))
        stride = self.field.stride
        bases = levels // stride
        for b in np.unique(bases):
            rows = self._levels(int(b))
            sel = np.nonzero(bases == b)[0]
            var = self._var_rows(rows[levels[sel] - b * stride], _kernels.NODE)
            out[sel] = np.sqrt(var)
        out[:, 0] = out[:, 1]
        out[:, -1] = out[:, -2]
        return out

    @property
    def sigma(self) -> np.ndarray:
        """Full ``(n_levels, nx + 1)`` array; entries lie in ``{sigma_lo, sigma_hi}``."""
        if self._sigma is None:
            self._sigma = self.sigma_rows(np.arange(self.n_levels))
            self._sigma.flags.writeable = False
        return self._sigma


def optimal_policy(field: ScalarField, p: GParams | None = None,
                   tie_tol: float | None = None, t_stop: float | None = None) -> VolatilityPolicy:
    """``sigma_hi`` where the central second difference of ``u`` is ``>= -tie_tol``,
    ``sigma_lo`` otherwise. ``t_stop`` defaults to the full solved horizon."""
    if p is not None and p != field.params:
        raise ValueError("p does not match the parameters the field was solved with")
    return VolatilityPolicy(field, tie_tol, t_stop)


@dataclass(frozen=True, eq=False)
class RealizationResult:
    measure: Measure
    policy: VolatilityPolicy
    gap: float
    mc_measure: Measure | None = None
    mc_gap: float | None = None
    n_g: float = float("nan")
    mu_phi: float = float("nan")
    mass_drift: float = 0.0
    leaked_mass: float = 0.0


def _check_target(policy: VolatilityPolicy, t_target: float) -> int:
    n = int(round(t_target / policy.dt))
    if n < 0 or abs(n * policy.dt - t_target) > 1e-9:
        raise DomainError(f"t_target = {t_target} is not a multiple of dt = {policy.dt}")
    if n > policy.n_levels:
        raise DomainError(f"t_target = {t_target} exceeds the policy horizon {policy.t_stop}")
    return n


def forward_density(policy: VolatilityPolicy, t_target: float = 1.0,
                    interface: str = "harmonic") -> np.ndarray:
    """Unnormalized node weights after ``t_target`` forward steps from ``delta_0``.

    Forward step ``k`` uses the policy of level ``N - 1 - k`` where ``N`` is the
    policy horizon in steps, so the law is the one attaining ``u(t_target, 0)``
    when the policy horizon equals ``t_target``.
    """
    if interface not in INTERFACES:
        raise ValueError(f"interface must be one of {sorted(INTERFACES)}")
    n = _check_target(policy, t_target)
    g = policy.grid
    p = policy.params
    if policy.dt * p.var_hi / g.dx ** 2 > 1.0 + 1e-12:
        raise NumericalContractError("forward scheme violates its CFL bound")
    rho = np.zeros(g.nx + 1)
    rho[g.node_index(0.0)] = 1.0
    N = policy.n_levels
    lo_level = N - n  # last level applied
    stride = policy.field.stride
    mode = INTERFACES[interface]
    for b in range((N - 1) // stride, lo_level // stride - 1, -1):
        rows = policy._levels(b)
        first = max(lo_level - b * stride, 0)
        block = np.ascontiguousarray(rows[first:])
        _kernels.forward_block(rho, block, block.shape[0], policy.dt, g.dx,
                               p.var_lo, p.var_hi, policy.tie_tol, mode)
    return rho


def density_measure(grid: Grid, rho: np.ndarray, refine: int = REFINE) -> Measure:
    """Turn node weights into a Measure.

    ``refine = 1`` keeps the point masses at the nodes. Otherwise the node
    weights are read as samples of a density, interpolated linearly, and the
    interpolant is sampled at ``refine`` midpoints per cell. Expectations of
    integrands with kinks (such as ``G(phi'')``) then converge regularly
    instead of depending on where each kink falls between two nodes.
    """
    rho = np.asarray(rho, dtype=float)
    if refine == 1:
        return Measure(grid.nodes, rho)
    if refine < 1:
        raise ValueError("refine must be >= 1")
    th = (np.arange(refine) + 0.5) / refine
    w = (np.outer(rho[:-1], 1.0 - th) + np.outer(rho[1:], th)).ravel()
    pts = grid.x_min + grid.dx * (np.arange(grid.nx * refine) + 0.5) / refine
    return Measure(pts, w / w.sum())


def forward_measure(policy: VolatilityPolicy, t_target: float = 1.0,
                    interface: str = "harmonic", refine: int = REFINE, *,
                    diagnostics: bool = False):
    """Law at ``t_target`` of the controlled diffusion started at 0.

    See :func:`density_measure` for ``refine``.

    Raises
    ------
    MassLeakageError
        If more than 1e-8 of the mass reaches the absorbing end nodes.
    NumericalContractError
        If the total weight drifts by more than 1e-10.
    """
    rho = forward_density(policy, t_target, interface)
    total = float(rho.sum())
    drift = abs(total - 1.0)
    leaked = float(rho[0] + rho[-1])
    if drift > MASS_DRIFT_TOL:
        raise NumericalContractError(f"forward mass drift {drift:.3g} exceeds {MASS_DRIFT_TOL}")
    if leaked > LEAK_TOL:
        raise MassLeakageError(f"mass {leaked:.3g} reached the lateral boundary")
    m = density_measure(policy.grid, rho / total, refine)
    if diagnostics:
        return m, drift, leaked
    return m


def _stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def mc_forward_measure(policy: VolatilityPolicy, t_target: float = 1.0,
                       n_paths: int = 100_000, seed: int = 0,
                       steps_per_unit: int = 200) -> Measure:
    """Empirical law of Euler-Maruyama paths binned to the nearest grid node.

    Paths are simulated in fixed blocks of ``MC_BLOCK``; block ``b`` draws its
    normals from Philox keyed by ``(seed, b)``, so results do not depend on
    how the work is scheduled. The step ``h = 1/steps_per_unit`` must be a
    whole number of solver steps.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    n = _check_target(policy, t_target)
    K = int(round(1.0 / (steps_per_unit * policy.dt)))
    if K < 1 or abs(K * policy.dt * steps_per_unit - 1.0) > 1e-9 or n % K:
        raise ValueError("steps_per_unit must divide the solver steps per unit time and t_target")
    n_mc = n // K
    N = policy.n_levels
    levels = N - 1 - K * np.arange(n_mc)
    sig = np.ascontiguousarray(policy.sigma_rows(levels))
    g = policy.grid
    h = K * policy.dt
    counts = np.zeros(g.nx + 1, dtype=np.int64)
    for b in range(math.ceil(n_paths / MC_BLOCK)):
        nb = min(MC_BLOCK, n_paths - b * MC_BLOCK)
        z = _stream(seed, b).standard_normal((n_mc, nb))
        x = np.zeros(nb)
        _kernels.euler_paths(x, z, sig, h, g.x_min, g.dx)
        j = np.clip(np.floor((x - g.x_min) / g.dx + 0.5).astype(np.int64), 0, g.nx)
        counts += np.bincount(j, minlength=g.nx + 1)
    return Measure(g.nodes, counts / n_paths, atol=1e-10)


def realize(phi: TestFunction, p: GParams, cfg: SolveConfig, mc_paths: int = 0,
            seed: int = 0, *, interface: str = "harmonic",
            tie_tol: float | None = None, refine: int = REFINE,
            field: ScalarField | None = None) -> RealizationResult:
    """Solve, extract the policy up to t = 1, push ``delta_0`` forward, and
    compare ``mu[phi]`` with ``N_G[phi]``."""
    if field is None:
        if cfg.grid.t_max < 1.0:
            cfg = cfg.with_grid(t_max=1.0)
        field = solve_g_heat(phi, p, cfg)
    n_g = field_value(field, 1.0, 0.0)
    policy = optimal_policy(field, None, tie_tol, t_stop=1.0)
    measure, drift, leaked = forward_measure(policy, 1.0, interface, refine, diagnostics=True)
    mu_phi = measure.expectation(phi)
    mc_measure = mc_gap = None
    if mc_paths:
        mc_measure = mc_forward_measure(policy, 1.0, mc_paths, seed)
        mc_gap = abs(mc_measure.expectation(phi) - mu_phi)
    return RealizationResult(measure, policy, abs(mu_phi - n_g), mc_measure, mc_gap,
                             n_g, mu_phi, drift, leaked)


def write_measure_csv(m: Measure, path, drop_zero: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "weight"])
        for x, wt in zip(m.points, m.weights):
            if drop_zero and wt == 0.0:
                continue
            w.writerow([repr(float(x)), repr(float(wt))])


__all__ = [
    "VolatilityPolicy", "RealizationResult", "optimal_policy", "forward_density",
    "forward_measure", "mc_forward_measure", "realize", "write_measure_csv",
    "default_tie_tol", "density_measure",
]
