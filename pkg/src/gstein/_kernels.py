"""Compiled inner loops for the explicit schemes.

All kernels operate in place on float64 arrays over the nodes of a uniform
grid. Boundary codes: 0 = freeze (end values never change), 1 = linear
extrapolation of the end values from the two nearest interior nodes.
"""

import math

import numba
import numpy as np

FREEZE = 0
LINEAR_EXTRAPOLATE = 1

NODE = 0
HARMONIC = 1


@numba.njit(cache=True)
def _step(u, tmp, dt, inv_dx2, var_lo, var_hi, boundary):
    n = u.size
    for i in range(1, n - 1):
        # (left + right) first keeps the update bitwise mirror-symmetric
        d2 = ((u[i + 1] + u[i - 1]) - 2.0 * u[i]) * inv_dx2
        if d2 >= 0.0:
            tmp[i] = u[i] + dt * 0.5 * var_hi * d2
        else:
            tmp[i] = u[i] + dt * 0.5 * var_lo * d2
    if boundary == LINEAR_EXTRAPOLATE:
        tmp[0] = 2.0 * tmp[1] - tmp[2]
        tmp[n - 1] = 2.0 * tmp[n - 2] - tmp[n - 3]
    else:
        tmp[0] = u[0]
        tmp[n - 1] = u[n - 1]
    for i in range(n):
        u[i] = tmp[i]


@numba.njit(cache=True)
def solve_stored(u0, n_store, stride, dt, dx, var_lo, var_hi, boundary):
    """March ``(n_store - 1) * stride`` steps, keeping every ``stride``-th level."""
    n = u0.size
    out = np.empty((n_store, n))
    u = u0.copy()
    tmp = np.empty(n)
    inv = 1.0 / (dx * dx)
    out[0, :] = u
    for k in range(1, n_store):
        for _ in range(stride):
            _step(u, tmp, dt, inv, var_lo, var_hi, boundary)
        out[k, :] = u
    return out


@numba.njit(cache=True)
def replay(u_start, count, dt, dx, var_lo, var_hi, boundary):
    """Rows ``0..count-1`` are the levels reached after 0..count-1 steps from ``u_start``."""
    n = u_start.size
    rows = np.empty((count, n))
    u = u_start.copy()
    tmp = np.empty(n)
    inv = 1.0 / (dx * dx)
    for k in range(count):
        rows[k, :] = u
        if k + 1 < count:
            _step(u, tmp, dt, inv, var_lo, var_hi, boundary)
    return rows


@numba.njit(cache=True)
def _g(d2, var_lo, var_hi):
    if d2 >= 0.0:
        return 0.5 * var_hi * d2
    return 0.5 * var_lo * d2


@numba.njit(cache=True)
def _frac_nonneg(a, b):
    """Fraction of a segment on which the linear interpolant a -> b is >= 0."""
    if a >= 0.0 and b >= 0.0:
        return 1.0
    if a < 0.0 and b < 0.0:
        return 0.0
    z = a / (a - b)
    if a >= 0.0:
        return z
    return 1.0 - z


@numba.njit(cache=True)
def coefficients(u, dx, var_lo, var_hi, tie_tol, mode, a):
    """Squared volatility ``a[i]`` at interior nodes for one level ``u``.

    NODE: bang-bang ``var_hi`` where the second difference is >= -tie_tol.
    HARMONIC: the switch point inside each dual cell is located on the
    piecewise-linear interpolant of G(D^2 u), which is C^1 across switches,
    and the cell gets the harmonic mean of the two variances weighted by the
    cell fractions (flux continuity of the forward equation).
    End nodes get 0 (absorbing).
    """
    n = u.size
    inv = 1.0 / (dx * dx)
    a[0] = 0.0
    a[n - 1] = 0.0
    if mode == NODE:
        for i in range(1, n - 1):
            d2 = ((u[i + 1] + u[i - 1]) - 2.0 * u[i]) * inv
            a[i] = var_hi if d2 >= -tie_tol else var_lo
        return
    gtie = 0.5 * var_lo * tie_tol
    g = np.empty(n)
    for i in range(1, n - 1):
        d2 = ((u[i + 1] + u[i - 1]) - 2.0 * u[i]) * inv
        gi = _g(d2, var_lo, var_hi)
        if gi < 0.0 and gi >= -gtie:
            gi = 0.0
        g[i] = gi
    g[0] = g[1]
    g[n - 1] = g[n - 2]
    for i in range(1, n - 1):
        th = 0.5 * _frac_nonneg(0.5 * (g[i - 1] + g[i]), g[i]) \
            + 0.5 * _frac_nonneg(g[i], 0.5 * (g[i] + g[i + 1]))
        if th >= 1.0:
            a[i] = var_hi
        elif th <= 0.0:
            a[i] = var_lo
        elif var_lo == 0.0:
            a[i] = 0.0
        else:
            a[i] = 1.0 / (th / var_hi + (1.0 - th) / var_lo)


@numba.njit(cache=True)
def forward_block(rho, rows, count, dt, dx, var_lo, var_hi, tie_tol, mode):
    """Apply the transposed scheme for levels ``rows[count-1], ..., rows[0]``."""
    n = rho.size
    c = dt / (2.0 * dx * dx)
    a = np.empty(n)
    new = np.empty(n)
    for r in range(count - 1, -1, -1):
        coefficients(rows[r], dx, var_lo, var_hi, tie_tol, mode, a)
        new[0] = rho[0] + c * a[1] * rho[1]
        new[n - 1] = rho[n - 1] + c * a[n - 2] * rho[n - 2]
        for j in range(1, n - 1):
            new[j] = rho[j] * (1.0 - 2.0 * c * a[j]) + c * (a[j - 1] * rho[j - 1] + a[j + 1] * rho[j + 1])
        for j in range(n):
            rho[j] = new[j]


@numba.njit(cache=True)
def euler_paths(x, normals, sigma_rows, h, x_min, dx):
    """Euler-Maruyama ``X += sigma(level, nearest node) sqrt(h) Z``.

    ``sigma_rows[m]`` is the volatility profile used on physical step ``m``.
    """
    n_nodes = sigma_rows.shape[1]
    sh = math.sqrt(h)
    for m in range(normals.shape[0]):
        for p in range(x.size):
            j = int(math.floor((x[p] - x_min) / dx + 0.5))
            if j < 0:
                j = 0
            elif j > n_nodes - 1:
                j = n_nodes - 1
            x[p] += sigma_rows[m, j] * sh * normals[m, p]
