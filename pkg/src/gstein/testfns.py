"""C^2 test functions with exact first and second derivatives.

Every evaluator is vectorized: it takes an ndarray (or scalar) and returns the
same shape. Bounded members record their sup-norm; the G-heat solver refuses
data whose sup-norm exceeds its cap.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .gcore import GParams, DegenerateBandError, NumericalContractError, g_eval, g_inverse

Evaluator = Callable[[np.ndarray], np.ndarray]


class Kind(str, enum.Enum):
    PHI_BETA = "phi_beta"
    COSINE = "cosine"
    GAUSSIAN_BUMP = "gaussian_bump"
    COMPACT_BUMP = "compact_bump"
    SMOOTH_CLIP_POLY = "smooth_clip_poly"
    SMOOTH_STEP = "smooth_step"
    CONSTANT = "constant"
    POLYNOMIAL = "polynomial"
    TABULATED = "tabulated"
    DERIVED = "derived"


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A named function with value / first / second derivative evaluators.

    ``d1`` and ``d2`` may be None for data that is only continuous (for
    instance the Stein operator applied to a test function); such objects
    can be fed to the solver but not to the Stein residual.
    """

    __test__ = False  # not a pytest class

    name: str
    kind: Kind
    f: Evaluator
    d1: Evaluator | None = None
    d2: Evaluator | None = None
    params: dict = field(default_factory=dict)
    sup_norm: float = math.inf
    table: tuple | None = field(default=None, repr=False)

    def __call__(self, x):
        return _apply(self.f, x)

    def eval1(self, x):
        if self.d1 is None:
            raise ValueError(f"{self.name}: first derivative not available")
        return _apply(self.d1, x)

    def eval2(self, x):
        if self.d2 is None:
            raise ValueError(f"{self.name}: second derivative not available")
        return _apply(self.d2, x)

    @property
    def has_derivatives(self) -> bool:
        return self.d1 is not None and self.d2 is not None

    def shifted(self, c: float, name: str | None = None) -> "TestFunction":
        """``x -> f(x - c)``."""
        f, d1, d2 = self.f, self.d1, self.d2
        return TestFunction(
            name or f"{self.name}_shift_{c:g}", self.kind,
            lambda x: f(x - c),
            None if d1 is None else (lambda x: d1(x - c)),
            None if d2 is None else (lambda x: d2(x - c)),
            {**self.params, "shift": c}, self.sup_norm)

    def scaled(self, lam: float, name: str | None = None) -> "TestFunction":
        """``x -> f(lam * x)``."""
        f, d1, d2 = self.f, self.d1, self.d2
        return TestFunction(
            name or f"{self.name}_scale_{lam:g}", self.kind,
            lambda x: f(lam * x),
            None if d1 is None else (lambda x: lam * d1(lam * x)),
            None if d2 is None else (lambda x: lam * lam * d2(lam * x)),
            {**self.params, "scale": lam}, self.sup_norm)

    def times(self, c: float, name: str | None = None) -> "TestFunction":
        """``x -> c * f(x)``."""
        f, d1, d2 = self.f, self.d1, self.d2
        return TestFunction(
            name or f"{c:g}*{self.name}", self.kind,
            lambda x: c * f(x),
            None if d1 is None else (lambda x: c * d1(x)),
            None if d2 is None else (lambda x: c * d2(x)),
            dict(self.params), abs(c) * self.sup_norm)


def _apply(fn: Evaluator, x):
    arr = np.asarray(x, dtype=float)
    out = np.asarray(fn(arr), dtype=float)
    out = np.broadcast_to(out, arr.shape)
    if out.ndim == 0:
        return float(out)
    return np.array(out)


def _sampled_sup(f: Evaluator, a: float = -40.0, b: float = 40.0, n: int = 80001) -> float:
    return float(np.max(np.abs(f(np.linspace(a, b, n)))))


# ---------------------------------------------------------------------------
# phi_beta: the piecewise-cosine eigenfunction, G(phi'') = -(sigma_mid^2 / 2) phi
# ---------------------------------------------------------------------------

def _phi_beta_branches(x, beta: float, order: int):
    x = np.asarray(x, dtype=float)
    junction = math.pi / (1.0 + beta)
    # map into the fundamental cell [-pi/(1+beta), (2 beta + 1) pi/(1+beta))
    y = x - 2.0 * math.pi * np.floor((x + junction) / (2.0 * math.pi))
    k1 = 0.5 * (1.0 + beta)
    k2 = (1.0 + beta) / (2.0 * beta)
    a1 = 2.0 / (1.0 + beta)
    a2 = 2.0 * beta / (1.0 + beta)
    ph2 = (beta - 1.0) / (2.0 * beta) * math.pi
    th1 = k1 * y
    th2 = k2 * y + ph2
    if order == 0:
        b1, b2 = a1 * np.cos(th1), a2 * np.cos(th2)
    elif order == 1:
        b1, b2 = -a1 * k1 * np.sin(th1), -a2 * k2 * np.sin(th2)
    else:
        b1, b2 = -a1 * k1 * k1 * np.cos(th1), -a2 * k2 * k2 * np.cos(th2)
    out = np.where(y < junction, b1, b2)
    return float(out) if out.ndim == 0 else out


def phi_beta(x, p: GParams):
    """The 2 pi-periodic piecewise cosine with beta = sigma_hi / sigma_lo.

    On ``[-pi/(1+beta), pi/(1+beta))`` it is ``2/(1+beta) cos((1+beta) x / 2)``;
    on ``[pi/(1+beta), (2 beta+1) pi/(1+beta))`` it is
    ``2 beta/(1+beta) cos((1+beta) x / (2 beta) + (beta-1) pi / (2 beta))``.
    Value and slope match at the junctions, and the curvature vanishes there,
    so the function is C^2.
    """
    return _phi_beta_branches(x, p.beta(), 0)


def phi_beta_d1(x, p: GParams):
    return _phi_beta_branches(x, p.beta(), 1)


def phi_beta_d2(x, p: GParams):
    return _phi_beta_branches(x, p.beta(), 2)


def phi_beta_function(p: GParams, name: str = "phi_beta") -> TestFunction:
    beta = p.beta()
    return TestFunction(
        name, Kind.PHI_BETA,
        lambda x: _phi_beta_branches(x, beta, 0),
        lambda x: _phi_beta_branches(x, beta, 1),
        lambda x: _phi_beta_branches(x, beta, 2),
        {"beta": beta}, 2.0 * beta / (1.0 + beta))


def phi_beta_eigenvalue(p: GParams) -> float:
    """Decay rate ``sigma_mid^2 / 2`` of ``exp(-rate t) phi_beta``."""
    s = p.sigma_mid()
    return 0.5 * s * s


# ---------------------------------------------------------------------------
# elementary members
# ---------------------------------------------------------------------------

def cosine(freq: float = 1.0, name: str = "cos") -> TestFunction:
    return TestFunction(
        name, Kind.COSINE,
        lambda x: np.cos(freq * x),
        lambda x: -freq * np.sin(freq * x),
        lambda x: -freq * freq * np.cos(freq * x),
        {"freq": freq}, 1.0)


def gaussian_bump(name: str = "gaussian_bump") -> TestFunction:
    return TestFunction(
        name, Kind.GAUSSIAN_BUMP,
        lambda x: np.exp(-0.5 * x * x),
        lambda x: -x * np.exp(-0.5 * x * x),
        lambda x: (x * x - 1.0) * np.exp(-0.5 * x * x),
        {}, 1.0)


def compact_bump(radius: float = 2.5, name: str = "compact_bump") -> TestFunction:
    """``exp(1 - 1/(1 - (x/r)^2))`` on ``|x| < r``, zero outside; peak value 1."""
    r = float(radius)

    def parts(x):
        s = np.asarray(x, dtype=float) / r
        q = 1.0 - s * s
        inside = q > 1e-6
        qs = np.where(inside, q, 1.0)
        f = np.where(inside, np.exp(1.0 - 1.0 / qs), 0.0)
        return s, qs, inside, f

    def f0(x):
        return parts(x)[3]

    def f1(x):
        s, q, inside, f = parts(x)
        return np.where(inside, f * (-2.0 * s / (r * q * q)), 0.0)

    def f2(x):
        s, q, inside, f = parts(x)
        val = f * (4.0 * s * s / (r * r * q ** 4) - 2.0 / (r * r) * (1.0 / q ** 2 + 4.0 * s * s / q ** 3))
        return np.where(inside, val, 0.0)

    return TestFunction(name, Kind.COMPACT_BUMP, f0, f1, f2, {"radius": r}, 1.0)


def smooth_step(width: float = 1.0, name: str = "smooth_step") -> TestFunction:
    """``tanh(x / width)``."""
    w = float(width)

    def f1(x):
        c = np.cosh(x / w)
        return 1.0 / (w * c * c)

    def f2(x):
        c = np.cosh(x / w)
        return -2.0 * np.tanh(x / w) / (w * w * c * c)

    return TestFunction(name, Kind.SMOOTH_STEP, lambda x: np.tanh(x / w), f1, f2,
                        {"width": w}, 1.0)


def constant(c: float, name: str | None = None) -> TestFunction:
    c = float(c)
    return TestFunction(
        name or f"const:{c:g}", Kind.CONSTANT,
        lambda x: np.full(np.shape(x), c),
        lambda x: np.zeros(np.shape(x)),
        lambda x: np.zeros(np.shape(x)),
        {"c": c}, abs(c))


def polynomial(coeffs: Sequence[float], name: str | None = None) -> TestFunction:
    """Unbounded polynomial ``sum_k coeffs[k] x^k`` (for quadrature checks only)."""
    P = np.polynomial.Polynomial(list(coeffs))
    P1, P2 = P.deriv(1), P.deriv(2)
    return TestFunction(name or f"poly{tuple(coeffs)}", Kind.POLYNOMIAL,
                        lambda x: P(x), lambda x: P1(x), lambda x: P2(x),
                        {"coeffs": list(map(float, coeffs))}, math.inf)


# ---------------------------------------------------------------------------
# smooth clipping
# ---------------------------------------------------------------------------

def saturate(x, start: float, width: float, order: int = 0):
    """C^2 odd map equal to ``x`` on ``[-start, start]`` and constant
    ``+-(start + width/2)`` beyond ``start + width``."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    sgn = np.where(x < 0.0, -1.0, 1.0)
    u = np.clip(ax - start, 0.0, width) / width
    band = (ax > start) & (ax < start + width)
    if order == 0:
        q = width * (u - u ** 3 + 0.5 * u ** 4)
        return sgn * np.where(ax <= start, ax, start + q)
    if order == 1:
        return np.where(ax <= start, 1.0, 1.0 - 3.0 * u ** 2 + 2.0 * u ** 3)
    return np.where(band, sgn * (-6.0 * u + 6.0 * u ** 2) / width, 0.0)


def clipped(base: TestFunction, start: float, width: float,
            name: str | None = None) -> TestFunction:
    """``base`` composed with :func:`saturate`: unchanged on ``[-start, start]``,
    constant outside ``[-start-width, start+width]``, still C^2."""
    if not base.has_derivatives:
        raise ValueError("clipping needs a function with derivatives")
    f, d1, d2 = base.f, base.d1, base.d2

    def c0(x):
        return f(saturate(x, start, width))

    def c1(x):
        return d1(saturate(x, start, width)) * saturate(x, start, width, 1)

    def c2(x):
        s = saturate(x, start, width)
        s1 = saturate(x, start, width, 1)
        return d2(s) * s1 * s1 + d1(s) * saturate(x, start, width, 2)

    edge = start + 0.5 * width
    kind = Kind.SMOOTH_CLIP_POLY if base.kind in (Kind.POLYNOMIAL, Kind.SMOOTH_CLIP_POLY) else base.kind
    return TestFunction(name or f"{base.name}_clipped", kind, c0, c1, c2,
                        {**base.params, "clip_start": start, "clip_width": width},
                        _sampled_sup(f, -edge, edge, 20001))


def clipped_quadratic(start: float = 8.0, width: float = 1.5,
                      name: str = "clipped_quadratic") -> TestFunction:
    """``x^2`` on ``[-start, start]``, smoothly saturated beyond."""
    return clipped(polynomial([0.0, 0.0, 1.0], "x^2"), start, width, name)


# ---------------------------------------------------------------------------
# tabulated functions
# ---------------------------------------------------------------------------

def tabulated(x, f, f1, f2, name: str = "tabulated", params: dict | None = None) -> TestFunction:
    """Cubic Hermite interpolant through ``(x, f, f1)``; the second derivative is
    the piecewise-linear interpolant of the ``f2`` table. Outside the table the
    value clamps to the end values and the derivatives vanish."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if x.ndim != 1 or not (x.shape == f.shape == f1.shape == f2.shape):
        raise ValueError("tables must be equal-length 1-D arrays")
    if np.any(np.diff(x) <= 0.0):
        raise ValueError("abscissae must be strictly increasing")
    spline = CubicHermiteSpline(x, f, f1, extrapolate=False)
    dspline = spline.derivative()
    a, b = x[0], x[-1]

    def v0(t):
        return spline(np.clip(np.asarray(t, dtype=float), a, b))

    def v1(t):
        t = np.asarray(t, dtype=float)
        inside = (t >= a) & (t <= b)
        return np.where(inside, dspline(np.clip(t, a, b)), 0.0)

    def v2(t):
        t = np.asarray(t, dtype=float)
        inside = (t >= a) & (t <= b)
        return np.where(inside, np.interp(t, x, f2), 0.0)

    info = {"n": int(x.size), "x_min": float(a), "x_max": float(b), **(params or {})}
    return TestFunction(name, Kind.TABULATED, v0, v1, v2, info,
                        float(np.max(np.abs(f))), (x, f, f1, f2))


def write_csv(path, x, f, f1, f2) -> None:
    """Write a tabulated function as CSV with columns ``x, f, f', f''``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "f", "f'", "f''"])
        for row in zip(x, f, f1, f2):
            w.writerow([repr(float(v)) for v in row])


def read_csv(path, name: str | None = None) -> TestFunction:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    body = rows[1:] if not _is_number(rows[0][0]) else rows
    try:
        data = np.array([[float(v) for v in r[:4]] for r in body if r], dtype=float)
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: expected 4 numeric columns x,f,f',f''") from exc
    if data.ndim != 2 or data.shape[1] != 4 or data.shape[0] < 2:
        raise ValueError(f"{path}: expected at least two rows of x,f,f',f''")
    return tabulated(*data.T, name=name or str(path))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def table_of(tf: TestFunction, x=None):
    """Return ``(x, f, f', f'')`` for a tabulated function or samples of any other."""
    if x is None:
        if tf.table is None:
            raise ValueError("non-tabulated functions need explicit sample points")
        return tf.table
    x = np.asarray(x, dtype=float)
    return x, tf(x), tf.eval1(x), tf.eval2(x)


# ---------------------------------------------------------------------------
# eigenfunctions of x/2 phi' +- G(phi'') = rho phi
# ---------------------------------------------------------------------------

def eigen_solve(rho: float, sign: str, p: GParams, parity: str = "even",
                x_max: float = 10.0, n: int = 2000, *, value0: float = 1.0,
                cap: float = 1e12, dps: int = 40) -> TestFunction:
    """Tabulate a solution of ``x/2 phi' + G(phi'') = rho phi`` (``sign='plus'``)
    or ``x/2 phi' - G(phi'') = rho phi`` (``sign='minus'``) on ``[-x_max, x_max]``.

    The ODE is rewritten as ``phi'' = G^{-1}(s (rho phi - x/2 phi'))`` with
    ``s = +1`` or ``-1`` and integrated outward from 0 by classical RK4 with
    step ``2 x_max / n``. Even parity starts from ``(phi, phi') = (value0, 0)``,
    odd parity from ``(0, value0)``.

    For ``sign='minus'`` the companion solution grows like ``exp(x^2 / 2 sigma^2)``,
    so double-precision rounding would swamp a polynomial solution within a few
    units of x. The march therefore runs in ``dps``-digit arithmetic.

    G is only positively homogeneous, so ``value0 = -1`` gives a genuinely
    different solution from the negative of the ``value0 = 1`` one.
    """
    if rho < 0.0:
        raise ValueError("rho must be nonnegative")
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    p.require_nondegenerate()
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    if n % 2:
        n += 1
    half = n // 2
    ctx = mpmath.mp.clone()
    ctx.dps = dps
    mpf = ctx.mpf
    s = mpf(1 if sign == "plus" else -1)
    r = mpf(rho)
    two_hi = 2 / mpf(p.var_hi)
    two_lo = 2 / mpf(p.var_lo)
    h = 2 * mpf(x_max) / n
    half_ = mpf(1) / 2

    def accel(x, y, yp):
        c = s * (r * y - half_ * x * yp)
        return c * (two_hi if c >= 0 else two_lo)

    y0 = (mpf(value0), mpf(0)) if parity == "even" else (mpf(0), mpf(value0))
    xs = np.linspace(-x_max, x_max, n + 1)
    f = np.empty(n + 1)
    f1 = np.empty(n + 1)
    f[half], f1[half] = float(y0[0]), float(y0[1])
    for direction in (1, -1):
        step = direction * h
        hs = step / 2
        y, yp = y0
        for k in range(1, half + 1):
            x = direction * (k - 1) * h
            k1y, k1v = yp, accel(x, y, yp)
            k2y, k2v = yp + hs * k1v, accel(x + hs, y + hs * k1y, yp + hs * k1v)
            k3y, k3v = yp + hs * k2v, accel(x + hs, y + hs * k2y, yp + hs * k2v)
            k4y, k4v = yp + step * k3v, accel(x + step, y + step * k3y, yp + step * k3v)
            y = y + step / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
            yp = yp + step / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
            if not (abs(y) <= cap and abs(yp) <= cap):
                raise NumericalContractError(
                    f"eigenfunction exceeds cap {cap:g} at x = {float(x + step):g}")
            f[half + direction * k] = float(y)
            f1[half + direction * k] = float(yp)
    f2 = g_inverse((1.0 if sign == "plus" else -1.0) * (rho * f - 0.5 * xs * f1), p)
    name = f"eigen(rho={rho:g},{sign},{parity})"
    return tabulated(xs, f, f1, f2, name=name,
                     params={"rho": rho, "sign": sign, "parity": parity, "value0": value0})


def clipped_eigen(rho: float, sign: str, p: GParams, parity: str = "even",
                  x_max: float = 12.0, *, value0: float = 1.0, width: float = 1.5,
                  n: int = 4800) -> TestFunction:
    """Eigenfunction tabulated on ``[-x_max, x_max]`` and saturated from
    ``x_max - 2`` so it is bounded on a solver grid of the same half-width."""
    base = eigen_solve(rho, sign, p, parity, x_max, n, value0=value0)
    return clipped(base, x_max - 2.0, width, f"{base.name}_clipped")


def eigen_residual(tf: TestFunction, rho: float, sign: str, p: GParams, x) -> np.ndarray:
    """``x/2 phi' +- G(phi'') - rho phi`` at the points ``x``."""
    s = 1.0 if sign == "plus" else -1.0
    x = np.asarray(x, dtype=float)
    return 0.5 * x * tf.eval1(x) + s * g_eval(tf.eval2(x), p) - rho * tf(x)


# ---------------------------------------------------------------------------
# battery
# ---------------------------------------------------------------------------

PHI_BETA_SHIFTS = (1.0, -2.0)
PHI_BETA_SCALES = (0.5, 1.5)


def standard_battery(p: GParams) -> list[TestFunction]:
    """The ten bounded C^2 verification functions.

    phi_beta with three shifts (0, +1, -2) and two argument scales (0.5, 1.5),
    cos, the Gaussian bump, a compactly supported bump, a smoothly clipped
    quadratic and a tanh step. Needs ``sigma_lo > 0`` for phi_beta.
    """
    if p.sigma_lo <= 0.0:
        raise DegenerateBandError("the battery contains phi_beta, which needs sigma_lo > 0")
    pb = phi_beta_function(p)
    members = [pb]
    members += [pb.shifted(c, f"phi_beta_shift_{c:g}") for c in PHI_BETA_SHIFTS]
    members += [pb.scaled(k, f"phi_beta_scale_{k:g}") for k in PHI_BETA_SCALES]
    members += [cosine(), gaussian_bump(), compact_bump(), clipped_quadratic(), smooth_step()]
    return members


def battery_names() -> list[str]:
    return [tf.name for tf in standard_battery(GParams(1.0, 2.0))]


_PLAIN = {"cos": cosine, "gaussian_bump": gaussian_bump, "compact_bump": compact_bump,
          "clipped_quadratic": clipped_quadratic, "smooth_step": smooth_step}


def by_name(name: str, p: GParams) -> TestFunction:
    """Look up a battery member, ``const:C`` or ``@path.csv``."""
    if name.startswith("const:"):
        return constant(float(name[len("const:"):]))
    if name.startswith("@"):
        return read_csv(name[1:], name=name[1:])
    if name in _PLAIN:
        return _PLAIN[name]()
    for tf in standard_battery(p):
        if tf.name == name:
            return tf
    raise KeyError(f"unknown test function {name!r}; known: {', '.join(battery_names())}")


def fd_errors(tf: TestFunction, x, h: float = 1e-4) -> tuple[float, float]:
    """Max deviation of ``eval1``/``eval2`` from centered differences of the
    next-lower evaluator at the points ``x``."""
    x = np.asarray(x, dtype=float)
    e1 = np.max(np.abs((tf(x + h) - tf(x - h)) / (2 * h) - tf.eval1(x)))
    e2 = np.max(np.abs((tf.eval1(x + h) - tf.eval1(x - h)) / (2 * h) - tf.eval2(x)))
    return float(e1), float(e2)
