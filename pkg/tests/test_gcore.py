import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from gstein.gcore import (CFLError, DegenerateBandError, GParams, Grid, Measure,
                          g_eval, g_inverse, gaussian_measure, measure_expectation)

reals = st.floats(-1e3, 1e3, allow_nan=False)
bands = st.tuples(st.floats(0.0, 3.0), st.floats(0.0, 3.0)).map(lambda t: GParams(min(t), max(t)))


@pytest.mark.parametrize("a, expected", [(1.0, 2.0), (-1.0, -0.5), (0.0, 0.0)])
def test_g_eval_examples(a, expected):
    assert g_eval(a, GParams(1, 2)) == expected


@pytest.mark.parametrize("c, expected", [(2.0, 1.0), (-0.5, -1.0), (0.0, 0.0)])
def test_g_inverse_examples(c, expected):
    assert g_inverse(c, GParams(1, 2)) == expected


def test_g_eval_vectorized():
    out = g_eval(np.array([-2.0, 0.0, 3.0]), GParams(1, 2))
    np.testing.assert_array_equal(out, [-1.0, 0.0, 6.0])


@given(bands, reals, reals)
def test_monotone_and_subadditive(p, a, b):
    hi, lo = max(a, b), min(a, b)
    assert g_eval(hi, p) >= g_eval(lo, p)
    assert g_eval(a + b, p) <= g_eval(a, p) + g_eval(b, p) + 1e-9 * (1 + abs(a) + abs(b))


@given(bands, reals, st.floats(0.0, 100.0))
def test_positive_homogeneity(p, a, lam):
    assert g_eval(lam * a, p) == pytest.approx(lam * g_eval(a, p), rel=1e-12, abs=1e-12)


@given(st.floats(0.1, 3.0), st.floats(0.0, 2.0), reals)
def test_inverse_roundtrip(lo, extra, a):
    p = GParams(lo, lo + extra)
    assert g_inverse(g_eval(a, p), p) == pytest.approx(a, rel=1e-12, abs=1e-12)
    assert g_eval(g_inverse(a, p), p) == pytest.approx(a, rel=1e-12, abs=1e-12)


@given(st.floats(0.0, 3.0), reals)
def test_classical_band_is_linear(s, a):
    assert g_eval(a, GParams(s, s)) == 0.5 * s * s * a


def test_g_inverse_degenerate():
    with pytest.raises(DegenerateBandError):
        g_inverse(-1.0, GParams(0.0, 1.0))
    assert g_inverse(1.0, GParams(0.0, 1.0)) == 2.0


@pytest.mark.parametrize("lo, hi", [(-0.1, 1.0), (2.0, 1.0), (0.0, math.inf), (math.nan, 1.0)])
def test_gparams_rejects(lo, hi):
    with pytest.raises(ValueError):
        GParams(lo, hi)


def test_gparams_derived():
    p = GParams(1.0, 2.0)
    assert p.beta() == 2.0 and p.sigma_mid() == 1.5
    with pytest.raises(DegenerateBandError):
        GParams(0.0, 1.0).beta()


def test_grid_and_cfl():
    g = Grid.from_dx(0.04)
    assert g.nx == 500 and g.dx == pytest.approx(0.04)
    assert g.nodes[g.node_index(0.0)] == 0.0
    g.check_cfl(0.9 * g.dx ** 2 / 4.0, GParams(1, 2))
    with pytest.raises(CFLError):
        g.check_cfl(1.01 * g.dx ** 2 / 4.0, GParams(1, 2))
    with pytest.raises(ValueError):
        Grid(1.0, 2.0, 10)


def test_measure_examples():
    m = Measure(np.array([-1.0, 1.0]), np.array([0.5, 0.5]))
    assert measure_expectation(m, lambda x: x ** 2) == 1.0
    assert measure_expectation(m, lambda x: 1.0) == 1.0


def test_gaussian_second_moment_against_quadrature():
    m = gaussian_measure(1.0, n=2001)
    exact = quad(lambda x: x * x * math.exp(-x * x / 2) / math.sqrt(2 * math.pi), -np.inf, np.inf)[0]
    assert abs(m.expectation(lambda x: x ** 2) - exact) <= 1e-6


def test_gaussian_smooth_integrand_accuracy():
    m = gaussian_measure(1.5)
    assert abs(m.expectation(np.cos) - math.exp(-1.125)) < 1e-10
    assert gaussian_measure(0.0).points.tolist() == [0.0]


@pytest.mark.parametrize("pts, w", [([0.0, 1.0], [0.6, 0.6]), ([0.0, 1.0], [1.5, -0.5]),
                                    ([1.0, 0.0], [0.5, 0.5]), ([0.0, 0.0], [0.5, 0.5])])
def test_measure_rejects(pts, w):
    with pytest.raises(ValueError):
        Measure(np.array(pts), np.array(w))


def test_measure_is_read_only():
    m = Measure.point_mass(0.0)
    with pytest.raises(ValueError):
        m.weights[0] = 2.0
