import json
import math

import mpmath
import numpy as np
import pytest

from gstein import testfns as tf
from gstein.gcore import DegenerateBandError, GParams, Measure, gaussian_measure
from gstein.gheat import default_config
from gstein.realize import realize
from gstein.stein import (SteinReport, conjecture_gap, interpolation_check, negative_control,
                          report_passes, shw_supremum, stein_residual, verify_proposition_main)

P = GParams(1.0, 2.0)
REPORT_FIELDS = {"phi_name", "n_g", "mu_phi", "residual", "dt_u", "drift_term", "g_term",
                 "conjecture_gap", "w_values", "tolerances_used"}


def _gauss_quad(f, sigma, breaks=()):
    """mpmath quadrature of E[f(sigma Z)] with explicit breakpoints."""
    pts = sorted({-mpmath.inf, mpmath.inf, *[mpmath.mpf(b) for b in breaks]},
                 key=lambda v: float(v))
    dens = lambda x: mpmath.exp(-x * x / (2 * sigma * sigma)) / (sigma * mpmath.sqrt(2 * mpmath.pi))
    return float(mpmath.quad(lambda x: f(x) * dens(x), pts))


@pytest.mark.parametrize("phi", [tf.cosine(), tf.gaussian_bump(), tf.smooth_step(),
                                 tf.compact_bump()], ids=lambda f: f.name)
def test_classical_residual_vanishes(phi):
    p = GParams(1.0, 1.0)
    assert abs(stein_residual(gaussian_measure(1.0), phi, p)) <= 1e-6


def test_dirac_residual():
    d0 = Measure(np.array([0.0]), np.array([1.0]))
    assert stein_residual(d0, tf.cosine(), P) == pytest.approx(0.5)
    assert stein_residual(d0, tf.cosine().times(-1.0), P) == pytest.approx(-2.0)


@pytest.fixture(scope="module")
def reports():
    out = {}
    for band in ((1.0, 2.0), (0.5, 1.5), (1.0, 1.0)):
        p = GParams(*band)
        cfg = default_config(p)
        out[band] = {phi.name: verify_proposition_main(phi, p, cfg) for phi in tf.standard_battery(p)}
    return out


@pytest.mark.parametrize("band", [(1.0, 2.0), (0.5, 1.5), (1.0, 1.0)])
def test_reports_pass(reports, band):
    for name, r in reports[band].items():
        assert report_passes(r), (band, name, r.to_dict())


def test_phi_beta_report_values(reports):
    r = reports[(1.0, 2.0)]["phi_beta"]
    closed = math.exp(-1.125) * 2.0 / 3.0
    assert abs(r.n_g - closed) <= 2e-3
    assert abs(r.dt_u + 1.125 * closed) <= 7e-3
    assert abs(r.drift_term + 1.125 * closed) <= 7e-3


def test_classical_conjecture_gap_small(reports):
    for r in reports[(1.0, 1.0)].values():
        assert abs(r.conjecture_gap) <= 1e-3


def test_conjecture_gap_positive_member(reports):
    gaps = {k: r.conjecture_gap for k, r in reports[(1.0, 2.0)].items()}
    assert max(gaps.values()) >= 0.01
    assert gaps["gaussian_bump"] == pytest.approx(0.02552, abs=5e-4)
    assert min(gaps.values()) >= -5e-3


def test_conjecture_gap_refines():
    phi = tf.gaussian_bump()
    a = conjecture_gap(phi, P, default_config(P, dx=0.04))
    b = conjecture_gap(phi, P, default_config(P, dx=0.02))
    assert abs(a - b) <= 5e-4 and b >= 0.01


def test_interpolation_table(reports):
    r = reports[(1.0, 2.0)]["cos"]
    s = [v[0] for v in r.w_values]
    assert s == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert r.w_values[0][1] == r.w_values[-1][1] == r.n_g
    with pytest.raises(ValueError):
        interpolation_check(tf.cosine(), P, default_config(P), [1.5])


def test_report_serialization(reports):
    r = reports[(0.5, 1.5)]["smooth_step"]
    d = json.loads(r.to_json())
    assert set(d) == REPORT_FIELDS
    assert all(isinstance(pair, list) and len(pair) == 2 for pair in d["w_values"])
    assert r.identity_spread >= 0.0 and r.is_finite()
    bad = SteinReport(**{**r.__dict__, "residual": float("nan")})
    assert not report_passes(bad)


def test_negative_control_cos_oracle():
    """Residual of N(0, 1) for cos, with G(-cos) integrated piecewise."""
    mpmath.mp.dps = 30
    breaks = [math.pi / 2 + k * math.pi for k in range(-12, 12)]

    def r(x):
        c = mpmath.cos(x)
        g = 0.5 * (4 * max(-c, 0) - 1 * max(c, 0))
        return -x / 2 * mpmath.sin(x) - g

    ref = _gauss_quad(r, 1.0, breaks)
    assert ref == pytest.approx(-0.0656240, abs=5e-7)
    assert abs(negative_control(tf.cosine(), P) - ref) <= 1e-6


def test_negative_control_sign_and_one_sign_curvature():
    vals = [negative_control(phi, P) for phi in tf.standard_battery(P)]
    assert min(vals) < -1e-3
    sq = tf.polynomial([0.0, 0.0, 1.0])
    assert abs(negative_control(sq, P)) <= 1e-6
    assert abs(negative_control(sq.times(-1.0), P)) <= 1e-6


def test_negative_control_degenerate():
    with pytest.raises(DegenerateBandError):
        negative_control(tf.cosine(), GParams(1.0, 1.0))


def test_shw_supremum_near_zero():
    cfg = default_config(P)
    for phi in (tf.phi_beta_function(P), tf.gaussian_bump(), tf.clipped_quadratic()):
        res = realize(phi, P, cfg)
        val, names = shw_supremum(phi, P, res)
        assert "realization" in names
        assert abs(val) <= 7e-3, phi.name
