import math

import numpy as np
import pytest

from gstein import testfns as tf
from gstein.gcore import CFLError, DomainError, GParams, UnboundedDataError, gaussian_measure
from gstein.gheat import (SolveConfig, default_config, dump_field_csv, field_value,
                          g_expectation, replay, second_space_derivative, solve_g_heat,
                          space_derivative, time_derivative)

P = GParams(1.0, 2.0)
PB_CLOSED = math.exp(-1.125) * 2.0 / 3.0


@pytest.fixture(scope="module")
def pb_field():
    return solve_g_heat(tf.phi_beta_function(P), P, default_config(P))


def test_classical_cos_fine_grid():
    p = GParams(1.0, 1.0)
    v = g_expectation(tf.cosine(), 1.0, 0.0, p, default_config(p, dx=0.01))
    assert abs(v - math.exp(-0.5)) <= 1e-3


def test_phi_beta_closed_form(pb_field):
    assert abs(field_value(pb_field, 1.0, 0.0) - PB_CLOSED) <= 2e-3


def test_phi_beta_closed_form_in_space_time(pb_field):
    for t in (0.25, 0.5, 1.0, 1.4):
        for x in (-1.0, 0.3, 2.0):
            exact = math.exp(-1.125 * t) * tf.phi_beta(x, P)
            assert abs(field_value(pb_field, t, x) - exact) <= 2e-3


def test_clipped_quadratic_linearizes(cfg12):
    f = solve_g_heat(tf.clipped_quadratic(), P, cfg12)
    for t in (0.25, 0.5, 1.0):
        assert abs(field_value(f, t, 0.0) - 4.0 * t) <= 1e-3
    classical = g_expectation(tf.clipped_quadratic(), 1.0, 0.0, GParams(2.0, 2.0), cfg12)
    assert abs(field_value(f, 1.0, 0.0) - classical) <= 1e-4


def test_initial_condition_and_constants(cfg12):
    phi = tf.gaussian_bump()
    assert g_expectation(phi, 0.0, 0.7, P, cfg12) == phi(0.7)
    f = solve_g_heat(tf.constant(3.0), P, cfg12)
    assert np.all(f.values == 3.0)


def test_scaling_identity(cfg12):
    lam = 0.5
    pb = tf.phi_beta_function(P)
    a = g_expectation(pb, lam ** 2, 0.0, P, cfg12)
    b = g_expectation(pb.scaled(lam), 1.0, 0.0, P, cfg12)
    assert abs(a - b) <= 2e-3


def test_time_derivative_phi_beta(pb_field):
    assert abs(time_derivative(pb_field, 1.0, 0.0) + 1.125 * PB_CLOSED) <= 5e-3


def test_time_derivative_classical_cos(cfg11, p11):
    f = solve_g_heat(tf.cosine(), p11, cfg11)
    assert abs(time_derivative(f, 1.0, 0.0) + 0.5 * math.exp(-0.5)) <= 2e-3
    assert abs(second_space_derivative(f, 1.0, 0.0) + math.exp(-0.5)) <= 2e-3


@pytest.mark.parametrize("name", ["phi_beta", "cos", "gaussian_bump", "compact_bump"])
def test_even_data_zero_slope(name, cfg12):
    f = solve_g_heat(tf.by_name(name, P), P, cfg12)
    assert abs(space_derivative(f, 0.7, 0.0)) <= 1e-10


def test_probe_domain(pb_field):
    with pytest.raises(DomainError):
        time_derivative(pb_field, 0.0, 0.0)
    with pytest.raises(DomainError):
        space_derivative(pb_field, 1.0, pb_field.grid.x_max)
    with pytest.raises(DomainError):
        field_value(pb_field, 2.0, 0.0)


def test_maximum_principle(cfg12):
    for phi in tf.standard_battery(P):
        f = solve_g_heat(phi, P, cfg12)
        u0 = f.values[0]
        assert f.values.max() <= u0.max() and f.values.min() >= u0.min()


def test_mirror_symmetry(cfg12):
    step = tf.smooth_step()
    mirrored = tf.TestFunction("mirror", tf.Kind.DERIVED, lambda x: step(-np.asarray(x)))
    a = solve_g_heat(step, P, cfg12).values
    b = solve_g_heat(mirrored, P, cfg12).values
    np.testing.assert_allclose(a, b[:, ::-1], rtol=0, atol=1e-13)


def test_sublinearity_and_homogeneity(cfg12):
    bat = tf.standard_battery(P)
    n = {f.name: g_expectation(f, 1.0, 0.0, P, cfg12) for f in bat}
    for f, g in zip(bat, bat[1:] + bat[:1]):
        s = tf.TestFunction("sum", tf.Kind.DERIVED, lambda x, f=f, g=g: f(x) + g(x))
        assert g_expectation(s, 1.0, 0.0, P, cfg12) <= n[f.name] + n[g.name] + 2e-3
        assert g_expectation(f.times(2.5), 1.0, 0.0, P, cfg12) == pytest.approx(2.5 * n[f.name], abs=1e-6)


def test_monotonicity(cfg12):
    f = tf.gaussian_bump()
    g = tf.TestFunction("bigger", tf.Kind.DERIVED, lambda x: f(x) + 0.1 * tf.compact_bump()(x))
    assert g_expectation(f, 1.0, 0.0, P, cfg12) <= g_expectation(g, 1.0, 0.0, P, cfg12) + 1e-10


@pytest.mark.parametrize("band", [(1.0, 2.0), (0.5, 1.5)])
def test_dominates_reference_gaussians(band):
    p = GParams(*band)
    cfg = default_config(p)
    for phi in tf.standard_battery(p):
        ng = g_expectation(phi, 1.0, 0.0, p, cfg)
        for s in (p.sigma_lo, p.sigma_hi):
            assert gaussian_measure(s).expectation(phi) <= ng + 2e-3


def test_refinement_stability():
    for phi in tf.standard_battery(P):
        v = [g_expectation(phi, 1.0, 0.0, P, default_config(P, dx=dx)) for dx in (0.04, 0.02)]
        assert abs(v[0] - v[1]) <= 2e-3, phi.name


def test_domain_doubling():
    phi = tf.phi_beta_function(P)
    a = g_expectation(phi, 1.0, 0.0, P, default_config(P))
    b = g_expectation(phi, 1.0, 0.0, P, default_config(P, x_max=24.0))
    assert abs(a - b) <= 1e-8


def test_cfl_and_cap():
    cfg = default_config(P).with_grid(dt=0.01)
    with pytest.raises(CFLError):
        solve_g_heat(tf.cosine(), P, cfg)
    big = tf.constant(1e7)
    with pytest.raises(UnboundedDataError):
        solve_g_heat(big, P, default_config(P))


def test_boundary_modes_agree_in_interior():
    a = g_expectation(tf.gaussian_bump(), 1.0, 0.0, P, default_config(P))
    b = g_expectation(tf.gaussian_bump(), 1.0, 0.0, P, default_config(P, boundary="linear_extrapolate"))
    assert abs(a - b) <= 1e-10
    with pytest.raises(ValueError):
        SolveConfig(boundary="periodic")


def test_replay_is_bitwise(pb_field):
    s = pb_field.stride
    rows = replay(pb_field, 3 * s, s + 1)
    assert np.array_equal(rows[0], pb_field.values[3])
    assert np.array_equal(rows[-1], pb_field.values[4])


def test_dump_csv(tmp_path, pb_field):
    path = tmp_path / "f.csv"
    dump_field_csv(pb_field, path, stride=50)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("t,") and len(lines[0].split(",")) == pb_field.grid.nx + 2
    assert len(lines) == 1 + len(range(0, len(pb_field.times), 50))
