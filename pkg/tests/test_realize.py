import math

import numpy as np
import pytest

from gstein import testfns as tf
from gstein.gcore import DomainError, GParams, gaussian_measure
from gstein.gheat import default_config, field_value, solve_g_heat
from gstein.realize import (density_measure, forward_density, forward_measure,
                            mc_forward_measure, optimal_policy, realize)

P = GParams(1.0, 2.0)


@pytest.fixture(scope="module")
def pb_result():
    return realize(tf.phi_beta_function(P), P, default_config(P), mc_paths=200_000, seed=3)


def test_policy_is_bang_bang(pb_result):
    sig = pb_result.policy.sigma
    assert set(np.unique(sig)) <= {1.0, 2.0}
    assert sig.shape == (pb_result.policy.n_levels, pb_result.policy.grid.nx + 1)


def test_policy_convex_region():
    f = solve_g_heat(tf.clipped_quadratic(), P, default_config(P))
    pol = optimal_policy(f, P, t_stop=1.0)
    x = pol.grid.nodes
    inner = np.abs(x) < 5.0
    assert np.all(pol.sigma[:, inner] == 2.0)


def test_policy_concave_region():
    neg = tf.clipped_quadratic().times(-1.0)
    f = solve_g_heat(neg, P, default_config(P))
    pol = optimal_policy(f, P, t_stop=1.0)
    inner = np.abs(pol.grid.nodes) < 5.0
    assert np.all(pol.sigma[:, inner] == 1.0)


def test_policy_classical_and_mirror():
    q = GParams(1.3, 1.3)
    pol = optimal_policy(solve_g_heat(tf.cosine(), q, default_config(q)), q)
    assert np.all(pol.sigma_rows([0, 10, 100]) == 1.3)
    pol = optimal_policy(solve_g_heat(tf.gaussian_bump(), P, default_config(P)), P)
    rows = pol.sigma_rows(np.arange(0, pol.n_levels, 97))
    assert np.array_equal(rows, rows[:, ::-1])


def test_constant_policy_is_gaussian():
    for s in (1.0, 1.7):
        q = GParams(s, s)
        pol = optimal_policy(solve_g_heat(tf.cosine(), q, default_config(q)), q, t_stop=1.0)
        m = forward_measure(pol, 1.0)
        assert abs(m.mean()) <= 1e-6
        assert abs(m.variance() - s * s) <= 1e-3
        assert abs(m.weights.sum() - 1.0) <= 1e-10


def test_node_interface_is_exact_dual():
    """Node interface: forward law reproduces the backward value up to rounding."""
    for phi in (tf.phi_beta_function(P), tf.smooth_step(), tf.compact_bump()):
        f = solve_g_heat(phi, P, default_config(P))
        pol = optimal_policy(f, P, t_stop=1.0)
        m = forward_measure(pol, 1.0, interface="node", refine=1)
        assert abs(m.expectation(phi) - field_value(f, 1.0, 0.0)) <= 1e-10


def test_mass_is_conserved(pb_result):
    rho = forward_density(pb_result.policy, 1.0)
    assert abs(rho.sum() - 1.0) <= 1e-10 and np.all(rho >= 0.0)
    assert pb_result.mass_drift <= 1e-10 and pb_result.leaked_mass <= 1e-8


def test_realization_gap_battery():
    cfg = default_config(P)
    for phi in tf.standard_battery(P):
        r = realize(phi, P, cfg)
        assert r.gap <= 5e-3, phi.name
        assert r.measure.mass_outside(-12.0, 12.0) <= 1e-6


def test_classical_cos():
    q = GParams(1.0, 1.0)
    r = realize(tf.cosine(), q, default_config(q))
    assert abs(r.mu_phi - math.exp(-0.5)) <= 2e-3


def test_constant_gap_zero():
    r = realize(tf.constant(2.5), P, default_config(P))
    assert r.gap <= 1e-10


@pytest.mark.parametrize("band", [(1.0, 2.0), (0.5, 1.5)])
def test_realization_beats_reference_gaussians(band):
    p = GParams(*band)
    cfg = default_config(p)
    for phi in tf.standard_battery(p):
        mu = realize(phi, p, cfg).mu_phi
        for s in (p.sigma_lo, p.sigma_hi, p.sigma_mid()):
            assert mu >= gaussian_measure(s).expectation(phi) - 2e-3, (phi.name, s)


def test_mc_deterministic_and_close(pb_result):
    pol = pb_result.policy
    a = mc_forward_measure(pol, 1.0, 50_000, seed=11)
    b = mc_forward_measure(pol, 1.0, 50_000, seed=11)
    c = mc_forward_measure(pol, 1.0, 50_000, seed=12)
    assert np.array_equal(a.weights, b.weights)
    assert not np.array_equal(a.weights, c.weights)
    assert pb_result.mc_gap <= 1e-2


def test_mc_constant_policy_variance():
    q = GParams(1.0, 1.0)
    pol = optimal_policy(solve_g_heat(tf.cosine(), q, default_config(q)), q, t_stop=1.0)
    m = mc_forward_measure(pol, 1.0, 1_000_000, seed=1)
    assert abs(m.variance() - 1.0) <= 5e-3


def test_density_measure_refinement():
    g = default_config(P).grid
    rho = np.zeros(g.nx + 1)
    rho[g.node_index(0.0)] = 1.0
    m = density_measure(g, rho, 4)
    assert m.points.size == 4 * g.nx
    assert m.mean() == pytest.approx(0.0, abs=1e-15)
    assert m.variance() == pytest.approx(g.dx ** 2 / 6.0, rel=0.05)


def test_target_errors(pb_result):
    with pytest.raises(DomainError):
        forward_measure(pb_result.policy, 1.2)
    with pytest.raises(ValueError):
        forward_measure(pb_result.policy, 1.0, interface="cubic")
    with pytest.raises(ValueError):
        mc_forward_measure(pb_result.policy, 1.0, 0)
