"""
Solving the G-heat equation
===========================

Sublinear expectations of the G-normal law come from a fully nonlinear heat
equation. This walk-through solves it for a few data and compares against
ordinary Gaussians.
"""
# %%
# The volatility band and its generator
# -------------------------------------
import math

import numpy as np

from gstein import GParams, g_eval, gaussian_measure
from gstein import testfns as tf
from gstein.gheat import default_config, field_value, g_expectation, solve_g_heat

p = GParams(1.0, 2.0)
print("G(+1) =", g_eval(1.0, p), " G(-1) =", g_eval(-1.0, p))

# %%
# A periodic eigenfunction decays at a known exponential rate, which makes
# it a convenient end-to-end check of the solver.
phi = tf.phi_beta_function(p)
cfg = default_config(p)
u = solve_g_heat(phi, p, cfg)
rate = tf.phi_beta_eigenvalue(p)
for t in (0.25, 0.5, 1.0):
    print(f"t={t:4.2f}  u(t,0)={field_value(u, t, 0.0):.6f}  "
          f"exact={math.exp(-rate * t) * phi(0.0):.6f}")

# %%
# Convex data pick the upper volatility, concave data the lower one. Mixed
# data land strictly above both Gaussian expectations.
for f in (tf.clipped_quadratic(), tf.clipped_quadratic().times(-1.0), tf.cosine(), phi):
    ng = g_expectation(f, 1.0, 0.0, p, cfg)
    lo, hi = (gaussian_measure(s).expectation(f) for s in (p.sigma_lo, p.sigma_hi))
    print(f"{f.name:>22s}  N_G={ng: .5f}  N(0,1)={lo: .5f}  N(0,4)={hi: .5f}")

# %%
# Halving the mesh moves the answer by O(dx).
for dx in (0.08, 0.04, 0.02):
    v = g_expectation(phi, 1.0, 0.0, p, default_config(p, dx=dx))
    print(f"dx={dx:.2f}  N_G[phi_beta]={v:.7f}")
print("grid nodes at dx=0.04:", np.size(cfg.grid.nodes))
