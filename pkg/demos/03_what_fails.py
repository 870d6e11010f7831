"""
Two things that do not characterize the law
===========================================

Applying the sublinear expectation to the generator itself does not give
zero, and a plain maximum of two Gaussians fails the residual test.
"""
# %%
from gstein import GParams
from gstein import testfns as tf
from gstein.gheat import default_config
from gstein.stein import conjecture_gap, negative_control

p = GParams(1.0, 2.0)
cfg = default_config(p)

print("N_G[L_G phi] over the battery (nonzero means the naive identity fails):")
for phi in tf.standard_battery(p):
    print(f"  {phi.name:>20s}  {conjecture_gap(phi, p, cfg):+.5f}")

# %%
# With equal band ends the generator identity is the classical one, so the
# values collapse to discretization noise.
q = GParams(1.0, 1.0)
worst = max(abs(conjecture_gap(f, q, default_config(q))) for f in tf.standard_battery(q))
print(f"classical band: max |N[L phi]| = {worst:.1e}")

# %%
# The two-Gaussian functional max(E_lo, E_hi) is sublinear too, but its
# maximizers leave a clearly negative residual for some data.
for phi in tf.standard_battery(p):
    print(f"  {phi.name:>20s}  residual {negative_control(phi, p):+.4f}")
