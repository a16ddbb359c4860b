"""
Joint correlation fringes
=========================

The local counts are flat, but the paired D/A counts across the two parties
follow cos^2(theta - xi) when eta_ab is an even multiple of pi. Fix Alice's
analyzer and rotate Bob's.
"""
import math

import numpy as np

from polcor import OpticalConfig, run_pipeline

print("   xi     R_AB est   closed    R_AD est")
for xi in np.linspace(0, math.pi, 9):
    cfg = OpticalConfig(theta=0.0, xi=xi, n_bins=20_000, seed=5)
    r = {x.pair.value: x for x in run_pipeline(cfg, ["AB", "AD"])}
    print(f"{xi:6.3f}  {r['AB'].estimate:9.5f}  {r['AB'].closed_form:7.5f}  {r['AD'].estimate:9.5f}")

# %%
# At eta_ab = pi the fringe moves to the cross-port form sin^2(theta + xi).

for xi in (0.0, math.pi / 8, math.pi / 4):
    cfg = OpticalConfig(theta=math.pi / 8, xi=xi, eta=math.pi / 2, n_bins=20_000, seed=5)
    ab = run_pipeline(cfg, ["AB"])[0]
    print(f"eta_ab=pi, xi={xi:.3f}: R_AB={ab.estimate:.5f}, sin^2(theta+xi)={math.sin(math.pi / 8 + xi) ** 2:.5f}")
