"""
Each party alone sees noise
===========================

Alice's detector counts do not depend on her own analyzer, on her path phase
or on anything Bob does. Here we sweep psi_a and watch both port means stay
at I0/2.
"""
import math

import numpy as np

from polcor import OpticalConfig, local_stats
from polcor.simulator import simulate_party

base = OpticalConfig(theta=0.4, xi=1.1, n_bins=50_000, seed=3)

print(" psi_a    port1    port2    total")
for psi in np.linspace(0, 2 * math.pi, 8, endpoint=False):
    s = local_stats(simulate_party(base.replace(psi_a=psi), "alice"), "alice")
    print(f"{psi:6.3f}  {s.port1_mean:.5f}  {s.port2_mean:.5f}  {s.full_mean:.5f}")

# %%
# The analyzer angle does not matter either.

for theta in (0.0, math.pi / 8, math.pi / 4):
    s = local_stats(simulate_party(base.replace(theta=theta), "alice"))
    print(f"theta={theta:.3f}: port1={s.port1_mean:.5f} +- {s.port1_se:.1e}")
