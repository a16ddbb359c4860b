"""
CHSH violation
==============

With analyzer settings 0, pi/4 for Alice and pi/8, 3pi/8 for Bob the
correlation E reaches the Tsirelson value 2 sqrt 2.
"""
import math

import numpy as np

from polcor import OpticalConfig, chsh
from polcor.measurement import CANONICAL_CHSH_ANGLES

cfg = OpticalConfig(n_bins=100_000, seed=11)
for mode in ("closed", "mc"):
    r = chsh(cfg, *CANONICAL_CHSH_ANGLES, mode=mode)
    terms = ", ".join(f"E({k})={v:+.4f}" for k, v in r.correlations.items())
    print(f"{mode:6s} S={r.s_value:.6f}  {terms}")
print(f"2 sqrt 2 = {2 * math.sqrt(2):.6f}")

# %%
# Rotating Bob's pair away from the optimum brings S back under 2.

for offset in np.linspace(0, math.pi / 4, 5):
    b, b2 = math.pi / 8 + offset, 3 * math.pi / 8 + offset
    print(f"offset {offset:.3f}: S = {chsh(cfg, 0, math.pi / 4, b, b2).s_value:+.4f}")
