"""
Product-basis expansion of a joint detection
=============================================

Each party sees a D pulse and an A pulse in separate time bins. Expanding the
joint amplitude at detectors A (alpha) and B (beta) gives 16 product terms.
The mixed D/A terms vanish because the pulses never overlap in time. The
rest collapse into a same-polarization and a cross-polarization part.
"""
import math

import numpy as np

from polcor import DetectorPair, PhaseSet, closed_form_R, expand_joint, reduce
from polcor.algebra import format_derivation, pair_angles, party_fields

theta, xi = math.pi / 8, 0.0
phases = PhaseSet(eta=0.3, psi_a=0.1, psi_b=-0.2)

print(format_derivation(theta, xi, phases))

# %%
# The reduction is a plain function of the terms, so it can be checked
# against the closed form over a grid of settings.

rng = np.random.default_rng(1)
worst = 0.0
for theta, xi, eta, pa, pb in rng.uniform(0, 2 * math.pi, (200, 5)):
    ph = PhaseSet(eta, pa, pb)
    for pair in DetectorPair:
        ta, tb = pair_angles(pair, theta, xi)
        terms = expand_joint(party_fields("alpha", ph, 1.0), party_fields("beta", ph, 1.0), ta, tb, ph)
        worst = max(worst, abs(reduce(terms).value - closed_form_R(pair, theta, xi, ph.eta_ab)))
print(f"\nmax |reduced - closed form| over 800 evaluations: {worst:.1e}")
