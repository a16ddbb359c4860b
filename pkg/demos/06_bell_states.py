"""
Which Bell state?
=================

At the endpoints eta_ab = 0 or pi the joint form matches one of the four
Bell states, depending on whether we look at same-port (AB, CD) or
cross-port (AD, BC) detector pairs.
"""
import math

from polcor import classify_bell_state

for eta_ab in (0.0, math.pi, 2 * math.pi, -math.pi):
    labels = [classify_bell_state(eta_ab, fam).value for fam in ("SamePort", "CrossPort")]
    print(f"eta_ab={eta_ab:+.4f}: same-port {labels[0]:9s} cross-port {labels[1]}")

try:
    classify_bell_state(math.pi / 2, "SamePort")
except ValueError as e:
    print("pi/2:", e)
