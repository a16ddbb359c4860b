"""
Overlap and which-path erasure
==============================

If the D and A pulses overlapped in time, a single party would see an
interference fringe in its path phase with visibility |cos 2 theta|. With the
pulses time-separated the fringe is gone locally and only shows up in the
joint counts.
"""
import math

from polcor import OpticalConfig
from polcor.measurement import eraser_scan

for theta in (0.0, math.pi / 8, math.pi / 4):
    for mode in ("coherent", "separated"):
        cfg = OpticalConfig(theta=theta, n_bins=2_000, seed=2, overlap_mode=mode)
        _, means, vis = eraser_scan(cfg, "alice", n_points=16)
        print(f"theta={theta:.3f} {mode:9s} V={vis:.4f}  (|cos 2theta|={abs(math.cos(2 * theta)):.4f})"
              f"  min/max {means.min():.3f}/{means.max():.3f}")
