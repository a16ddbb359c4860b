"""Polarization-basis correlations of time-separated laser pulses.

Modules:

* :mod:`polcor.optics` - Jones vectors, wave plate, analyzer ports, party fields
* :mod:`polcor.algebra` - product-basis expansion/reduction and closed forms
* :mod:`polcor.simulator` - seeded time-bin Monte Carlo
* :mod:`polcor.measurement` - local statistics, pairing, joint correlations, CHSH
* :mod:`polcor.harness` - networked parties and correlator
* :mod:`polcor.cli` - the ``polcor`` command
"""
from .algebra import DetectorPair, closed_form_R, expand_joint, intensity_expectation, reduce
from .measurement import chsh, classify_bell_state, correlate, estimate_R, local_stats, pair_bins, run_pipeline
from .optics import Party, PhaseSet, SourceTag, analyzer_ports, apply_hwp, apply_pbs, make_party_field
from .simulator import OpticalConfig, OverlapMode, coherent_bin_intensity, gen_schedule, simulate

__version__ = "0.1.0"
