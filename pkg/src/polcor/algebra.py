"""Product-basis expansion and reduction of the two-party joint amplitude.

The joint amplitude of two analyzer outputs is expanded into tensor products
of mode labels (HH, HV, VH, VV) for each source pair. Three rules reduce it:

* products between a D pulse and an A pulse vanish, because the pulses never
  overlap in time;
* HH and VV merge into one same-polarization class, HV and VH into one
  cross-polarization class;
* the DD and AA contributions of each class add with the AA term carrying the
  summed two-party phase ``eta_ab``.

Coefficients of :class:`ProductTerm` are in units of the per-label amplitude
(the ``sqrt(i0/2)`` factor of each party is divided out), so the raw DD HH
term at zero analyzer angles is exactly 1. :class:`ReducedJoint` carries the
``i0**2 / 4`` scale that turns squared coefficients back into intensity.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .optics import (
    Party,
    PhaseSet,
    SourceTag,
    TaggedModeField,
    analyzer_ports,
    make_party_field,
)

__all__ = [
    "DetectorPair",
    "BasisClass",
    "ProductTerm",
    "ReducedJoint",
    "pair_angles",
    "party_fields",
    "expand_joint",
    "reduce",
    "closed_form_R",
    "intensity_expectation",
    "reduce_pair_amplitudes",
    "format_derivation",
]

LABELS = ("HH", "HV", "VH", "VV")

RULE_RAW = "tensor product"
RULE_TEMPORAL = "zero: no temporal overlap of D and A pulses"
RULE_MERGED = "merged: HH+VV -> same-pol, HV+VH -> cross-pol, AA weighted by exp(i eta_ab)"


class DetectorPair(str, enum.Enum):
    """Detector pair and the (Alice port, Bob port) it reads."""

    AB = "AB"
    CD = "CD"
    AD = "AD"
    BC = "BC"

    @property
    def ports(self) -> tuple[int, int]:
        return _PORTS[self]

    @property
    def same_port(self) -> bool:
        return self in (DetectorPair.AB, DetectorPair.CD)


_PORTS = {
    DetectorPair.AB: (1, 1),
    DetectorPair.CD: (2, 2),
    DetectorPair.AD: (1, 2),
    DetectorPair.BC: (2, 1),
}


class BasisClass(str, enum.Enum):
    SAME_POL = "SamePol"
    CROSS_POL = "CrossPol"


@dataclass(frozen=True)
class ProductTerm:
    """One second-order basis element ``coef * exp(i*phase) * label``.

    ``label`` is the (Alice, Bob) polarization pair, e.g. ``"HV"``;
    ``source_pair`` is the pulse pair, one of DD, AA, DA, AD.
    """

    label: str
    source_pair: str
    coef: complex
    phase: float = 0.0
    rule: str = RULE_RAW

    @property
    def basis_class(self) -> BasisClass:
        return BasisClass.SAME_POL if self.label in ("HH", "VV") else BasisClass.CROSS_POL

    @property
    def value(self) -> complex:
        return self.coef * cmath.exp(1j * self.phase)


@dataclass(frozen=True)
class ReducedJoint:
    same_pol_coef: complex
    cross_pol_coef: complex
    scale: float

    @property
    def value(self) -> float:
        """Joint intensity ``scale * (|same|**2 + |cross|**2)``."""
        return self.scale * (abs(self.same_pol_coef) ** 2 + abs(self.cross_pol_coef) ** 2)

    def as_terms(self) -> list[ProductTerm]:
        return [
            ProductTerm("HH", "DD", self.same_pol_coef, 0.0, RULE_MERGED),
            ProductTerm("HV", "DD", self.cross_pol_coef, 0.0, RULE_MERGED),
        ]


def pair_angles(pair, theta: float, xi: float) -> tuple[float, float]:
    """Effective port-1 projection angles for a detector pair.

    Port 2 of an analyzer at ``t`` acts as port 1 at ``t + pi/2``.
    """
    pa, pb = DetectorPair(pair).ports
    return (theta + (math.pi / 2 if pa == 2 else 0.0),
            xi + (math.pi / 2 if pb == 2 else 0.0))


def party_fields(party, phases: PhaseSet, i0: float) -> dict[SourceTag, TaggedModeField]:
    return {tag: make_party_field(party, tag, phases, i0) for tag in SourceTag}


def _normalized_port(field: TaggedModeField, angle: float, phases: PhaseSet) -> tuple[complex, complex]:
    """Port-1 label coefficients with the amplitude scale and A-pulse phase removed."""
    d_scale = math.sqrt(field.intensity / 2)
    port, _ = analyzer_ports(angle, field)
    h, v = port.coef_h / d_scale, port.coef_v / d_scale
    if field.tag is SourceTag.A:
        unwind = cmath.exp(-1j * phases.eta_party(field.party))
        h, v = h * unwind, v * unwind
    return h, v


def expand_joint(
    f_alpha: Mapping[SourceTag, TaggedModeField],
    f_beta: Mapping[SourceTag, TaggedModeField],
    port_a: float,
    port_b: float,
    phases: PhaseSet,
) -> list[ProductTerm]:
    """Raw tensor products of Alice's and Bob's analyzer outputs.

    ``port_a`` and ``port_b`` are the effective projection angles (see
    :func:`pair_angles`). Returns 16 terms: the four labels for each of DD,
    AA, DA and AD, where DA/AD are emitted as explicit zeros.
    """
    for name, fields in (("f_alpha", f_alpha), ("f_beta", f_beta)):
        missing = [t.name for t in SourceTag if t not in fields]
        if missing:
            raise ValueError(f"{name} lacks a field for tag(s) {missing}")
    if f_alpha[SourceTag.D].party is not Party.ALPHA or f_beta[SourceTag.D].party is not Party.BETA:
        raise ValueError("f_alpha must belong to Alpha and f_beta to Beta")

    ports_a = {t: _normalized_port(f_alpha[t], port_a, phases) for t in SourceTag}
    ports_b = {t: _normalized_port(f_beta[t], port_b, phases) for t in SourceTag}

    terms = []
    for ta in SourceTag:
        for tb in SourceTag:
            source = ta.name + tb.name
            if ta is not tb:
                terms.extend(ProductTerm(lab, source, 0j, 0.0, RULE_TEMPORAL) for lab in LABELS)
                continue
            phase = 0.0 if ta is SourceTag.D else phases.eta_ab
            (ah, av), (bh, bv) = ports_a[ta], ports_b[tb]
            coefs = {"HH": ah * bh, "HV": ah * bv, "VH": av * bh, "VV": av * bv}
            terms.extend(ProductTerm(lab, source, coefs[lab], phase) for lab in LABELS)
    return terms


def reduce(terms: Iterable[ProductTerm] | ReducedJoint, i0: float = 1.0) -> ReducedJoint:
    """Apply the temporal, class-merge and phase rules to a term list.

    Idempotent: reducing a :class:`ReducedJoint` (or its ``as_terms()``)
    returns an equal object.
    """
    if isinstance(terms, ReducedJoint):
        return terms
    if not i0 > 0:
        raise ValueError(f"i0 must be positive, got {i0!r}")
    terms = list(terms)
    if not terms:
        raise ValueError("empty term list")
    same = cross = 0j
    for t in terms:
        if not isinstance(t, ProductTerm):
            raise TypeError(f"expected ProductTerm, got {type(t).__name__}")
        if t.label not in LABELS:
            raise ValueError(f"unknown mode label {t.label!r}")
        if t.source_pair not in ("DD", "AA", "DA", "AD"):
            raise ValueError(f"unknown source pair {t.source_pair!r}")
        if not (math.isfinite(t.coef.real) and math.isfinite(t.coef.imag) and math.isfinite(t.phase)):
            raise ValueError(f"non-finite term {t!r}")
        if t.source_pair in ("DA", "AD"):
            if t.coef != 0:
                raise ValueError(f"{t.source_pair} term must vanish, got coef {t.coef!r}")
            continue
        if t.basis_class is BasisClass.SAME_POL:
            same += t.value
        else:
            cross += t.value
    return ReducedJoint(same, cross, i0 * i0 / 4)


def closed_form_R(pair, theta: float, xi: float, eta_ab: float, i0: float = 1.0) -> float:
    """Closed-form joint intensity of a detector pair at any summed phase.

    ``i0**2 * [cos(t-x)**2 cos(eta_ab/2)**2 + sin(t+x)**2 sin(eta_ab/2)**2]``
    with (t, x) the effective angles of the pair.
    """
    if not i0 > 0:
        raise ValueError(f"i0 must be positive, got {i0!r}")
    try:
        pair = DetectorPair(pair)
    except ValueError:
        raise ValueError(f"unknown detector pair {pair!r}") from None
    t, x = pair_angles(pair, theta, xi)
    half = eta_ab / 2
    return i0 * i0 * (math.cos(t - x) ** 2 * math.cos(half) ** 2
                      + math.sin(t + x) ** 2 * math.sin(half) ** 2)


def intensity_expectation(party, theta: float, phases: PhaseSet, i0: float = 1.0) -> float:
    """Port-1 intensity summed over the D and A pulse classes.

    Products between the two classes are dropped (no temporal overlap), so
    only ``|h|**2 + |v|**2`` of each class survives; each contributes i0/2.
    """
    total = 0.0
    for field in party_fields(party, phases, i0).values():
        port, _ = analyzer_ports(theta, field)
        total += port.intensity
    return total


def reduce_pair_amplitudes(alpha_d, beta_d, alpha_a, beta_a) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized reduction for paired samples in physical amplitude units.

    Each argument is an ``(n, 2)`` complex array of (H, V) port coefficients:
    Alice and Bob at the D bin, then Alice and Bob at the paired A bin, with
    the recorded phases still attached. Returns the same-pol and cross-pol
    amplitudes; the joint intensity is ``|same|**2 + |cross|**2``.
    """
    same = (alpha_d[:, 0] * beta_d[:, 0] + alpha_d[:, 1] * beta_d[:, 1]
            + alpha_a[:, 0] * beta_a[:, 0] + alpha_a[:, 1] * beta_a[:, 1])
    cross = (alpha_d[:, 0] * beta_d[:, 1] + alpha_d[:, 1] * beta_d[:, 0]
             + alpha_a[:, 0] * beta_a[:, 1] + alpha_a[:, 1] * beta_a[:, 0])
    return same, cross


def _fmt(z: complex) -> str:
    z = complex(z)
    re = 0.0 if abs(z.real) < 5e-13 else z.real
    im = 0.0 if abs(z.imag) < 5e-13 else z.imag
    return f"{re:+.6f}{im:+.6f}j"


def format_derivation(theta: float, xi: float, phases: PhaseSet, i0: float = 1.0, pair="AB") -> str:
    """Aligned text of the expansion and reduction, one term per line."""
    pair = DetectorPair(pair)
    ta, tb = pair_angles(pair, theta, xi)
    terms = expand_joint(party_fields(Party.ALPHA, phases, i0),
                         party_fields(Party.BETA, phases, i0), ta, tb, phases)
    red = reduce(terms, i0)
    lines = [
        f"pair={pair.value} theta={theta!r} xi={xi!r} eta={phases.eta!r} "
        f"psi_a={phases.psi_a!r} psi_b={phases.psi_b!r} eta_ab={phases.eta_ab!r} i0={i0!r}",
        f"{'source':<6} {'label':<5} {'class':<8} {'coef':>22} {'phase':>10}  rule",
    ]
    for t in terms:
        lines.append(f"{t.source_pair:<6} {t.label:<5} {t.basis_class.value:<8} "
                     f"{_fmt(t.coef):>22} {t.phase:>10.6f}  {t.rule}")
    lines.append(f"{'red':<6} {'same':<5} {'SamePol':<8} {_fmt(red.same_pol_coef):>22} "
                 f"{'':>10}  {RULE_MERGED}")
    lines.append(f"{'red':<6} {'cross':<5} {'CrossPol':<8} {_fmt(red.cross_pol_coef):>22} "
                 f"{'':>10}  {RULE_MERGED}")
    lines.append(f"R = scale*(|same|^2+|cross|^2), scale = i0^2/4 = {red.scale!r}: R = {red.value:.12f}")
    lines.append(f"closed form R_{pair.value} = "
                 f"{closed_form_R(pair, theta, xi, phases.eta_ab, i0):.12f}")
    return "\n".join(lines) + "\n"
