"""Optical-element arithmetic for the two-party polarization train.

Jones vectors are written in the (H, V) basis. A :class:`TaggedModeField`
keeps H and V as separate, distinguishable mode labels carrying a source tag
(D or A pulse), so its intensity is ``|coef_h|**2 + |coef_v|**2`` and never the
coherent sum of the two.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

__all__ = [
    "Party",
    "SourceTag",
    "JonesVector",
    "PhaseSet",
    "TaggedModeField",
    "apply_hwp",
    "apply_pbs",
    "make_party_field",
    "analyzer_ports",
]


class Party(enum.IntEnum):
    ALPHA = 0
    BETA = 1

    @classmethod
    def parse(cls, value) -> "Party":
        if isinstance(value, Party):
            return value
        key = str(value).strip().lower()
        if key in ("alpha", "alice", "a", "0"):
            return cls.ALPHA
        if key in ("beta", "bob", "b", "1"):
            return cls.BETA
        raise ValueError(f"unknown party {value!r}")


class SourceTag(enum.IntEnum):
    """Which EOM pulse class a time bin carries."""

    D = 0
    A = 1

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str) and value.strip().upper() in cls.__members__:
            return cls[value.strip().upper()]
        return None


def _check_finite(*values: complex) -> None:
    for z in values:
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"non-finite amplitude {z!r}")


@dataclass(frozen=True)
class JonesVector:
    c_h: complex
    c_v: complex

    def __post_init__(self):
        object.__setattr__(self, "c_h", complex(self.c_h))
        object.__setattr__(self, "c_v", complex(self.c_v))
        _check_finite(self.c_h, self.c_v)

    @property
    def norm2(self) -> float:
        return abs(self.c_h) ** 2 + abs(self.c_v) ** 2


@dataclass(frozen=True)
class PhaseSet:
    """EOM phase ``eta`` plus the two local MZI path phases.

    The derived phases are always recomputed from the three primitives and
    are never wrapped; use :func:`wrap_phase` only for classification.
    """

    eta: float = 0.0
    psi_a: float = 0.0
    psi_b: float = 0.0

    def __post_init__(self):
        for name in ("eta", "psi_a", "psi_b"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def eta_alpha(self) -> float:
        return self.eta + self.psi_a

    @property
    def eta_beta(self) -> float:
        return self.eta + self.psi_b

    @property
    def eta_ab(self) -> float:
        return self.eta_alpha + self.eta_beta

    def eta_party(self, party) -> float:
        return self.eta_alpha if Party.parse(party) is Party.ALPHA else self.eta_beta


def wrap_phase(phi: float) -> float:
    """Reduce ``phi`` into ``[0, 2*pi)``."""
    return math.fmod(math.fmod(phi, 2 * math.pi) + 2 * math.pi, 2 * math.pi)


@dataclass(frozen=True)
class TaggedModeField:
    party: Party
    tag: SourceTag
    coef_h: complex
    coef_v: complex

    def __post_init__(self):
        object.__setattr__(self, "party", Party.parse(self.party))
        object.__setattr__(self, "tag", SourceTag(self.tag))
        object.__setattr__(self, "coef_h", complex(self.coef_h))
        object.__setattr__(self, "coef_v", complex(self.coef_v))
        _check_finite(self.coef_h, self.coef_v)

    @property
    def intensity(self) -> float:
        return abs(self.coef_h) ** 2 + abs(self.coef_v) ** 2

    def scaled(self, factor: complex) -> "TaggedModeField":
        return TaggedModeField(self.party, self.tag, self.coef_h * factor, self.coef_v * factor)


def apply_hwp(phi: float, v: JonesVector) -> JonesVector:
    """Half-wave plate with fast axis at ``phi`` (radians from H)."""
    if not math.isfinite(phi):
        raise ValueError(f"plate angle must be finite, got {phi!r}")
    c, s = math.cos(2 * phi), math.sin(2 * phi)
    return JonesVector(v.c_h * c + v.c_v * s, v.c_h * s - v.c_v * c)


def apply_pbs(v: JonesVector) -> tuple[complex, complex]:
    """Split into (transmitted H port, reflected V port) amplitudes."""
    return v.c_h, v.c_v


def make_party_field(party, tag, phases: PhaseSet, i0: float) -> TaggedModeField:
    """Field reaching one party's analyzer for a single D or A pulse.

    Each mode label carries amplitude ``sqrt(i0/2)`` so the per-bin intensity
    seen by each party is ``i0``. The A pulse picks up the party phase
    ``eta + psi`` and the sign flip on its H component.
    """
    if not i0 > 0:
        raise ValueError(f"i0 must be positive, got {i0!r}")
    party = Party.parse(party)
    tag = SourceTag(tag)
    s = math.sqrt(i0 / 2)
    if tag is SourceTag.D:
        return TaggedModeField(party, tag, s, s)
    ph = cmath.exp(1j * phases.eta_party(party))
    return TaggedModeField(party, tag, -s * ph, s * ph)


def analyzer_ports(angle: float, f: TaggedModeField) -> tuple[TaggedModeField, TaggedModeField]:
    """HWP+PBS analyzer set to projection angle ``angle``.

    Port 1 weights the labels by (cos, sin) of the angle; port 2 is the same
    analyzer at ``angle + pi/2``. Labels are scaled, never mixed.
    """
    c, s = math.cos(angle), math.sin(angle)
    port1 = TaggedModeField(f.party, f.tag, f.coef_h * c, f.coef_v * s)
    port2 = TaggedModeField(f.party, f.tag, -f.coef_h * s, f.coef_v * c)
    return port1, port2
