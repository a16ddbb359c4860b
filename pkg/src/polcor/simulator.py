"""Seeded time-bin Monte Carlo of the source, beam splitter and both analyzers.

Every time bin carries one EOM pulse, D or A, drawn independently with
probability ``duty`` for A. Both parties see the same schedule because one
source feeds both arms. Each party's field is built per bin and pushed
through its analyzer; the two output ports are recorded as a
:class:`SampleStream`, a thin wrapper around a record array in wire layout.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence(seed)``; the raw 64-bit outputs are mapped to doubles as
``(x >> 11) * 2**-53``. Both steps are fixed algorithms, so a schedule is
reproducible bit for bit on any platform.
"""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Iterator

import numpy as np

from .optics import (
    Party,
    PhaseSet,
    SourceTag,
    TaggedModeField,
    analyzer_ports,
    make_party_field,
)
from .wire import RECORD_DTYPE

__all__ = [
    "OverlapMode",
    "OpticalConfig",
    "PulseBin",
    "Schedule",
    "DetectorSample",
    "SampleStream",
    "gen_schedule",
    "propagate_bin",
    "simulate_party",
    "simulate",
    "coherent_bin_intensity",
    "write_stream",
]


class OverlapMode(str, enum.Enum):
    SEPARATED = "separated"
    COHERENT = "coherent"


PRIVATE_FIELDS = {
    Party.ALPHA: ("theta", "psi_a"),
    Party.BETA: ("xi", "psi_b"),
}


@dataclass(frozen=True)
class OpticalConfig:
    theta: float = 0.0
    xi: float = 0.0
    psi_a: float = 0.0
    psi_b: float = 0.0
    eta: float = 0.0
    i0: float = 1.0
    n_bins: int = 10_000
    duty: float = 0.5
    seed: int = 0
    overlap_mode: OverlapMode = OverlapMode.SEPARATED

    def __post_init__(self):
        for name in ("theta", "xi", "psi_a", "psi_b", "eta", "i0", "duty"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if not self.i0 > 0:
            raise ValueError(f"i0 must be > 0, got {self.i0!r}")
        if not 0 < self.duty < 1:
            raise ValueError(f"duty must be in (0, 1), got {self.duty!r}")
        if int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise ValueError(f"n_bins must be an integer >= 1, got {self.n_bins!r}")
        object.__setattr__(self, "n_bins", int(self.n_bins))
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "overlap_mode", OverlapMode(self.overlap_mode))

    @property
    def phases(self) -> PhaseSet:
        return PhaseSet(self.eta, self.psi_a, self.psi_b)

    def replace(self, **changes) -> "OpticalConfig":
        return replace(self, **changes)

    def items(self) -> list[tuple[str, str]]:
        """Canonical ``(key, text)`` pairs; floats use ``repr`` so they round-trip."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            out.append((f.name, v.value if isinstance(v, OverlapMode) else repr(v)))
        return out

    def digest(self, exclude: tuple[str, ...] = ()) -> bytes:
        text = "".join(f"{k}={v}\n" for k, v in self.items() if k not in exclude)
        return hashlib.sha256(text.encode("ascii")).digest()

    def shared_digest(self) -> bytes:
        """Digest of the fields both parties know (everything but analyzer angles and path phases)."""
        private = PRIVATE_FIELDS[Party.ALPHA] + PRIVATE_FIELDS[Party.BETA]
        return self.digest(exclude=private)


@dataclass(frozen=True)
class PulseBin:
    index: int
    tag: SourceTag


class Schedule:
    """Dense sequence of pulse tags, bin ``i`` at position ``i``."""

    def __init__(self, tags):
        tags = np.asarray(tags, dtype=np.uint8)
        if tags.ndim != 1 or tags.size < 1:
            raise ValueError("schedule needs at least one bin")
        if (tags > SourceTag.A).any():
            raise ValueError("schedule tags must be 0 (D) or 1 (A)")
        self.tags = tags

    @classmethod
    def from_tags(cls, tags) -> "Schedule":
        return cls([SourceTag[t] if isinstance(t, str) else SourceTag(t) for t in tags])

    def __len__(self) -> int:
        return int(self.tags.size)

    def __getitem__(self, i: int) -> PulseBin:
        return PulseBin(int(i) if i >= 0 else len(self) + int(i), SourceTag(int(self.tags[i])))

    def __iter__(self) -> Iterator[PulseBin]:
        for i, t in enumerate(self.tags.tolist()):
            yield PulseBin(i, SourceTag(t))

    def __eq__(self, other) -> bool:
        return isinstance(other, Schedule) and np.array_equal(self.tags, other.tags)

    @property
    def fraction_a(self) -> float:
        return float(self.tags.mean())


def gen_schedule(n_bins: int, duty: float, seed: int) -> Schedule:
    """I.i.d. Bernoulli EOM switching: each bin is A with probability ``duty``."""
    if not 0 < duty < 1:
        raise ValueError(f"duty must be in (0, 1), got {duty!r}")
    if int(n_bins) != n_bins or n_bins < 1:
        raise ValueError(f"n_bins must be an integer >= 1, got {n_bins!r}")
    bitgen = np.random.PCG64(np.random.SeedSequence(int(seed)))
    raw = bitgen.random_raw(int(n_bins))
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return Schedule((u < duty).astype(np.uint8))


@dataclass(frozen=True)
class DetectorSample:
    bin: int
    party: Party
    tag: SourceTag
    port1_coef_h: complex
    port1_coef_v: complex
    port2_coef_h: complex
    port2_coef_v: complex
    mode: OverlapMode = field(default=OverlapMode.SEPARATED, compare=False)

    @property
    def intensity_port1(self) -> float:
        return abs(self.port1_coef_h) ** 2 + abs(self.port1_coef_v) ** 2

    @property
    def intensity_port2(self) -> float:
        return abs(self.port2_coef_h) ** 2 + abs(self.port2_coef_v) ** 2


def _analyzer_angle(cfg: OpticalConfig, party: Party) -> float:
    return cfg.theta if party is Party.ALPHA else cfg.xi


def _bin_field(cfg: OpticalConfig, party: Party, tag: SourceTag) -> TaggedModeField:
    f = make_party_field(party, tag, cfg.phases, cfg.i0)
    if cfg.overlap_mode is OverlapMode.COHERENT:
        # both pulses share the bin: D and A add as amplitudes on each label
        other = make_party_field(party, SourceTag(1 - tag), cfg.phases, cfg.i0)
        f = TaggedModeField(party, tag, f.coef_h + other.coef_h, f.coef_v + other.coef_v)
    return f


def _port_row(cfg: OpticalConfig, party: Party, tag: SourceTag) -> tuple[complex, ...]:
    p1, p2 = analyzer_ports(_analyzer_angle(cfg, party), _bin_field(cfg, party, tag))
    return p1.coef_h, p1.coef_v, p2.coef_h, p2.coef_v


def propagate_bin(bin: PulseBin, cfg: OpticalConfig) -> tuple[DetectorSample, DetectorSample]:
    """Alice's and Bob's digitized outputs for one time bin."""
    out = []
    for party in Party:
        row = _port_row(cfg, party, bin.tag)
        out.append(DetectorSample(bin.index, party, bin.tag, *row, mode=cfg.overlap_mode))
    return out[0], out[1]


class SampleStream:
    """All bins digitized by one party, stored in wire-record layout."""

    def __init__(self, party, records: np.ndarray, mode=OverlapMode.SEPARATED):
        if records.dtype != RECORD_DTYPE:
            raise TypeError("records must use RECORD_DTYPE")
        self.party = Party.parse(party)
        self.records = records
        self.mode = OverlapMode(mode)

    def __len__(self) -> int:
        return int(self.records.size)

    def __iter__(self) -> Iterator[DetectorSample]:
        for r in self.records:
            yield DetectorSample(int(r["bin"]), self.party, SourceTag(int(r["tag"])),
                                 complex(r["p1h"]), complex(r["p1v"]),
                                 complex(r["p2h"]), complex(r["p2v"]), mode=self.mode)

    def __getitem__(self, i: int) -> DetectorSample:
        r = self.records[i]
        return DetectorSample(int(r["bin"]), self.party, SourceTag(int(r["tag"])),
                              complex(r["p1h"]), complex(r["p1v"]),
                              complex(r["p2h"]), complex(r["p2v"]), mode=self.mode)

    @property
    def bins(self) -> np.ndarray:
        return self.records["bin"]

    @property
    def tags(self) -> np.ndarray:
        return self.records["tag"]

    def port(self, k: int) -> np.ndarray:
        """``(n, 2)`` complex array of (H, V) coefficients of port ``k`` (1 or 2)."""
        if k not in (1, 2):
            raise ValueError(f"port must be 1 or 2, got {k!r}")
        return np.stack([self.records[f"p{k}h"], self.records[f"p{k}v"]], axis=1)

    def intensity(self, k: int) -> np.ndarray:
        p = self.port(k)
        return (np.abs(p) ** 2).sum(axis=1)

    def tobytes(self) -> bytes:
        return self.records.tobytes()


def simulate_party(cfg: OpticalConfig, party, schedule: Schedule | None = None) -> SampleStream:
    """Vectorized :func:`propagate_bin` for one party over the whole schedule.

    Within a run every bin of a given tag sees the same optics, so the two
    per-tag rows are computed once with the scalar path and gathered.
    """
    party = Party.parse(party)
    if schedule is None:
        schedule = gen_schedule(cfg.n_bins, cfg.duty, cfg.seed)
    rows = np.array([_port_row(cfg, party, t) for t in SourceTag], dtype=np.complex128)
    tags = schedule.tags
    recs = np.empty(tags.size, dtype=RECORD_DTYPE)
    recs["bin"] = np.arange(tags.size, dtype=np.uint64)
    recs["tag"] = tags
    picked = rows[tags]
    for j, name in enumerate(("p1h", "p1v", "p2h", "p2v")):
        recs[name] = picked[:, j]
    return SampleStream(party, recs, cfg.overlap_mode)


def simulate(cfg: OpticalConfig) -> tuple[Schedule, SampleStream, SampleStream]:
    schedule = gen_schedule(cfg.n_bins, cfg.duty, cfg.seed)
    return (schedule,
            simulate_party(cfg, Party.ALPHA, schedule),
            simulate_party(cfg, Party.BETA, schedule))


def coherent_bin_intensity(theta: float, eta_party: float, i0: float = 1.0) -> float:
    """Port-1 intensity when D and A pulses overlap in one bin.

    ``i0 * (1 - cos(2 theta) cos(eta_party))``: the fringe that temporal
    separation suppresses.
    """
    return i0 * (1 - math.cos(2 * theta) * math.cos(eta_party))


def write_stream(path, stream: SampleStream, cfg: OpticalConfig) -> None:
    """Write header + records exactly as they would travel over TCP."""
    from .harness import stream_bytes

    with open(path, "wb") as fh:
        fh.write(stream_bytes(stream, cfg))


def config_dict(cfg: OpticalConfig) -> dict:
    d = asdict(cfg)
    d["overlap_mode"] = cfg.overlap_mode.value
    return d
