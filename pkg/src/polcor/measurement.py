"""Statistics over digitized sample streams.

Local means per port, D/A selective pairing, joint correlation estimates for
the four detector pairs, CHSH evaluation and Bell-state labelling.

The selective measurement adds the joint amplitude of a D bin and its paired
A bin coherently before squaring, which is what produces the
``1 +/- exp(i eta_ab)`` weights of the same-pol and cross-pol classes.
"""
from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .algebra import DetectorPair, closed_form_R, reduce_pair_amplitudes
from .optics import Party, SourceTag, wrap_phase
from .simulator import OpticalConfig, OverlapMode, SampleStream, Schedule, simulate, simulate_party

__all__ = [
    "LocalStats",
    "Pairing",
    "PairCorrelation",
    "BellLabel",
    "PairFamily",
    "ChshResult",
    "local_stats",
    "pair_bins",
    "estimate_R",
    "correlate",
    "run_pipeline",
    "correlation_E",
    "chsh",
    "classify_bell_state",
    "fringe_visibility",
    "eraser_scan",
    "CSV_COLUMNS",
    "correlation_csv",
]

ALL_PAIRS = tuple(DetectorPair)
CANONICAL_CHSH_ANGLES = (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)


class SelectiveMeasurementError(ValueError):
    """Raised for streams where D/A selective pairing has no meaning."""


@dataclass(frozen=True)
class LocalStats:
    party: Party
    n: int
    port1_mean: float
    port1_se: float
    port2_mean: float
    port2_se: float
    full_mean: float


@dataclass(frozen=True)
class Pairing:
    d_bins: np.ndarray
    a_bins: np.ndarray
    n_bins: int

    @property
    def n_pairs(self) -> int:
        return int(self.d_bins.size)

    @property
    def n_discarded(self) -> int:
        return self.n_bins - 2 * self.n_pairs

    @property
    def discarded_fraction(self) -> float:
        return self.n_discarded / self.n_bins

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.d_bins.tolist(), self.a_bins.tolist()))


@dataclass(frozen=True)
class PairCorrelation:
    pair: DetectorPair
    estimate: float
    closed_form: float
    n_pairs: int
    discarded_fraction: float
    std_err: float


class BellLabel(str, enum.Enum):
    PHI_PLUS = "PhiPlus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"
    PHI_MINUS = "PhiMinus"


class PairFamily(str, enum.Enum):
    SAME_PORT = "SamePort"
    CROSS_PORT = "CrossPort"

    @classmethod
    def of(cls, value) -> "PairFamily":
        if isinstance(value, PairFamily):
            return value
        try:
            return cls(value)
        except ValueError:
            pair = DetectorPair(value)
            return cls.SAME_PORT if pair.same_port else cls.CROSS_PORT


@dataclass(frozen=True)
class ChshResult:
    angles: tuple[float, float, float, float]
    correlations: dict
    s_value: float


def _require_separated(*streams: SampleStream) -> None:
    for s in streams:
        if s.mode is not OverlapMode.SEPARATED:
            raise SelectiveMeasurementError(
                "selective measurement undefined for coherent-overlap streams")


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def local_stats(stream: SampleStream, party=None) -> LocalStats:
    """Per-port mean intensity with standard errors, plus the full-field mean."""
    if party is not None and Party.parse(party) is not stream.party:
        raise ValueError(f"stream belongs to {stream.party.name}, not {party!r}")
    if len(stream) == 0:
        raise ValueError("empty stream")
    _require_separated(stream)
    i1, i2 = stream.intensity(1), stream.intensity(2)
    m1, se1 = _mean_se(i1)
    m2, se2 = _mean_se(i2)
    return LocalStats(stream.party, len(stream), m1, se1, m2, se2, float((i1 + i2).mean()))


def pair_bins(schedule) -> Pairing:
    """Greedy forward pairing of D bins with later A bins.

    Each D bin, in order, takes the earliest still-unpaired A bin after it.
    Implemented as a FIFO of waiting D bins: an A bin pairs with the oldest
    waiting D, or is discarded if none waits. The FIFO is tracked through the
    running minimum of the +1/-1 walk so no Python loop is needed.
    """
    tags = schedule.tags if isinstance(schedule, Schedule) else np.asarray(schedule, dtype=np.uint8)
    n = int(tags.size)
    is_a = tags == SourceTag.A
    if n == 0 or is_a.all() or not is_a.any():
        raise ValueError("pairing needs at least one D bin and one A bin")
    walk = np.cumsum(np.where(is_a, -1, 1))
    floor = np.minimum.accumulate(np.minimum(walk, 0))
    floor_before = np.concatenate(([0], floor[:-1]))
    orphan_a = is_a & (walk < floor_before)
    a_bins = np.flatnonzero(is_a & ~orphan_a)
    d_bins = np.flatnonzero(~is_a)[: a_bins.size]
    return Pairing(d_bins, a_bins, n)


def _check_streams(alice: SampleStream, bob: SampleStream) -> None:
    if alice.party is not Party.ALPHA or bob.party is not Party.BETA:
        raise ValueError("expected an Alpha stream and a Beta stream")
    if len(alice) != len(bob):
        raise ValueError(f"stream lengths differ: {len(alice)} vs {len(bob)}")
    if not np.array_equal(alice.tags, bob.tags):
        raise ValueError("parties disagree on the pulse schedule")


def estimate_R(pairing: Pairing, alice: SampleStream, bob: SampleStream, pair,
               cfg: OpticalConfig) -> PairCorrelation:
    """Joint intensity of one detector pair averaged over all D/A pairs."""
    _require_separated(alice, bob)
    pair = DetectorPair(pair)
    if pairing.n_pairs == 0:
        raise ValueError("no D/A pairs to correlate")
    pa, pb = pair.ports
    port_a, port_b = alice.port(pa), bob.port(pb)
    d, a = pairing.d_bins, pairing.a_bins
    same, cross = reduce_pair_amplitudes(port_a[d], port_b[d], port_a[a], port_b[a])
    joint = np.abs(same) ** 2 + np.abs(cross) ** 2
    est, se = _mean_se(joint)
    cf = closed_form_R(pair, cfg.theta, cfg.xi, cfg.phases.eta_ab, cfg.i0)
    return PairCorrelation(pair, est, cf, pairing.n_pairs, pairing.discarded_fraction, se)


def correlate(cfg: OpticalConfig, alice: SampleStream, bob: SampleStream,
              pairs: Iterable = ALL_PAIRS) -> list[PairCorrelation]:
    """Pair the shared schedule read off the streams and estimate each pair."""
    _require_separated(alice, bob)
    _check_streams(alice, bob)
    pairing = pair_bins(alice.tags)
    return [estimate_R(pairing, alice, bob, p, cfg) for p in pairs]


def run_pipeline(cfg: OpticalConfig, pairs: Iterable = ALL_PAIRS) -> list[PairCorrelation]:
    _, alice, bob = simulate(cfg)
    return correlate(cfg, alice, bob, pairs)


def correlation_E(estimates) -> float:
    """Normalized correlation ``(AB + CD - AD - BC) / (AB + CD + AD + BC)``.

    ``estimates`` maps each detector pair to a number or a
    :class:`PairCorrelation` (its ``estimate`` is used).
    """
    vals = {}
    for p in ALL_PAIRS:
        if p not in estimates and p.value not in estimates:
            raise ValueError(f"missing detector pair {p.value}")
        v = estimates[p] if p in estimates else estimates[p.value]
        vals[p] = v.estimate if isinstance(v, PairCorrelation) else float(v)
    num = vals[DetectorPair.AB] + vals[DetectorPair.CD] - vals[DetectorPair.AD] - vals[DetectorPair.BC]
    den = sum(vals.values())
    if den == 0:
        raise ZeroDivisionError("all four joint intensities vanish")
    return num / den


def _closed_E(cfg: OpticalConfig) -> float:
    return correlation_E({p: closed_form_R(p, cfg.theta, cfg.xi, cfg.phases.eta_ab, cfg.i0)
                          for p in ALL_PAIRS})


def chsh(cfg: OpticalConfig, a: float, a2: float, b: float, b2: float,
         mode: str = "closed") -> ChshResult:
    """``S = E(a,b) - E(a,b') + E(a',b) + E(a',b')``.

    ``mode="closed"`` uses the closed forms, ``mode="mc"`` simulates
    ``cfg.n_bins`` bins per setting. Phases come from ``cfg`` and are the
    same for all four settings.
    """
    if mode not in ("closed", "mc"):
        raise ValueError(f"mode must be 'closed' or 'mc', got {mode!r}")
    def e(x, y):
        c = cfg.replace(theta=x, xi=y)
        if mode == "closed":
            return _closed_E(c)
        return correlation_E({r.pair: r for r in run_pipeline(c)})

    corr = {"ab": e(a, b), "ab'": e(a, b2), "a'b": e(a2, b), "a'b'": e(a2, b2)}
    s = corr["ab"] - corr["ab'"] + corr["a'b"] + corr["a'b'"]
    return ChshResult((a, a2, b, b2), corr, s)


def classify_bell_state(eta_ab: float, pair_family, tol: float = 1e-6) -> BellLabel:
    """Name the fringe form selected by the summed phase and the port family."""
    family = PairFamily.of(pair_family)
    w = wrap_phase(eta_ab)
    d_even = min(w, 2 * math.pi - w)
    d_odd = abs(w - math.pi)
    if d_even <= tol:
        even = True
    elif d_odd <= tol:
        even = False
    else:
        raise ValueError(f"unclassified: eta_ab={eta_ab!r} is not within {tol} of 0 or pi (mod 2pi)")
    if family is PairFamily.SAME_PORT:
        return BellLabel.PHI_PLUS if even else BellLabel.PSI_PLUS
    return BellLabel.PSI_MINUS if even else BellLabel.PHI_MINUS


def fringe_visibility(phase: Sequence[float], intensity: Sequence[float]) -> float:
    """Least-squares fit ``I = c0 + c1 cos(p) + c2 sin(p)``; returns ``hypot(c1, c2) / c0``."""
    p = np.asarray(phase, dtype=float)
    y = np.asarray(intensity, dtype=float)
    design = np.column_stack([np.ones_like(p), np.cos(p), np.sin(p)])
    (c0, c1, c2), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(math.hypot(c1, c2) / c0)


def eraser_scan(cfg: OpticalConfig, party=Party.ALPHA, n_points: int = 16):
    """Mean port-1 intensity while sweeping the party's path phase over one period.

    Returns ``(party_phases, mean_intensities, visibility)``. In coherent
    mode this traces the overlap fringe; in separated mode it is flat.
    """
    party = Party.parse(party)
    key = "psi_a" if party is Party.ALPHA else "psi_b"
    sweep = np.linspace(0.0, 2 * math.pi, n_points, endpoint=False)
    means, eta_party = [], []
    for psi in sweep:
        c = cfg.replace(**{key: float(psi)})
        means.append(float(simulate_party(c, party).intensity(1).mean()))
        eta_party.append(c.phases.eta_party(party))
    return np.array(eta_party), np.array(means), fringe_visibility(eta_party, means)


CSV_COLUMNS = ("pair", "theta", "xi", "psi_a", "psi_b", "eta", "eta_ab",
               "n_pairs", "discarded_fraction", "estimate", "closed_form", "std_err")


def config_comment(cfg: OpticalConfig, title: str) -> str:
    lines = [f"# polcor {title}"]
    lines += [f"# {k}={v}" for k, v in cfg.items()]
    return "\n".join(lines) + "\n"


def correlation_rows(cfg: OpticalConfig, results: Iterable[PairCorrelation]) -> list[list[str]]:
    rows = []
    for r in results:
        rows.append([r.pair.value, repr(cfg.theta), repr(cfg.xi), repr(cfg.psi_a), repr(cfg.psi_b),
                     repr(cfg.eta), repr(cfg.phases.eta_ab), str(r.n_pairs),
                     repr(r.discarded_fraction), repr(r.estimate), repr(r.closed_form),
                     repr(r.std_err)])
    return rows


def correlation_csv(cfg: OpticalConfig, results: Iterable[PairCorrelation],
                    title: str = "correlation") -> str:
    """Full CSV text: config comment block, column header, one row per pair."""
    buf = io.StringIO()
    buf.write(config_comment(cfg, title))
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in correlation_rows(cfg, results):
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
