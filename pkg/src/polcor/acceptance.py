"""Acceptance criteria, runnable from pytest and from ``polcor verify``.

Each ``criterion_*`` function returns a :class:`CriterionResult`. Random
parameter draws use fixed seeds so a run is reproducible.

Monte Carlo comparisons of the form "within k standard errors" use
``k * se + FP_FLOOR``: in this model every paired bin yields the same joint
intensity, so the standard error can be exactly zero and only floating-point
rounding separates estimate from closed form.
"""
from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import (
    DetectorPair,
    closed_form_R,
    expand_joint,
    intensity_expectation,
    pair_angles,
    party_fields,
    reduce,
)
from .harness import CorrelatorServer, run_party
from .measurement import (
    CANONICAL_CHSH_ANGLES,
    BellLabel,
    PairFamily,
    chsh,
    classify_bell_state,
    correlation_csv,
    eraser_scan,
    local_stats,
    run_pipeline,
)
from .optics import Party, PhaseSet
from .simulator import OpticalConfig, OverlapMode, gen_schedule, simulate, simulate_party

FP_FLOOR = 1e-12
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(number: int, name: str, budget: float | None = None):
    def wrap(fn: Callable[[], tuple[bool, str]]):
        def run() -> CriterionResult:
            t0 = time.perf_counter()
            ok, detail = fn()
            dt = time.perf_counter() - t0
            if budget is not None:
                detail += f"; runtime {dt:.2f}s (limit {budget:g}s)"
                ok = ok and dt < budget
            return CriterionResult(number, name, bool(ok), detail, dt)
        run.__name__ = fn.__name__
        run.number = number
        return run
    return wrap


def _within(est, cf, se, k) -> bool:
    return abs(est - cf) <= k * se + FP_FLOOR


def _phases_with_sum(rng, eta_ab: float) -> tuple[float, float, float]:
    """Random (eta, psi_a, psi_b) whose summed two-party phase is ``eta_ab``."""
    eta, psi_a = rng.uniform(0, TWO_PI, 2)
    return eta, psi_a, eta_ab - 2 * eta - psi_a


def _mc_check(rng, eta_ab, pairs, expected, n_configs, k=4.0, n_bins=100_000):
    worst = 0.0
    failures = []
    for i in range(n_configs):
        theta, xi = rng.uniform(-math.pi, math.pi, 2)
        eta, psi_a, psi_b = _phases_with_sum(rng, eta_ab)
        cfg = OpticalConfig(theta=theta, xi=xi, eta=eta, psi_a=psi_a, psi_b=psi_b,
                            n_bins=n_bins, duty=0.5, seed=1000 + i)
        for r in run_pipeline(cfg, pairs):
            want = expected[r.pair](theta, xi)
            worst = max(worst, abs(r.estimate - want))
            if not _within(r.estimate, want, r.std_err, k):
                failures.append((r.pair.value, theta, xi, r.estimate, want, r.std_err))
    return failures, worst


@_timed(1, "even-pi endpoint R_AB = I0^2 cos^2(theta - xi)", budget=10.0)
def criterion_even_endpoint():
    rng = np.random.default_rng(101)
    cf_err = 0.0
    for theta, xi in rng.uniform(-math.pi, math.pi, (100, 2)):
        eta, psi_a, psi_b = _phases_with_sum(rng, 0.0)
        eta_ab = PhaseSet(eta, psi_a, psi_b).eta_ab
        cf_err = max(cf_err, abs(closed_form_R("AB", theta, xi, eta_ab) - math.cos(theta - xi) ** 2))
    failures, worst = _mc_check(np.random.default_rng(102), 0.0, ("AB",),
                                {DetectorPair.AB: lambda t, x: math.cos(t - x) ** 2}, 100)
    ok = cf_err <= 1e-12 and not failures
    return ok, (f"closed-form max err {cf_err:.1e} (tol 1e-12); 100 MC configs at 1e5 bins, "
                f"max |est-cf| {worst:.1e}, {len(failures)} outside 4 s.e.")


@_timed(2, "odd-pi endpoint and cross-port forms")
def criterion_odd_endpoint():
    forms = {
        0.0: {
            DetectorPair.AB: lambda t, x: math.cos(t - x) ** 2,
            DetectorPair.CD: lambda t, x: math.cos(t - x) ** 2,
            DetectorPair.AD: lambda t, x: math.sin(t - x) ** 2,
            DetectorPair.BC: lambda t, x: math.sin(t - x) ** 2,
        },
        math.pi: {
            DetectorPair.AB: lambda t, x: math.sin(t + x) ** 2,
            DetectorPair.CD: lambda t, x: math.sin(t + x) ** 2,
            DetectorPair.AD: lambda t, x: math.cos(t + x) ** 2,
            DetectorPair.BC: lambda t, x: math.cos(t + x) ** 2,
        },
    }
    rng = np.random.default_rng(201)
    cf_err = 0.0
    for eta_ab, table in forms.items():
        for theta, xi in rng.uniform(-math.pi, math.pi, (100, 2)):
            eta, psi_a, psi_b = _phases_with_sum(rng, eta_ab)
            e = PhaseSet(eta, psi_a, psi_b).eta_ab
            for pair, f in table.items():
                cf_err = max(cf_err, abs(closed_form_R(pair, theta, xi, e) - f(theta, xi)))
    failures, worst = [], 0.0
    for j, (eta_ab, table) in enumerate(forms.items()):
        f, w = _mc_check(np.random.default_rng(210 + j), eta_ab, tuple(table), table, 20)
        failures += f
        worst = max(worst, w)
    ok = cf_err <= 1e-12 and not failures
    return ok, (f"closed-form max err {cf_err:.1e} over 2x100 configs x 4 pairs (tol 1e-12); "
                f"40 MC configs, max |est-cf| {worst:.1e}, {len(failures)} outside 4 s.e.")


@_timed(3, "local randomness: I = I0, flat under psi_a, psi_b, eta sweeps")
def criterion_local_randomness():
    rng = np.random.default_rng(301)
    base = OpticalConfig(theta=rng.uniform(0, math.pi), xi=rng.uniform(0, math.pi),
                         n_bins=100_000, seed=31)
    sweep = np.linspace(0, TWO_PI, 16, endpoint=False)
    per_bin_err = 0.0
    analytic_err = 0.0
    for key in ("psi_a", "psi_b", "eta"):
        means = {p: [] for p in Party}
        for v in sweep:
            cfg = base.replace(**{key: float(v)})
            for party in Party:
                angle = cfg.theta if party is Party.ALPHA else cfg.xi
                analytic_err = max(analytic_err, abs(
                    intensity_expectation(party, angle, cfg.phases, cfg.i0) - cfg.i0))
                s = simulate_party(cfg, party)
                per_bin_err = max(per_bin_err,
                                  float(np.abs(s.intensity(1) + s.intensity(2) - cfg.i0).max()))
                means[party].append(local_stats(s, party))
        for party, stats in means.items():
            for port in (1, 2):
                m = np.array([getattr(st, f"port{port}_mean") for st in stats])
                se = np.array([getattr(st, f"port{port}_se") for st in stats])
                dev = np.abs(m - m.mean())
                if (dev > 3 * se + FP_FLOOR).any():
                    return False, f"{key} sweep: {party.name} port{port} means spread {dev.max():.2e}"
                if (np.abs(m - base.i0 / 2) > 3 * se + FP_FLOOR).any():
                    return False, f"{party.name} port{port} mean differs from I0/2"
    ok = per_bin_err <= 1e-12 and analytic_err <= 1e-12
    return ok, (f"per-bin |I1+I2-I0| max {per_bin_err:.1e}; analytic max err {analytic_err:.1e}; "
                f"3x16-point sweeps, all per-port means within 3 s.e. of each other and of I0/2")


@_timed(4, "completeness R_AB + R_AD = R_CD + R_BC = I0^2")
def criterion_completeness():
    grid = np.linspace(-math.pi, math.pi, 20)
    err = 0.0
    for theta in grid:
        for xi in grid:
            for e in grid:
                ab = closed_form_R("AB", theta, xi, e)
                ad = closed_form_R("AD", theta, xi, e)
                cd = closed_form_R("CD", theta, xi, e)
                bc = closed_form_R("BC", theta, xi, e)
                err = max(err, abs(ab + ad - 1), abs(cd + bc - 1))
    rng = np.random.default_rng(401)
    mc_err, bad = 0.0, 0
    for i in range(10):
        theta, xi, eta, psi_a, psi_b = rng.uniform(0, TWO_PI, 5)
        i0 = float(rng.uniform(0.5, 2.0))
        cfg = OpticalConfig(theta=theta, xi=xi, eta=eta, psi_a=psi_a, psi_b=psi_b, i0=i0,
                            n_bins=100_000, seed=4000 + i)
        r = {x.pair: x for x in run_pipeline(cfg)}
        for p, q in ((DetectorPair.AB, DetectorPair.AD), (DetectorPair.CD, DetectorPair.BC)):
            d = abs(r[p].estimate + r[q].estimate - i0 * i0)
            mc_err = max(mc_err, d / (i0 * i0))
            if d > 4 * (r[p].std_err + r[q].std_err) + FP_FLOOR * i0 * i0:
                bad += 1
    ok = err <= 1e-12 and bad == 0
    return ok, (f"20^3 grid max err {err:.1e} (tol 1e-12); 10 MC configs max relative err "
                f"{mc_err:.1e}, {bad} outside tolerance")


@_timed(5, "symbolic fidelity of expansion + reduction")
def criterion_symbolic():
    rng = np.random.default_rng(501)
    worst = 0.0
    for _ in range(1000):
        theta, xi, eta, psi_a, psi_b = rng.uniform(-TWO_PI, TWO_PI, 5)
        i0 = float(rng.uniform(0.1, 3.0))
        pair = DetectorPair(rng.choice([p.value for p in DetectorPair]))
        phases = PhaseSet(eta, psi_a, psi_b)
        t, x = pair_angles(pair, theta, xi)
        terms = expand_joint(party_fields(Party.ALPHA, phases, i0),
                             party_fields(Party.BETA, phases, i0), t, x, phases)
        red = reduce(terms, i0)
        ph = complex(math.cos(phases.eta_ab), math.sin(phases.eta_ab))
        want_same = math.cos(t - x) * (1 + ph)
        want_cross = math.sin(t + x) * (1 - ph)
        worst = max(worst,
                    abs(red.same_pol_coef - want_same),
                    abs(red.cross_pol_coef - want_cross),
                    abs(red.value - closed_form_R(pair, theta, xi, phases.eta_ab, i0)) / (i0 * i0))
    return worst <= 1e-12, f"1000 random points, max deviation {worst:.1e} (tol 1e-12)"


@_timed(6, "CHSH violation S = 2 sqrt 2", budget=30.0)
def criterion_chsh():
    a, a2, b, b2 = CANONICAL_CHSH_ANGLES
    cfg = OpticalConfig(n_bins=100_000, seed=61)
    closed = chsh(cfg, a, a2, b, b2, mode="closed").s_value
    mc = chsh(cfg, a, a2, b, b2, mode="mc").s_value
    ok = abs(closed - 2 * math.sqrt(2)) <= 1e-12 and 2.78 <= mc <= 2.88
    return ok, (f"closed-form S={closed!r} (2sqrt2 err {abs(closed - 2 * math.sqrt(2)):.1e}); "
                f"MC S={mc:.6f} (band [2.78, 2.88])")


@_timed(7, "eraser contrast: coherent V = |cos 2theta|, separated V < 0.01")
def criterion_eraser():
    parts = []
    ok = True
    for theta in (0.0, math.pi / 8, math.pi / 4):
        base = OpticalConfig(theta=theta, n_bins=100_000, seed=71)
        _, _, v_coh = eraser_scan(base.replace(overlap_mode=OverlapMode.COHERENT))
        _, _, v_sep = eraser_scan(base)
        want = abs(math.cos(2 * theta))
        ok = ok and abs(v_coh - want) <= 0.02 and v_sep < 0.01
        parts.append(f"theta={theta:.4f}: coherent V={v_coh:.4f} (want {want:.4f}), separated V={v_sep:.1e}")
    return ok, "; ".join(parts)


@_timed(8, "Bell-state classification")
def criterion_bell_labels():
    expected = {
        (0.0, "SamePort"): BellLabel.PHI_PLUS,
        (math.pi, "SamePort"): BellLabel.PSI_PLUS,
        (0.0, "CrossPort"): BellLabel.PSI_MINUS,
        (math.pi, "CrossPort"): BellLabel.PHI_MINUS,
    }
    cases = 0
    for pair in DetectorPair:
        family = PairFamily.of(pair)
        for eta_ab in (0.0, math.pi):
            got = classify_bell_state(eta_ab, pair)
            if got is not expected[(eta_ab, family.value)]:
                return False, f"{pair.value} at eta_ab={eta_ab}: got {got.value}"
            cases += 1
    return cases == 8, f"{cases} (eta_ab, pair) cases map to PhiPlus/PsiPlus/PsiMinus/PhiMinus"


def _networked_csv(cfg: OpticalConfig) -> str:
    server = CorrelatorServer(cfg, "127.0.0.1", 0)
    out = {}

    def serve():
        try:
            out["csv"] = server.serve_once()[1]
        except Exception as exc:
            out["error"] = exc

    t = threading.Thread(target=serve)
    t.start()
    parties = [threading.Thread(target=run_party, args=(role, cfg, server.address))
               for role in (Party.BETA, Party.ALPHA)]
    for p in parties:
        p.start()
    for p in parties:
        p.join()
    t.join()
    if "error" in out:
        raise out["error"]
    return out["csv"]


@_timed(9, "distributed equivalence over loopback", budget=20.0)
def criterion_distributed():
    rng = np.random.default_rng(901)
    for i in range(5):
        theta, xi, eta, psi_a, psi_b = rng.uniform(0, TWO_PI, 5)
        cfg = OpticalConfig(theta=theta, xi=xi, eta=eta, psi_a=psi_a, psi_b=psi_b,
                            duty=float(rng.uniform(0.3, 0.7)), n_bins=10_000, seed=int(rng.integers(2**63)))
        local = correlation_csv(cfg, run_pipeline(cfg))
        remote = _networked_csv(cfg)
        if local.encode() != remote.encode():
            return False, f"config {i}: networked CSV differs from in-process CSV"
    return True, "5 random configs at 1e4 bins: networked CSV bytes == in-process CSV bytes"


@_timed(10, "determinism of streams and CSVs")
def criterion_determinism():
    cfg = OpticalConfig(theta=0.3, xi=1.1, eta=0.2, psi_a=0.7, psi_b=-0.4, n_bins=50_000, seed=2024)
    runs = []
    for _ in range(2):
        sched, alice, bob = simulate(cfg)
        runs.append((sched.tags.tobytes(), alice.tobytes(), bob.tobytes(),
                     correlation_csv(cfg, run_pipeline(cfg)).encode()))
    same = runs[0] == runs[1]
    fresh = gen_schedule(cfg.n_bins, cfg.duty, cfg.seed).tags.tobytes() == runs[0][0]
    return same and fresh, "two runs: schedule, both sample streams and CSV byte-identical"


CRITERIA = [
    criterion_even_endpoint,
    criterion_odd_endpoint,
    criterion_local_randomness,
    criterion_completeness,
    criterion_symbolic,
    criterion_chsh,
    criterion_eraser,
    criterion_bell_labels,
    criterion_distributed,
    criterion_determinism,
]


def run_all(echo=print) -> list[CriterionResult]:
    results = []
    for crit in CRITERIA:
        r = crit()
        if echo is not None:
            echo(r.line())
        results.append(r)
    return results
