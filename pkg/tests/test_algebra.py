import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polcor.algebra import (
    DetectorPair,
    ProductTerm,
    ReducedJoint,
    closed_form_R,
    expand_joint,
    format_derivation,
    intensity_expectation,
    pair_angles,
    party_fields,
    reduce,
)
from polcor.optics import Party, PhaseSet

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def expand(theta, xi, phases=PhaseSet(), i0=1.0, pair="AB"):
    t, x = pair_angles(pair, theta, xi)
    return expand_joint(party_fields(Party.ALPHA, phases, i0), party_fields(Party.BETA, phases, i0),
                        t, x, phases)


def by_key(terms):
    return {(t.source_pair, t.label): t for t in terms}


def hand_expansion(theta, xi):
    # oracle: write the two brackets out term by term (unit amplitude per label)
    alpha_d = {"H": math.cos(theta), "V": math.sin(theta)}
    beta_d = {"H": math.cos(xi), "V": math.sin(xi)}
    alpha_a = {"H": -math.cos(theta), "V": math.sin(theta)}
    beta_a = {"H": -math.cos(xi), "V": math.sin(xi)}
    out = {}
    for a, b in itertools.product("HV", repeat=2):
        out[("DD", a + b)] = alpha_d[a] * beta_d[b]
        out[("AA", a + b)] = alpha_a[a] * beta_a[b]
    return out


def test_expand_zero_angles():
    terms = by_key(expand(0.0, 0.0))
    assert terms[("DD", "HH")].coef == pytest.approx(1)
    for lab in ("HV", "VH", "VV"):
        assert terms[("DD", lab)].coef == pytest.approx(0, abs=1e-15)
    assert terms[("AA", "HH")].coef == pytest.approx(1)


def test_expand_cross_source_terms_are_explicit_zeros():
    terms = expand(0.4, -1.1, PhaseSet(0.3, 0.2, 0.1))
    cross = [t for t in terms if t.source_pair in ("DA", "AD")]
    assert len(cross) == 8
    assert all(t.coef == 0 and "temporal" in t.rule for t in cross)
    assert len(terms) == 16


def test_expand_quarter_pi():
    terms = by_key(expand(math.pi / 4, 0.0))
    assert terms[("DD", "HH")].coef == pytest.approx(math.cos(math.pi / 4))
    assert terms[("DD", "HV")].coef == pytest.approx(0, abs=1e-15)
    assert terms[("DD", "VH")].coef == pytest.approx(math.sin(math.pi / 4))
    assert terms[("DD", "VV")].coef == pytest.approx(0, abs=1e-15)


@given(theta=angles, xi=angles, eta=angles, psi_a=angles, psi_b=angles)
def test_expand_matches_hand_expansion(theta, xi, eta, psi_a, psi_b):
    ph = PhaseSet(eta, psi_a, psi_b)
    got = by_key(expand(theta, xi, ph, 1.7))
    for key, want in hand_expansion(theta, xi).items():
        assert got[key].coef == pytest.approx(want, abs=1e-12)
        assert got[key].phase == (ph.eta_ab if key[0] == "AA" else 0.0)


def test_expand_requires_both_tags():
    fa = party_fields(Party.ALPHA, PhaseSet(), 1.0)
    fb = party_fields(Party.BETA, PhaseSet(), 1.0)
    del fb[next(iter(fb))]
    with pytest.raises(ValueError):
        expand_joint(fa, fb, 0, 0, PhaseSet())


@given(theta=angles, xi=angles, eta_ab=angles)
def test_reduce_structure(theta, xi, eta_ab):
    ph = PhaseSet(eta=eta_ab / 2)
    red = reduce(expand(theta, xi, ph))
    e = cmath.exp(1j * ph.eta_ab)
    assert red.same_pol_coef == pytest.approx(math.cos(theta - xi) * (1 + e), abs=1e-12)
    assert red.cross_pol_coef == pytest.approx(math.sin(theta + xi) * (1 - e), abs=1e-12)


@given(theta=angles, xi=angles)
def test_reduce_endpoints(theta, xi):
    assert abs(reduce(expand(theta, xi, PhaseSet())).cross_pol_coef) < 1e-12
    assert abs(reduce(expand(theta, xi, PhaseSet(eta=math.pi / 2))).same_pol_coef) < 1e-12


def test_reduce_idempotent():
    red = reduce(expand(0.3, 1.2, PhaseSet(0.4, 0.1, -0.9), 2.0), 2.0)
    assert reduce(red) == red
    again = reduce(red.as_terms(), 2.0)
    assert again.same_pol_coef == red.same_pol_coef
    assert again.cross_pol_coef == red.cross_pol_coef
    assert again.scale == red.scale


def test_reduce_linear():
    t1 = expand(0.3, 1.2, PhaseSet(0.4, 0.1, -0.9))
    t2 = expand(-0.8, 0.5, PhaseSet(1.4, 0.0, 0.3))
    a, b = 0.7 - 0.2j, -1.3 + 0.5j
    mixed = [ProductTerm(x.label, x.source_pair, a * x.coef, x.phase) for x in t1]
    mixed += [ProductTerm(x.label, x.source_pair, b * x.coef, x.phase) for x in t2]
    r, r1, r2 = reduce(mixed), reduce(t1), reduce(t2)
    assert r.same_pol_coef == pytest.approx(a * r1.same_pol_coef + b * r2.same_pol_coef)
    assert r.cross_pol_coef == pytest.approx(a * r1.cross_pol_coef + b * r2.cross_pol_coef)


@pytest.mark.parametrize("bad", [
    [],
    [ProductTerm("HX", "DD", 1)],
    [ProductTerm("HH", "DX", 1)],
    [ProductTerm("HH", "DA", 0.5)],
    [ProductTerm("HH", "DD", complex("nan"))],
    ["not a term"],
])
def test_reduce_rejects_malformed(bad):
    with pytest.raises((ValueError, TypeError)):
        reduce(bad)


@pytest.mark.parametrize("pair, theta, xi, eta_ab, want", [
    ("AB", 0.4, 0.4, 0.0, 1.0),
    ("AD", 0.4, 0.4, 0.0, 0.0),
    ("AB", math.pi / 8, 0.0, 0.0, math.cos(math.pi / 8) ** 2),
    ("AD", math.pi / 8, math.pi / 8, math.pi, 0.5),
])
def test_closed_form_examples(pair, theta, xi, eta_ab, want):
    assert closed_form_R(pair, theta, xi, eta_ab) == pytest.approx(want, abs=1e-12)


def test_closed_form_value_0_853553():
    assert closed_form_R("AB", math.pi / 8, 0, 0) == pytest.approx(0.853553, abs=1e-6)


def test_closed_form_scales_with_i0_squared():
    assert closed_form_R("BC", 0.3, 0.9, 1.1, 3.0) == pytest.approx(9 * closed_form_R("BC", 0.3, 0.9, 1.1))


def test_closed_form_errors():
    with pytest.raises(ValueError):
        closed_form_R("XY", 0, 0, 0)
    with pytest.raises(ValueError):
        closed_form_R("AB", 0, 0, 0, i0=0)


def test_completeness_grid():
    grid = np.linspace(-math.pi, math.pi, 20)
    for t, x, e in itertools.product(grid, grid, grid):
        assert closed_form_R("AB", t, x, e) + closed_form_R("AD", t, x, e) == pytest.approx(1, abs=1e-12)
        assert closed_form_R("CD", t, x, e) + closed_form_R("BC", t, x, e) == pytest.approx(1, abs=1e-12)


@given(theta=angles, xi=angles, eta_ab=angles)
def test_port_symmetry(theta, xi, eta_ab):
    assert closed_form_R("CD", theta, xi, eta_ab) == pytest.approx(closed_form_R("AB", theta, xi, eta_ab), abs=1e-12)
    assert closed_form_R("BC", theta, xi, eta_ab) == pytest.approx(closed_form_R("AD", theta, xi, eta_ab), abs=1e-12)


@pytest.mark.parametrize("pair", list(DetectorPair))
def test_endpoint_fidelity(pair):
    rng = np.random.default_rng(11)
    for theta, xi in rng.uniform(-3, 3, (50, 2)):
        t, x = pair_angles(pair, theta, xi)
        for e in (0.0, 2 * math.pi, -2 * math.pi):
            assert closed_form_R(pair, theta, xi, e) == pytest.approx(math.cos(t - x) ** 2, abs=1e-12)
        for e in (math.pi, -math.pi):
            assert closed_form_R(pair, theta, xi, e) == pytest.approx(math.sin(t + x) ** 2, abs=1e-12)


def test_symbolic_fidelity_random():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        theta, xi, eta, pa, pb = rng.uniform(-6, 6, 5)
        i0 = rng.uniform(0.2, 4)
        pair = list(DetectorPair)[rng.integers(4)]
        ph = PhaseSet(eta, pa, pb)
        red = reduce(expand(theta, xi, ph, i0, pair), i0)
        assert red.value == pytest.approx(closed_form_R(pair, theta, xi, ph.eta_ab, i0), abs=1e-12 * i0 ** 2)


@pytest.mark.parametrize("party, theta, phases, i0", [
    (Party.ALPHA, 0.7, PhaseSet(eta=0.4, psi_a=1.3), 2.0),
    (Party.BETA, 0.0, PhaseSet(), 1.0),
])
def test_intensity_expectation_is_i0(party, theta, phases, i0):
    assert intensity_expectation(party, theta, phases, i0) == pytest.approx(i0, rel=1e-15)


def test_intensity_expectation_flat_in_psi_a():
    vals = [intensity_expectation(Party.ALPHA, 0.3, PhaseSet(eta=0.2, psi_a=p), 1.0)
            for p in np.linspace(0, 2 * math.pi, 64, endpoint=False)]
    assert np.ptp(vals) < 1e-15


def test_format_derivation_lists_every_term():
    text = format_derivation(0.2, 0.5, PhaseSet(0.1, 0.2, 0.3))
    lines = text.strip().splitlines()
    assert sum("no temporal overlap" in ln for ln in lines) == 8
    assert sum(ln.startswith("red") for ln in lines) == 2
    assert "closed form R_AB" in lines[-1]
