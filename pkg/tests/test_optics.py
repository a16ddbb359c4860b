import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polcor.optics import (
    JonesVector,
    Party,
    PhaseSet,
    SourceTag,
    TaggedModeField,
    analyzer_ports,
    apply_hwp,
    apply_pbs,
    make_party_field,
)

S = 1 / math.sqrt(2)
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
angles = st.floats(-4 * math.pi, 4 * math.pi, allow_nan=False)


def hwp_matrix(phi):
    # oracle: rotate into the plate frame, retard by pi, rotate back
    c, s = math.cos(phi), math.sin(phi)
    rot = np.array([[c, s], [-s, c]])
    return rot.T @ np.diag([1.0, -1.0]) @ rot


def test_hwp_vertical_to_diagonal_at_22_5_degrees():
    out = apply_hwp(math.radians(22.5), JonesVector(0, 1))
    assert out.c_h == pytest.approx(S)
    assert out.c_v == pytest.approx(-S)
    assert abs(out.c_h) == pytest.approx(abs(out.c_v))


@pytest.mark.parametrize("phi, vin, vout", [
    (0.0, (1, 0), (1, 0)),
    (math.pi / 4, (1, 0), (0, 1)),
])
def test_hwp_trivial_cases(phi, vin, vout):
    out = apply_hwp(phi, JonesVector(*vin))
    assert (out.c_h, out.c_v) == pytest.approx(vout, abs=1e-15)


@given(phi=angles, re1=finite, im1=finite, re2=finite, im2=finite)
def test_hwp_matches_jones_matrix(phi, re1, im1, re2, im2):
    v = JonesVector(complex(re1, im1), complex(re2, im2))
    want = hwp_matrix(phi) @ np.array([v.c_h, v.c_v])
    out = apply_hwp(phi, v)
    assert np.allclose([out.c_h, out.c_v], want, atol=1e-12)


def test_hwp_unitarity_1000_random():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        z = rng.normal(size=4)
        v = JonesVector(complex(z[0], z[1]), complex(z[2], z[3]))
        out = apply_hwp(rng.uniform(-10, 10), v)
        assert out.norm2 == pytest.approx(v.norm2, rel=1e-12)


def test_hwp_rejects_non_finite():
    with pytest.raises(ValueError):
        apply_hwp(float("nan"), JonesVector(1, 0))
    with pytest.raises(ValueError):
        JonesVector(float("inf"), 0)


@pytest.mark.parametrize("v, ports", [
    ((1, 0), (1, 0)),
    ((S, S), (S, S)),
    ((0.6, 0.8j), (0.6, 0.8j)),
])
def test_pbs_projects_onto_axes(v, ports):
    h, vv = apply_pbs(JonesVector(*v))
    assert (h, vv) == pytest.approx(ports)
    assert abs(h) ** 2 + abs(vv) ** 2 == pytest.approx(JonesVector(*v).norm2)


def test_pbs_intensities_0_36_0_64():
    h, v = apply_pbs(JonesVector(0.6, 0.8j))
    assert abs(h) ** 2 == pytest.approx(0.36)
    assert abs(v) ** 2 == pytest.approx(0.64)


def test_party_field_d_pulse():
    f = make_party_field(Party.ALPHA, SourceTag.D, PhaseSet(0.3, 1.2, -0.4), 1.0)
    assert (f.coef_h, f.coef_v) == pytest.approx((S, S))
    assert f.intensity == pytest.approx(1.0)


def test_party_field_a_pulse_sign():
    f = make_party_field(Party.ALPHA, SourceTag.A, PhaseSet(), 1.0)
    assert (f.coef_h, f.coef_v) == pytest.approx((-S, S))


def test_party_field_beta_a_pulse_at_pi():
    f = make_party_field(Party.BETA, SourceTag.A, PhaseSet(eta=math.pi), 1.0)
    assert (f.coef_h, f.coef_v) == pytest.approx((S, -S), abs=1e-15)


def test_party_field_uses_own_phase():
    ph = PhaseSet(eta=0.1, psi_a=0.5, psi_b=1.5)
    fa = make_party_field("alice", "A", ph, 2.0)
    fb = make_party_field("bob", "A", ph, 2.0)
    assert fa.coef_v == pytest.approx(cmath.exp(0.6j))
    assert fb.coef_v == pytest.approx(cmath.exp(1.6j))


@pytest.mark.parametrize("i0", [0.0, -1.0])
def test_party_field_rejects_nonpositive_intensity(i0):
    with pytest.raises(ValueError):
        make_party_field(Party.ALPHA, SourceTag.D, PhaseSet(), i0)


@given(eta=angles, delta=angles, i0=st.floats(0.01, 100))
def test_phase_covariance(eta, delta, i0):
    base = make_party_field(Party.BETA, SourceTag.A, PhaseSet(eta=eta), i0)
    shifted = make_party_field(Party.BETA, SourceTag.A, PhaseSet(eta=eta + delta), i0)
    f = cmath.exp(1j * delta)
    assert shifted.coef_h == pytest.approx(base.coef_h * f, abs=1e-12)
    assert shifted.coef_v == pytest.approx(base.coef_v * f, abs=1e-12)


def test_analyzer_axis_aligned():
    s = math.sqrt(0.5)
    f = TaggedModeField(Party.ALPHA, SourceTag.D, s, s)
    p1, p2 = analyzer_ports(0.0, f)
    assert (p1.coef_h, p1.coef_v) == pytest.approx((s, 0))
    assert (p2.coef_h, p2.coef_v) == pytest.approx((0, s))


def test_analyzer_quarter_pi_on_a_field():
    eta = 0.9
    s = math.sqrt(0.5)
    f = make_party_field(Party.ALPHA, SourceTag.A, PhaseSet(eta=eta), 1.0)
    p1, _ = analyzer_ports(math.pi / 4, f)
    ph = cmath.exp(1j * eta)
    assert p1.coef_h == pytest.approx(-s * S * ph)
    assert p1.coef_v == pytest.approx(s * S * ph)


def test_analyzer_port2_is_port1_rotated():
    f = make_party_field(Party.BETA, SourceTag.A, PhaseSet(0.2, 0, 0.7), 1.3)
    theta = 0.37
    _, p2 = analyzer_ports(theta, f)
    q1, _ = analyzer_ports(theta + math.pi / 2, f)
    assert (p2.coef_h, p2.coef_v) == pytest.approx((q1.coef_h, q1.coef_v), abs=1e-15)


def test_analyzer_keeps_labels_distinct():
    # equal and opposite H/V would cancel if summed coherently; labels must not
    f = TaggedModeField(Party.ALPHA, SourceTag.A, -1, 1)
    p1, _ = analyzer_ports(math.pi / 4, f)
    assert p1.intensity == pytest.approx(1.0)


@given(angle=angles, re1=finite, im1=finite, re2=finite, im2=finite,
       tag=st.sampled_from(list(SourceTag)))
@settings(max_examples=300)
def test_port_completeness(angle, re1, im1, re2, im2, tag):
    f = TaggedModeField(Party.ALPHA, tag, complex(re1, im1), complex(re2, im2))
    p1, p2 = analyzer_ports(angle, f)
    assert p1.intensity + p2.intensity == pytest.approx(f.intensity, rel=1e-12, abs=1e-300)


def test_phase_set_derived_values():
    ph = PhaseSet(eta=0.5, psi_a=1.0, psi_b=-0.25)
    assert ph.eta_alpha == 1.5
    assert ph.eta_beta == 0.25
    assert ph.eta_ab == 1.75
    # no wrapping in arithmetic
    big = PhaseSet(eta=10.0)
    assert big.eta_ab == 20.0
