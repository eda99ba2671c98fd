import cmath
import math

import numpy as np
import pytest

from weylscat.errors import DirichletPole, ThresholdEnergy
from weylscat.slp import CoefficientProfile, ConstantSegment, SampledSegment
from weylscat.weyl import (
    LeadSpec,
    constant_lead_m,
    gamma0,
    gamma1,
    gamma_field_apply,
    internal_weyl,
    lead_weyl,
    tau_sample,
)

from conftest import PI, leads, two_segment_profile


def test_free_weyl_matrix(f0):
    M = internal_weyl(f0, 0.25).M
    assert np.max(np.abs(M - np.array([[0, 0.5], [0.5, 0]]))) < 1e-14


def test_dirichlet_pole(f0):
    with pytest.raises(DirichletPole):
        internal_weyl(f0, 1.0)
    with pytest.raises(DirichletPole):
        internal_weyl(f0, 4.0)


def test_nevanlinna(f0):
    M = internal_weyl(f0, 0.25 + 1j).M
    assert np.min(np.linalg.eigvalsh((M - M.conj().T) / 2j)) >= 0


def test_symmetric_and_real():
    prof = two_segment_profile()
    w = internal_weyl(prof, 0.37)
    assert w.is_symmetric
    assert np.max(np.abs(w.M.imag)) < 1e-9


def test_reflection_symmetry():
    prof = two_segment_profile()
    lam = 1.3 + 0.4j
    assert np.max(np.abs(internal_weyl(prof, lam.conjugate()).M - internal_weyl(prof, lam).M.conj())) < 1e-12


def test_difference_quotient_positive():
    prof = two_segment_profile()
    lams = [0.5 + 0.2j, 2.0 + 1.0j, -1.0 + 0.05j, 6.0 + 3.0j]
    for lam in lams:
        for mu in lams:
            q = (internal_weyl(prof, lam).M - internal_weyl(prof, mu).M.conj().T) / (lam - mu.conjugate())
            herm = (q + q.conj().T) / 2
            assert np.min(np.linalg.eigvalsh(herm)) >= -1e-8


@pytest.mark.parametrize("xi, expect", [((1, 0), (1, 0)), ((0, 1), (0, 1))])
def test_gamma_field_boundary_values(f0, xi, expect):
    f = gamma_field_apply(f0, 0.25, xi)
    assert np.max(np.abs(gamma0(f) - expect)) < 1e-12


def test_gamma_field_weyl_consistency():
    for prof, lam in ((CoefficientProfile.constant(0.0, PI, 0.5, 0.0), 0.25), (two_segment_profile(), 0.8)):
        M = internal_weyl(prof, lam).M
        for xi in ((1, 0), (0, 1), (0.3, -2.0)):
            f = gamma_field_apply(prof, lam, xi)
            assert np.max(np.abs(gamma1(f) - M @ np.array(xi))) < 1e-8


def test_constant_lead_values():
    left = LeadSpec("left", 0.5, 0.0)
    assert lead_weyl(left, 1.0) == 1j
    assert abs(lead_weyl(LeadSpec("left", 0.5, 1.0), 0.5) + math.sqrt(0.5)) < 1e-15
    with pytest.raises(ThresholdEnergy):
        lead_weyl(LeadSpec("left", 0.5, 1.0), 1.0 + 1e-11)


@pytest.mark.parametrize("eps", [1e-3, 1e-6])
@pytest.mark.parametrize("lam", [-2.0, 0.0, 0.3, 4.0])
def test_herglotz(eps, lam):
    assert constant_lead_m(0.5, 0.2, lam + 1j * eps).imag > 0


def test_boundary_value_is_limit():
    for lam in (-1.0, 0.7, 3.0):
        assert abs(constant_lead_m(0.7, 0.2, lam + 1e-12j) - constant_lead_m(0.7, 0.2, lam)) < 1e-6


@pytest.mark.parametrize("lam", [0.3, 0.7, 2.5])
@pytest.mark.parametrize("side", ["left", "right"])
def test_empty_transition(lam, side):
    x = 0.0 if side == "left" else PI
    lead = LeadSpec(side, 0.5, 0.4, CoefficientProfile.empty(x))
    assert abs(lead_weyl(lead, lam) - constant_lead_m(0.5, 0.4, lam)) < 1e-12


@pytest.mark.parametrize("lam", [0.1, 0.4, 0.9, 3.0, 1.0 + 0.5j])
def test_split_constant_lead(lam):
    left = LeadSpec("left", 0.6, 0.5, CoefficientProfile.constant(-1.3, 0.0, 0.6, 0.5))
    right = LeadSpec("right", 0.6, 0.5, CoefficientProfile.constant(PI, PI + 2.1, 0.6, 0.5))
    closed = constant_lead_m(0.6, 0.5, lam)
    assert abs(lead_weyl(left, lam) - closed) < 1e-10
    assert abs(lead_weyl(right, lam) - closed) < 1e-10


def test_transition_sign_conventions():
    # a sampled ramp between two values: both sides should still be Herglotz
    ramp_l = CoefficientProfile(-1.0, 0.0, (SampledSegment(1.0, [0.5, 0.4, 0.5], [0.0, 0.6, 0.3]),))
    ramp_r = CoefficientProfile(PI, PI + 1.0, (SampledSegment(1.0, [0.5, 0.4, 0.5], [0.3, 0.6, 0.0]),))
    for lam in (0.5 + 0.1j, 2.0 + 0.01j):
        assert lead_weyl(LeadSpec("left", 0.5, 0.0, ramp_l), lam).imag > 0
        assert lead_weyl(LeadSpec("right", 0.5, 0.0, ramp_r), lam).imag > 0


def test_tau_two_open():
    t = tau_sample(*leads(), 0.25)
    assert np.allclose(t.tau, 0.5j * np.eye(2))
    assert t.open_channels == ("left", "right")
    assert np.allclose(t.sqrt_im_tau, np.eye(2) / math.sqrt(2), atol=1e-15)


def test_tau_one_channel():
    t = tau_sample(*leads(1.0, 0.0), 0.5)
    assert abs(t.m_l + 0.70710678) < 1e-8 and abs(t.m_r - 0.70710678j) < 1e-8
    assert t.open_channels == ("right",)
    assert abs(t.sqrt_im_tau[0, 0]) == 0 and abs(t.sqrt_im_tau[1, 1] - 0.5**0.25) < 1e-12
    assert np.max(np.abs(t.sqrt_im_tau @ t.sqrt_im_tau - t.im_tau)) < 1e-12


def test_tau_closed():
    assert tau_sample(*leads(1.0, 0.5), 0.2).open_channels == ()
