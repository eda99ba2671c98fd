import math

import numpy as np
import pytest

from weylscat.slp import CoefficientProfile, SampledSegment, l2_inner
from weylscat.spectra import (
    DIRICHLET,
    NEUMANN,
    Robin,
    count_below,
    eigen_scan,
    eigencondition,
    eigenvalues,
    frozen_family,
)

from conftest import PI, leads, two_segment_profile


def test_eigencondition_values(f0):
    assert abs(eigencondition(f0, NEUMANN, NEUMANN, 1.0)) < 1e-14
    assert abs(eigencondition(f0, DIRICHLET, DIRICHLET, 1.0)) < 1e-14
    assert abs(eigencondition(f0, DIRICHLET, DIRICHLET, 0.25) - 2.0) < 1e-13


def test_free_neumann(f0):
    assert np.max(np.abs(eigenvalues(f0, NEUMANN, NEUMANN, 4) - [0, 1, 4, 9])) < 1e-8


def test_free_dirichlet(f0):
    assert np.max(np.abs(eigenvalues(f0, DIRICHLET, DIRICHLET, 3) - [1, 4, 9])) < 1e-8


def test_free_neumann_traces(f0):
    pairs = eigen_scan(f0, NEUMANN, NEUMANN, 5)
    assert np.allclose(pairs[0].trace0, [1 / math.sqrt(PI)] * 2, atol=1e-7)
    for k in range(2, 6):
        expect = math.sqrt(2 / PI) * np.array([1.0, (-1.0) ** (k - 1)])
        assert np.max(np.abs(pairs[k - 1].trace0 - expect)) < 1e-7


def test_robin_closed_form():
    # 2m = 1 so p = u'; u'(0) = kappa u(0), u'(pi) = -kappa u(pi)
    # u = k cos(kx) + kappa sin(kx)  =>  sin(k pi)(k^2 - kappa^2) = 2 kappa k cos(k pi)
    kappa = 0.5
    lams = eigenvalues(CoefficientProfile.constant(0.0, PI, 0.5, 0.0), Robin(kappa), Robin(kappa), 4)
    k = np.sqrt(lams)
    resid = np.sin(k * PI) * (k**2 - kappa**2) - 2 * kappa * k * np.cos(k * PI)
    assert np.max(np.abs(resid)) < 1e-8


def test_negative_robin_bound_state():
    lams = eigenvalues(CoefficientProfile.constant(0.0, PI, 0.5, 0.0), Robin(-1.0), Robin(-1.0), 3)
    assert lams[1] < 0 and lams[2] > 0
    # even bound state u = cosh(q (x - pi/2)) with q tanh(q pi/2) = 1, lam = -q^2
    q = math.sqrt(-lams[0])
    assert abs(q * math.tanh(q * PI / 2) - 1) < 1e-8


def test_orthonormal_and_zero_counts():
    prof = two_segment_profile()
    pairs = eigen_scan(prof, Robin(0.3), DIRICHLET, 6)
    gram = np.array([[l2_inner(a.psi, b.psi).real for b in pairs] for a in pairs])
    assert np.max(np.abs(gram - np.eye(6))) < 1e-7
    for p in pairs:
        inner = p.psi.u[1:-1]
        assert np.count_nonzero(np.diff(np.sign(inner[np.abs(inner) > 1e-10]))) == p.index - 1


def test_sign_convention():
    prof = two_segment_profile()
    for p in eigen_scan(prof, NEUMANN, NEUMANN, 4):
        assert p.psi.u[0] > 0
    for p in eigen_scan(prof, DIRICHLET, NEUMANN, 4):
        assert p.psi.u[0] == 0 and p.psi.p[0] > 0


def test_robin_trace_relation():
    prof = two_segment_profile()
    kl, kr = 0.4, 1.7
    for p in eigen_scan(prof, Robin(kl), Robin(kr), 5):
        # Gamma_1 psi = Theta Gamma_0 psi for Theta = diag(kappa)
        assert np.max(np.abs(p.trace1 - np.array([kl, kr]) * p.trace0)) < 1e-8


def test_neumann_below_dirichlet():
    for prof in (CoefficientProfile.constant(0.0, PI, 0.5, 0.0), two_segment_profile()):
        n = eigenvalues(prof, NEUMANN, NEUMANN, 6)
        d = eigenvalues(prof, DIRICHLET, DIRICHLET, 6)
        assert np.all(n <= d)


def test_robin_monotone():
    prof = two_segment_profile()
    vals = [eigenvalues(prof, Robin(k), NEUMANN, 5) for k in (0.0, 0.7, 3.0)]
    assert np.all(vals[0] <= vals[1]) and np.all(vals[1] <= vals[2])


def test_count_below(f0):
    assert count_below(f0, DIRICHLET, DIRICHLET, 4.5) == 2
    assert count_below(f0, NEUMANN, NEUMANN, 0.5) == 1
    assert count_below(f0, DIRICHLET, DIRICHLET, 0.5) == 0


def test_sampled_profile_eigenvalues():
    seg = SampledSegment(PI, [0.5, 0.5], [0.0, 0.0])
    prof = CoefficientProfile(0.0, PI, (seg,))
    assert np.max(np.abs(eigenvalues(prof, DIRICHLET, DIRICHLET, 4) - [1, 4, 9, 16])) < 1e-8


def test_frozen_free_is_neumann(f0):
    fam, pairs = frozen_family(f0, *leads(), 0.7, 4)
    assert fam.is_neumann
    assert np.max(np.abs([p.lam for p in pairs] - np.array([0, 1, 4, 9]))) < 1e-8


def test_frozen_one_channel(f0):
    fam, pairs = frozen_family(f0, *leads(1.0, 0.0), 0.5, 6)
    assert abs(fam.left.kappa - 0.70710678) < 1e-8 and fam.right.kappa == 0
    n = eigenvalues(f0, NEUMANN, NEUMANN, 6)
    d = eigenvalues(f0, DIRICHLET, DIRICHLET, 6)
    lam = np.array([p.lam for p in pairs])
    assert np.all(n <= lam) and np.all(lam <= d)


def test_invalid_kappa():
    with pytest.raises(ValueError):
        Robin(float("inf"))
    with pytest.raises(ValueError):
        eigenvalues(CoefficientProfile.constant(0.0, 1.0, 0.5, 0.0), NEUMANN, NEUMANN, 0)
