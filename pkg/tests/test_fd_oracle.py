import math

import numpy as np
import pytest
from scipy.linalg import eigvalsh_tridiagonal

from weylscat.errors import DirichletPole
from weylscat.fd_oracle import (
    barrier_transmission,
    bisect_eigenvalues,
    fd_eigenpairs,
    fd_operator,
    fd_spectrum,
    krein_check,
    plane_wave_transmission,
    resolvent_a0_apply,
    series_oracle,
    sturm_count,
    theta_minus_m_inverse,
)
from weylscat.scattering import scatter_point
from weylscat.slp import CoefficientProfile, SampledSegment, fundamental_pair
from weylscat.spectra import DIRICHLET, NEUMANN, Robin, eigenvalues
from weylscat.weyl import internal_weyl

from conftest import PI, barrier_profile, free_profile, leads, two_segment_profile
from weylscat.scattering import ScatteringSystem


def test_free_dirichlet_fd(f0):
    assert np.max(np.abs(fd_spectrum(f0, DIRICHLET, DIRICHLET, 2000, 3) - [1, 4, 9])) < 5e-5


def test_free_neumann_fd(f0):
    assert np.max(np.abs(fd_spectrum(f0, NEUMANN, NEUMANN, 2000, 3) - [0, 1, 4])) < 5e-5


def test_richardson(f0):
    e1 = fd_spectrum(f0, DIRICHLET, DIRICHLET, 200, 4) - [1, 4, 9, 16]
    e2 = fd_spectrum(f0, DIRICHLET, DIRICHLET, 400, 4) - [1, 4, 9, 16]
    assert np.all(np.abs(e1 / e2 - 4) <= 0.4)


def test_minimum_size(f0):
    with pytest.raises(ValueError):
        fd_operator(f0, DIRICHLET, DIRICHLET, 8)


def test_operator_shape(f0):
    op = fd_operator(f0, DIRICHLET, NEUMANN, 100)
    assert op.diag.shape == (100,) and op.offdiag.shape == (99,)
    assert op.free[0] == 1 and op.free[-1] == 100


def test_bisection_matches_lapack():
    op = fd_operator(two_segment_profile(), Robin(0.4), Robin(1.5), 300)
    ours = bisect_eigenvalues(op.diag, op.offdiag, 8)
    ref = eigvalsh_tridiagonal(op.diag, op.offdiag, select="i", select_range=(0, 7))
    assert np.max(np.abs(ours - ref)) < 1e-9 * max(1.0, ref[-1])


def test_sturm_count_small():
    d = np.array([2.0, 2.0, 2.0])
    e = np.array([-1.0, -1.0])
    # eigenvalues 2 - sqrt2, 2, 2 + sqrt2
    assert list(sturm_count(d, e, [0.0, 1.0, 2.5, 4.0])) == [0, 1, 2, 3]


@pytest.mark.parametrize("bc", [(DIRICHLET, DIRICHLET), (NEUMANN, Robin(1.0)), (Robin(0.5), Robin(2.0))])
def test_fd_matches_shooting(bc):
    prof = two_segment_profile()
    n = 800
    ex = eigenvalues(prof, *bc, 6)
    fd = fd_spectrum(prof, *bc, n, 6)
    h = prof.length / n
    assert np.all(np.abs(fd - ex) <= 10 * h * h * np.maximum(np.abs(ex), 1.0))


def test_sampled_fd_matches_shooting():
    xs = np.linspace(0.0, PI, 33)
    prof = CoefficientProfile(0.0, PI, (SampledSegment(PI, 0.5 + 0.2 * np.sin(xs), 0.5 * np.cos(2 * xs)),))
    ex = eigenvalues(prof, DIRICHLET, DIRICHLET, 6)
    fd = fd_spectrum(prof, DIRICHLET, DIRICHLET, 512, 6)
    h = PI / 512
    assert np.all(np.abs(fd - ex) <= 10 * h * h * np.abs(ex))


def test_fd_eigenvectors_normalized(f0):
    vals, u = fd_eigenpairs(f0, NEUMANN, NEUMANN, 400, 3)
    assert np.allclose(vals, [0, 1, 4], atol=1e-4)
    # trapezoid weights are the lumped mass
    x = np.linspace(0, PI, 401)
    assert np.allclose(np.trapezoid(u**2, x, axis=0), 1.0, atol=1e-12)
    assert abs(u[0, 0] - 1 / math.sqrt(PI)) < 1e-10


def test_resolvent_residual():
    prof = two_segment_profile()
    x = None

    def f(x):
        return np.exp(-x) * (1 + x**2)

    g = resolvent_a0_apply(prof, -1.0, f, 2048)
    x = g.x
    fv = f(x)
    # apply -(p)' + (v - lam) u segment by segment so the flux derivative is taken on smooth pieces
    lhs = np.empty_like(x)
    bps = prof.breakpoints
    for j in range(len(prof.segments)):
        sel = (x >= bps[j]) & (x <= bps[j + 1])
        lhs[sel] = -np.gradient(g.p[sel], x[sel], edge_order=2)
    lhs += (prof.potential(x) + 1.0) * g.u
    inner = slice(1, -1)
    rel = np.sqrt(np.trapezoid((lhs - fv)[inner] ** 2, x[inner]) / np.trapezoid(fv[inner] ** 2, x[inner]))
    assert rel <= 1e-4
    assert abs(g.u[0]) < 1e-8 and abs(g.u[-1]) < 1e-8


def test_resolvent_zero(f0):
    g = resolvent_a0_apply(f0, -1.0, lambda x: 0 * x, 257)
    assert np.all(g.u == 0)


def test_resolvent_pole(f0):
    with pytest.raises(DirichletPole):
        resolvent_a0_apply(f0, 1.0, np.sin)


def test_theta_inverse_closed_form():
    prof = two_segment_profile()
    M = internal_weyl(prof, -0.7).M.real
    for kl, kr in ((0.0, 0.0), (0.5, 2.0), (-0.3, 1.0)):
        ours = theta_minus_m_inverse(prof, -0.7, kl, kr)
        assert np.allclose(ours, np.linalg.inv(np.diag([kl, kr]) - M), rtol=1e-10)


@pytest.mark.parametrize("theta", [(NEUMANN, NEUMANN), (Robin(0.5), Robin(0.5)), (Robin(2.0), Robin(2.0))])
def test_krein(f0, theta):
    r1 = krein_check(f0, -1.0, *theta, n=1000)
    r2 = krein_check(f0, -1.0, *theta, n=4000)
    assert r2 <= 5e-4
    assert 3.2 * 3.2 <= r1 / r2 <= 4.8 * 4.8


def test_krein_dirichlet(f0):
    assert krein_check(f0, -1.0, DIRICHLET, DIRICHLET, n=4000) <= 5e-6


def test_krein_mixed_two_segment():
    prof = two_segment_profile()
    assert krein_check(prof, -1.0, Robin(0.8), DIRICHLET, n=2000) <= 5e-4


def test_series_oracle(f0):
    s1, d = series_oracle(f0, -1.0, NEUMANN, NEUMANN, 100, n=2000)
    s2, _ = series_oracle(f0, -1.0, NEUMANN, NEUMANN, 200, n=2000)
    # with Theta = 0 the limit is -M(-1)^{-1}
    assert np.allclose(d, -np.linalg.inv(internal_weyl(f0, -1.0).M.real), rtol=1e-10)
    dev1, dev2 = np.max(np.abs(s1 - d)), np.max(np.abs(s2 - d))
    assert dev2 <= 1e-2
    assert 1.7 <= dev1 / dev2 <= 2.3


def test_series_oracle_monotone():
    prof = two_segment_profile()
    devs = []
    for n_terms in (20, 40, 80, 160):
        s, d = series_oracle(prof, -1.0, Robin(0.5), Robin(2.0), n_terms, n=2000)
        devs.append(np.max(np.abs(s - d)))
    assert all(a >= b for a, b in zip(devs, devs[1:]))


def test_series_oracle_rejects_dirichlet(f0):
    with pytest.raises(ValueError):
        series_oracle(f0, -1.0, DIRICHLET, NEUMANN, 10)
    with pytest.raises(ValueError):
        series_oracle(f0, -1.0, Robin(-0.5), NEUMANN, 10)


def test_plane_wave_barrier():
    for e in (0.3, 1.0, 1.7):
        assert abs(plane_wave_transmission(barrier_profile(), 0.5, 0.0, 0.5, 0.0, e) - barrier_transmission(2.0, PI, e)) < 1e-12


def test_plane_wave_vs_weyl_asymmetric():
    prof = CoefficientProfile.piecewise(0.0, [1.0, 1.5], [0.5, 0.15], [0.8, -0.3])
    sys_ = ScatteringSystem(prof, *leads(0.4, 0.0, m=0.5))
    for e in (0.5, 1.1, 2.7):
        pt = scatter_point(sys_, e)
        assert abs(pt.transmission - plane_wave_transmission(prof, 0.5, 0.4, 0.5, 0.0, e)) < 1e-10
