"""Brute-force cross-checks that share no code path with the shooting solver.

* a second-order finite-difference (lumped finite-volume) discretization of
  the internal operator, reduced to a symmetric tridiagonal matrix and
  diagonalized by Sturm-sequence bisection;
* the explicit Green's function of the Dirichlet operator;
* the Krein resolvent identity and the eigenfunction series of
  (Theta - M(lambda))^{-1};
* a plane-wave amplitude-matching transmission coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.linalg import eigh_tridiagonal, solve_banded

from .slp import CoefficientProfile, ConstantSegment, Trajectory, fundamental_pair, mesh
from .spectra import Dirichlet, EndpointCondition, Robin
from .weyl import POLE_EPS, internal_weyl
from .errors import DirichletPole


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Symmetric tridiagonal W^{-1/2} K W^{-1/2} on the free (non-Dirichlet) nodes."""

    x: np.ndarray          # all n+1 nodes
    h: float               # largest cell width
    diag: np.ndarray
    offdiag: np.ndarray
    weights: np.ndarray    # lumped mass of the free nodes
    free: np.ndarray       # indices of the free nodes into x
    bc_left: EndpointCondition
    bc_right: EndpointCondition

    @property
    def n(self) -> int:
        return len(self.x) - 1


def _stiffness(profile: CoefficientProfile, n: int):
    # cells are uniform inside each segment with nodes on the breakpoints
    x = mesh(profile, n + 1)
    h = np.diff(x)
    mid = 0.5 * (x[:-1] + x[1:])
    a = 1.0 / (2.0 * profile.mass(mid) * h)
    main = np.zeros(n + 1)
    main[:-1] += a
    main[1:] += a
    off = -a
    w = np.zeros(n + 1)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    # dual-cell potential average from the two half cells
    vw = np.zeros(n + 1)
    vw[:-1] += 0.5 * h * profile.potential(x[:-1] + 0.25 * h)
    vw[1:] += 0.5 * h * profile.potential(x[1:] - 0.25 * h)
    return x, float(h.max()), main + vw, off, w


def fd_operator(profile: CoefficientProfile, bc_left: EndpointCondition, bc_right: EndpointCondition, n: int) -> TridiagonalOperator:
    """Discretize -(1/2)(1/m u')' + v u with ``n`` cells (n >= 16)."""
    if n < 16:
        raise ValueError("n must be >= 16")
    x, h, main, off, w = _stiffness(profile, n)
    if isinstance(bc_left, Robin):
        main[0] += bc_left.kappa
    if isinstance(bc_right, Robin):
        main[-1] += bc_right.kappa
    lo = 1 if isinstance(bc_left, Dirichlet) else 0
    hi = n if isinstance(bc_right, Dirichlet) else n + 1
    free = np.arange(lo, hi)
    main, w_f = main[lo:hi], w[lo:hi]
    off = off[lo:hi - 1]
    sw = np.sqrt(w_f)
    return TridiagonalOperator(x, h, main / w_f, off / (sw[:-1] * sw[1:]), w_f, free, bc_left, bc_right)


def sturm_count(diag: np.ndarray, offdiag: np.ndarray, shifts) -> np.ndarray:
    """Number of eigenvalues strictly below each shift (LDL^T pivot signs)."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    tiny = np.finfo(float).tiny ** 0.5
    e2 = np.concatenate([[0.0], offdiag**2])
    q = np.ones_like(shifts)
    count = np.zeros(shifts.shape, dtype=int)
    for d_i, e2_i in zip(diag, e2):
        q = d_i - shifts - e2_i / q
        q = np.where(q == 0.0, -tiny, q)
        count += q < 0
    return count


def bisect_eigenvalues(diag: np.ndarray, offdiag: np.ndarray, k_max: int, rtol: float = 1e-14) -> np.ndarray:
    """Lowest ``k_max`` eigenvalues of a symmetric tridiagonal matrix by simultaneous bisection."""
    r = np.zeros_like(diag)
    r[:-1] += np.abs(offdiag)
    r[1:] += np.abs(offdiag)
    lo0, hi0 = float(np.min(diag - r)), float(np.max(diag + r))
    k = np.arange(1, k_max + 1)
    lo = np.full(k_max, lo0)
    hi = np.full(k_max, hi0)
    scale = max(abs(lo0), abs(hi0), 1.0)
    for _ in range(200):
        if np.all(hi - lo <= rtol * scale):
            break
        mid = 0.5 * (lo + hi)
        below = sturm_count(diag, offdiag, mid) >= k
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    return 0.5 * (lo + hi)


def fd_spectrum(profile: CoefficientProfile, bc_left: EndpointCondition, bc_right: EndpointCondition, n: int, k_max: int) -> np.ndarray:
    op = fd_operator(profile, bc_left, bc_right, n)
    return bisect_eigenvalues(op.diag, op.offdiag, k_max)


def fd_eigenpairs(profile: CoefficientProfile, bc_left: EndpointCondition, bc_right: EndpointCondition, n: int, k_max: int):
    """Eigenvalues and W-normalized nodal eigenvectors (full node set, Dirichlet nodes zero)."""
    op = fd_operator(profile, bc_left, bc_right, n)
    vals, vecs = eigh_tridiagonal(op.diag, op.offdiag, select="i", select_range=(0, k_max - 1))
    u = np.zeros((n + 1, k_max))
    u[op.free] = vecs / np.sqrt(op.weights)[:, None]
    u *= np.where(u[0] != 0, np.sign(u[0]), np.sign(u[1]))
    return vals, u


def fd_resolvent(profile: CoefficientProfile, bc_left: EndpointCondition, bc_right: EndpointCondition, lam: float, f: np.ndarray) -> np.ndarray:
    """Nodal solution of (A_Theta - lam) u = f with the same discretization."""
    n = len(f) - 1
    op = fd_operator(profile, bc_left, bc_right, n)
    w = op.weights
    sw = np.sqrt(w)
    # back from the symmetric form: K = W^{1/2} B W^{1/2}
    main = op.diag * w - lam * w
    off = op.offdiag * sw[:-1] * sw[1:]
    ab = np.zeros((3, len(main)))
    ab[0, 1:] = off
    ab[1] = main
    ab[2, :-1] = off
    u = np.zeros(n + 1)
    u[op.free] = solve_banded((1, 1), ab, w * f[op.free])
    return u


def _as_nodal(f, x):
    return np.asarray(f(x) if callable(f) else f, dtype=float)


def resolvent_a0_apply(profile: CoefficientProfile, lam: float, f, nodes: int = 2049, pole_eps: float = POLE_EPS) -> Trajectory:
    """(A_0 - lam)^{-1} f from the Green's function built on phi and psi.

    g = phi int_{x_l}^x psi f + psi int_x^{x_r} phi f - (phi(x_r)/psi(x_r)) psi int psi f
    """
    fp = fundamental_pair(profile, lam, nodes)
    if abs(fp.psi_r) <= pole_eps * max(1.0, abs(fp.phi_r)):
        raise DirichletPole(lam, fp.psi_r)
    x = fp.phi.x
    fv = _as_nodal(f, x)
    phi, psi = fp.phi.u.real, fp.psi.u.real
    i_psi = cumulative_simpson(psi * fv, x=x, initial=0.0)
    i_phi = cumulative_simpson(phi * fv, x=x, initial=0.0)
    upper_phi = i_phi[-1] - i_phi
    c = -(fp.phi_r.real / fp.psi_r.real) * i_psi[-1]
    g = phi * i_psi + psi * upper_phi + c * psi
    pg = fp.phi.p.real * i_psi + fp.psi.p.real * upper_phi + c * fp.psi.p.real
    g[0] = g[-1] = 0.0
    return Trajectory(x, g, pg)


def theta_minus_m_inverse(profile: CoefficientProfile, lam: float, kappa_l: float, kappa_r: float) -> np.ndarray:
    """Closed-form (Theta - M(lam))^{-1} for Theta = diag(kappa_l, kappa_r)."""
    fp = fundamental_pair(profile, lam, 3)
    phi_r, psi_r, p_psi_r = fp.phi_r.real, fp.psi_r.real, fp.p_psi_r.real
    M = internal_weyl(profile, lam).M.real
    det = (kappa_l - M[0, 0]) * (kappa_r - M[1, 1]) - M[0, 1] * M[1, 0]
    adj = np.array([[kappa_r * psi_r + p_psi_r, 1.0], [1.0, kappa_l * psi_r + phi_r]])
    return adj / (psi_r * det)


def krein_check(
    profile: CoefficientProfile,
    lam: float,
    bc_left: EndpointCondition,
    bc_right: EndpointCondition,
    n: int = 4000,
    f: Callable | None = None,
) -> float:
    """Relative L2 gap between the FD resolvent of A_Theta and the Krein formula.

    Dirichlet ends drop out of the boundary space; with both ends Dirichlet
    the correction vanishes and the check compares two Dirichlet resolvents.
    """
    if f is None:
        a, b = profile.x_a, profile.x_b
        def f(x):
            return (x - a) * (b - x)
    x = mesh(profile, n + 1)
    fv = _as_nodal(f, x)
    lhs = fd_resolvent(profile, bc_left, bc_right, lam, fv)
    base = resolvent_a0_apply(profile, lam, fv, n + 1)
    rhs = base.u.copy()
    robin = [j for j, bc in enumerate((bc_left, bc_right)) if isinstance(bc, Robin)]
    if robin:
        fp = fundamental_pair(profile, lam, n + 1)
        phi, psi = fp.phi.u.real, fp.psi.u.real
        gam = np.array([(phi * fp.psi_r.real - psi * fp.phi_r.real) / fp.psi_r.real, psi / fp.psi_r.real])
        gstar_f = np.array([simpson(g * fv, x=x) for g in gam])
        if len(robin) == 2:
            inv = theta_minus_m_inverse(profile, lam, bc_left.kappa, bc_right.kappa)
        else:
            j = robin[0]
            M = internal_weyl(profile, lam).M.real
            kappa = (bc_left, bc_right)[j].kappa
            inv = np.zeros((2, 2))
            inv[j, j] = 1.0 / (kappa - M[j, j])
        rhs = rhs + (inv @ gstar_f) @ gam
    return float(math.sqrt(simpson((lhs - rhs) ** 2, x=x) / simpson(rhs**2, x=x)))


def series_oracle(
    profile: CoefficientProfile,
    lam: float,
    bc_left: Robin,
    bc_right: Robin,
    n_terms: int,
    n: int = 4000,
) -> tuple[np.ndarray, np.ndarray]:
    """FD eigenfunction series of (Theta - M(lam))^{-1} next to the ODE value.

    Requires Robin conditions with kappa >= 0 at both ends; a Dirichlet end
    has no such series (the Gamma_1-trace sum over Dirichlet modes diverges).
    """
    for bc in (bc_left, bc_right):
        if not isinstance(bc, Robin):
            raise ValueError("series_oracle needs Robin/Neumann conditions; the Dirichlet trace series diverges")
        if bc.kappa < 0:
            raise ValueError("series_oracle needs kappa >= 0 at both ends")
    vals, u = fd_eigenpairs(profile, bc_left, bc_right, n, n_terms)
    traces = np.stack([u[0], u[-1]], axis=1)
    series = np.einsum("k,ki,kj->ij", 1.0 / (vals - lam), traces, traces)
    direct = theta_minus_m_inverse(profile, lam, bc_left.kappa, bc_right.kappa)
    return series, direct


def plane_wave_transmission(profile: CoefficientProfile, m_l: float, v_l: float, m_r: float, v_r: float, energy: float) -> float:
    """Transmission probability by matching plane-wave amplitudes at every interface.

    Each region carries A e^{ikx} + B e^{-ikx} with k = sqrt(2m(E - v)); u and
    u'/m are continuous.  Needs a piecewise-constant profile and both leads open.
    """
    if not profile.is_piecewise_constant:
        raise ValueError("plane-wave oracle needs a piecewise-constant profile")
    if energy <= max(v_l, v_r):
        raise ValueError("both channels must be open")
    regions = [(m_l, v_l)] + [(s.m, s.v) for s in profile.segments] + [(m_r, v_r)]
    interfaces = profile.breakpoints

    def basis(m, v, x0):
        k = np.sqrt(complex(2.0 * m * (energy - v)))
        e_p, e_m = np.exp(1j * k * x0), np.exp(-1j * k * x0)
        return np.array([[e_p, e_m], [1j * k / m * e_p, -1j * k / m * e_m]])

    # amplitudes of the last region in terms of the first
    t = np.eye(2, dtype=complex)
    for j, x0 in enumerate(interfaces):
        t = np.linalg.solve(basis(*regions[j + 1], x0), basis(*regions[j], x0)) @ t
    # incoming from the left with unit amplitude, nothing incoming from the right
    b_l = -t[1, 0] / t[1, 1]
    a_r = t[0, 0] + t[0, 1] * b_l
    k_l = math.sqrt(2.0 * m_l * (energy - v_l))
    k_r = math.sqrt(2.0 * m_r * (energy - v_r))
    return float((k_r / m_r) / (k_l / m_l) * abs(a_r) ** 2)


def barrier_transmission(height: float, width: float, energy: float, mass: float = 0.5) -> float:
    """Textbook rectangular-barrier transmission for E < V0 (same mass everywhere)."""
    # units where the kinetic term is -(1/2m) d^2/dx^2; for m = 1/2 this is E = k^2
    kappa = math.sqrt(2.0 * mass * (height - energy))
    ke = 2.0 * mass * energy
    kv = 2.0 * mass * height
    return 1.0 / (1.0 + kv**2 * math.sinh(kappa * width) ** 2 / (4.0 * ke * (kv - ke)))
