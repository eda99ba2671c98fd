"""Weyl functions of the internal interval and of the two leads.

Boundary maps on the interval (x_l, x_r):

    Gamma_0 f = (f(x_l), f(x_r)),     Gamma_1 f = (p(x_l), -p(x_r)),   p = f'/(2m).

Lead maps: left  Upsilon_0 g = g(x_l), Upsilon_1 g = -p(x_l);
           right Upsilon_0 g = g(x_r), Upsilon_1 g = +p(x_r).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegenerateInterface, DirichletPole, ThresholdEnergy
from .slp import (
    DEFAULT_MESH_NODES,
    CoefficientProfile,
    QuasiState,
    Trajectory,
    fundamental_pair,
    propagate,
    transfer,
)

POLE_EPS = 1e-9
THRESHOLD_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class WeylSample:
    lam: complex
    M: np.ndarray

    @property
    def is_symmetric(self) -> bool:
        return bool(np.max(np.abs(self.M - self.M.T)) <= 1e-9 * max(1.0, np.max(np.abs(self.M))))


def _dirichlet_guard(lam, phi_r, psi_r, pole_eps):
    scale = max(1.0, abs(phi_r))
    if abs(psi_r) <= pole_eps * scale:
        raise DirichletPole(lam, psi_r)


def internal_weyl(profile: CoefficientProfile, lam: complex, pole_eps: float = POLE_EPS) -> WeylSample:
    """M(lam) = (1/psi(x_r)) [[-phi(x_r), 1], [1, -p_psi(x_r)]]."""
    t = transfer(profile, lam)
    phi_r, psi_r, p_psi_r = t[0, 0], t[0, 1], t[1, 1]
    _dirichlet_guard(lam, phi_r, psi_r, pole_eps)
    M = np.array([[-phi_r, 1.0], [1.0, -p_psi_r]], dtype=complex) / psi_r
    return WeylSample(complex(lam), M)


def gamma_field_apply(
    profile: CoefficientProfile,
    lam: complex,
    xi,
    nodes: int = DEFAULT_MESH_NODES,
    pole_eps: float = POLE_EPS,
) -> Trajectory:
    """Solution of the homogeneous equation with boundary values ``xi``.

    f = ((phi * psi(x_r) - psi * phi(x_r)) xi_0 + psi xi_1) / psi(x_r)
    """
    fp = fundamental_pair(profile, lam, nodes)
    _dirichlet_guard(lam, fp.phi_r, fp.psi_r, pole_eps)
    xi0, xi1 = complex(xi[0]), complex(xi[1])
    a = xi0
    b = (xi1 - fp.phi_r * xi0) / fp.psi_r
    return Trajectory(fp.phi.x, a * fp.phi.u + b * fp.psi.u, a * fp.phi.p + b * fp.psi.p)


def gamma0(f: Trajectory) -> np.ndarray:
    return np.array([f.u[0], f.u[-1]])


def gamma1(f: Trajectory) -> np.ndarray:
    return np.array([f.p[0], -f.p[-1]])


def sqrt_upper(z: complex) -> complex:
    """Square root with the cut on [0, inf): Im > 0 off the cut, >= 0 on it."""
    z = complex(z)
    if z.imag == 0.0 and z.real >= 0.0:
        return complex(math.sqrt(z.real), 0.0)
    w = cmath.sqrt(z)
    return w if w.imag > 0 else -w


def constant_lead_m(m: float, v: float, lam: complex) -> complex:
    """Titchmarsh-Weyl coefficient of a constant half-line, i*sqrt((lam - v)/(2m)).

    For real energies the two regimes are returned in split form so that the
    real part is exactly zero above threshold and the imaginary part exactly
    zero below it.
    """
    if isinstance(lam, (int, float)) or complex(lam).imag == 0.0:
        e = float(complex(lam).real) - v
        if e > 0:
            return complex(0.0, math.sqrt(e / (2.0 * m)))
        return complex(-math.sqrt(-e / (2.0 * m)), 0.0)
    return 1j * sqrt_upper((complex(lam) - v) / (2.0 * m))


@dataclass(frozen=True, eq=False)
class LeadSpec:
    """Semi-infinite lead with a constant tail (tail_m, tail_v).

    ``transition`` optionally describes the region between the interface
    point and the start of the constant tail: for the left lead it must end
    at x_l, for the right lead it must start at x_r.
    """

    side: Literal["left", "right"]
    tail_m: float
    tail_v: float
    transition: CoefficientProfile | None = None

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")
        if not self.tail_m > 0:
            raise ValueError(f"tail mass must be > 0, got {self.tail_m!r}")

    @property
    def threshold(self) -> float:
        return self.tail_v


def lead_weyl(lead: LeadSpec, lam, threshold_eps: float = THRESHOLD_EPS) -> complex:
    """Boundary value m(lam + i0) of the lead coefficient at the interface.

    Complex ``lam`` is accepted as well (no threshold check then).
    """
    lam_c = complex(lam)
    if lam_c.imag == 0.0 and abs(lam_c.real - lead.tail_v) < threshold_eps:
        raise ThresholdEnergy(lam_c.real, lead.tail_v)
    m_tail = constant_lead_m(lead.tail_m, lead.tail_v, lam)
    tr = lead.transition
    if tr is None or not tr.segments:
        return m_tail
    if lead.side == "left":
        # decaying/outgoing toward -inf: p = -m_tail u at the tail end
        state, _ = propagate(tr, lam_c, QuasiState(1.0, -m_tail))
        if abs(state.u) < 1e-12 * max(1.0, abs(state.p)):
            raise DegenerateInterface(f"left lead solution vanishes at the interface (lambda={lam!r})")
        return -state.p / state.u
    _, tm = propagate(tr, lam_c, QuasiState(1.0, m_tail))
    state = tm.inverse().apply(QuasiState(1.0, m_tail))
    if abs(state.u) < 1e-12 * max(1.0, abs(state.p)):
        raise DegenerateInterface(f"right lead solution vanishes at the interface (lambda={lam!r})")
    return state.p / state.u


@dataclass(frozen=True, eq=False)
class TauSample:
    lam: float
    m_l: complex
    m_r: complex
    open_eps: float = THRESHOLD_EPS

    @property
    def tau(self) -> np.ndarray:
        return np.diag([self.m_l, self.m_r]).astype(complex)

    @property
    def re_tau(self) -> np.ndarray:
        return np.diag([self.m_l.real, self.m_r.real])

    @property
    def im_tau(self) -> np.ndarray:
        return np.diag([self.m_l.imag, self.m_r.imag])

    @property
    def open_mask(self) -> np.ndarray:
        return np.array([self.m_l.imag > self.open_eps, self.m_r.imag > self.open_eps])

    @property
    def open_channels(self) -> tuple[str, ...]:
        return tuple(name for name, ok in zip(("left", "right"), self.open_mask) if ok)

    @property
    def open_indices(self) -> np.ndarray:
        return np.flatnonzero(self.open_mask)

    @property
    def sqrt_im_tau(self) -> np.ndarray:
        return np.diag(np.sqrt(np.clip([self.m_l.imag, self.m_r.imag], 0.0, None)))


def tau_sample(left: LeadSpec, right: LeadSpec, lam: float, threshold_eps: float = THRESHOLD_EPS) -> TauSample:
    return TauSample(
        float(lam),
        lead_weyl(left, lam, threshold_eps),
        lead_weyl(right, lam, threshold_eps),
        threshold_eps,
    )
