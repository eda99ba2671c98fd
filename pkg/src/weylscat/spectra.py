"""Eigenpairs of the internal operator under Dirichlet or Robin end conditions.

Robin at x_l means p(x_l) = kappa_l u(x_l); Robin at x_r means
p(x_r) = -kappa_r u(x_r).  Neumann is Robin with kappa = 0.  In boundary
map language A_Theta = A* restricted to ker(Gamma_1 - Theta Gamma_0) with
Theta = diag(kappa_l, kappa_r).

Eigenvalues are located with the Pruefer angle Theta(x_r; E) of the
solution satisfying the left condition.  Theta(x_r; E) is continuous and
strictly increasing in E and hits  beta + (k-1) pi  exactly at the k-th
eigenvalue, where beta in (0, pi] is the angle of the right condition.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np
from scipy.optimize import brentq

from .errors import BracketFailure
from .slp import (
    DEFAULT_MESH_NODES,
    CoefficientProfile,
    QuasiState,
    Trajectory,
    l2_norm,
    oscillation_count,
    propagate,
    trajectory,
)
from .weyl import LeadSpec, TauSample, tau_sample


@dataclass(frozen=True)
class Dirichlet:
    pass


@dataclass(frozen=True)
class Robin:
    kappa: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.kappa):
            raise ValueError(f"Robin parameter must be finite, got {self.kappa!r}")


EndpointCondition = Union[Dirichlet, Robin]
DIRICHLET = Dirichlet()
NEUMANN = Robin(0.0)


@dataclass(frozen=True, eq=False)
class EigenPair:
    index: int
    lam: float
    psi: Trajectory
    trace0: np.ndarray
    trace1: np.ndarray


@dataclass(frozen=True)
class FrozenRobinFamily:
    """Robin conditions kappa = -Re m(lam) frozen at the sweep energy ``lam``."""

    lam: float
    left: Robin
    right: Robin

    @property
    def theta(self) -> np.ndarray:
        return np.diag([self.left.kappa, self.right.kappa])

    @property
    def is_neumann(self) -> bool:
        return self.left.kappa == 0.0 and self.right.kappa == 0.0


def left_state(bc: EndpointCondition) -> QuasiState:
    if isinstance(bc, Dirichlet):
        return QuasiState(0.0, 1.0)
    return QuasiState(1.0, bc.kappa)


def right_angle(bc: EndpointCondition) -> float:
    if isinstance(bc, Dirichlet):
        return math.pi
    return math.atan2(1.0, -bc.kappa)


def eigencondition(profile: CoefficientProfile, bc_left: EndpointCondition, bc_right: EndpointCondition, lam: float) -> float:
    """Right-end residual of the solution satisfying the left condition.

    Dirichlet: u(x_r);  Robin: p(x_r) + kappa_r u(x_r).
    """
    state, _ = propagate(profile, float(lam), left_state(bc_left))
    if isinstance(bc_right, Dirichlet):
        return state.u.real
    return (state.p + bc_right.kappa * state.u).real


def prufer_angle(profile: CoefficientProfile, bc_left: EndpointCondition, lam: float) -> float:
    zeros, y = oscillation_count(profile, lam, left_state(bc_left))
    return zeros * math.pi + math.atan2(y[0], y[1]) % math.pi


def count_below(profile: CoefficientProfile, bc_left, bc_right, lam: float) -> int:
    """Number of eigenvalues strictly below ``lam``."""
    excess = prufer_angle(profile, bc_left, lam) - right_angle(bc_right)
    return max(0, math.ceil(excess / math.pi)) if excess > 0 else 0


def _lower_bound(profile, bc_left, bc_right) -> float:
    vmin, _ = profile.potential_range()
    _, mmax = profile.mass_range()
    kneg = [-bc.kappa for bc in (bc_left, bc_right) if isinstance(bc, Robin) and bc.kappa < 0]
    depth = 2.0 * mmax * max(kneg, default=0.0) ** 2
    return vmin - 2.0 * depth - 1.0


def iter_eigenvalues(profile: CoefficientProfile, bc_left: EndpointCondition, bc_right: EndpointCondition) -> Iterator[float]:
    """Eigenvalues in increasing order, indefinitely."""
    beta = right_angle(bc_right)

    def theta(e):
        return prufer_angle(profile, bc_left, e)

    lo = _lower_bound(profile, bc_left, bc_right)
    while theta(lo) >= beta:
        lo -= 2.0 * (abs(lo) + 1.0)
    # Weyl asymptotics: lambda_k ~ (k pi / W)^2 with W = int sqrt(2m) dx
    xs = np.linspace(profile.x_a, profile.x_b, 257)
    width = float(np.trapezoid(np.sqrt(2.0 * profile.mass(xs)), xs))
    for k in itertools.count(1):
        target = beta + (k - 1) * math.pi

        def g(e, target=target):
            return theta(e) - target

        g_lo = g(lo)
        if g_lo >= 0:
            raise BracketFailure(f"eigenvalue {k} lies below the previous one", (lo, lo))
        step = 2.0 * math.pi**2 * k / width**2 + 1.0
        hi = lo + step
        g_hi = g(hi)
        while g_hi <= 0:
            if g_hi < 0:
                lo, g_lo = hi, g_hi
            step *= 2.0
            hi = lo + step
            g_hi = g(hi)
            if step > 1e12:
                raise BracketFailure(f"no upper bracket for eigenvalue {k}", (lo, hi))
        root = brentq(g, lo, hi, xtol=1e-13, rtol=1e-15, maxiter=200)
        yield root
        lo = root


def eigenvalues(profile: CoefficientProfile, bc_left: EndpointCondition, bc_right: EndpointCondition, k_max: int) -> np.ndarray:
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    return np.fromiter(itertools.islice(iter_eigenvalues(profile, bc_left, bc_right), k_max), float, k_max)


def eigenpair(profile: CoefficientProfile, bc_left: EndpointCondition, lam: float, index: int, nodes: int = DEFAULT_MESH_NODES) -> EigenPair:
    """Normalized eigenfunction for an eigenvalue already located.

    Sign convention: psi(x_l) > 0, or p(x_l) > 0 under a left Dirichlet condition.
    """
    traj = trajectory(profile, lam, left_state(bc_left), nodes)
    traj = Trajectory(traj.x, traj.u.real, traj.p.real)
    psi = traj.scaled(1.0 / l2_norm(traj))
    if index <= nodes // 8:
        interior = psi.u[1:-1]
        nz = interior[np.abs(interior) > 1e-12 * np.max(np.abs(interior))]
        changes = int(np.count_nonzero(np.diff(np.sign(nz))))
        if changes != index - 1:
            raise BracketFailure(f"eigenfunction {index} has {changes} interior zeros, expected {index - 1}", (lam, lam))
    return EigenPair(
        index,
        float(lam),
        psi,
        np.array([psi.u[0], psi.u[-1]]),
        np.array([psi.p[0], -psi.p[-1]]),
    )


def eigen_scan(
    profile: CoefficientProfile,
    bc_left: EndpointCondition,
    bc_right: EndpointCondition,
    k_max: int,
    nodes: int = DEFAULT_MESH_NODES,
) -> list[EigenPair]:
    """First ``k_max`` eigenpairs with L2-normalized eigenfunctions and boundary traces."""
    lams = eigenvalues(profile, bc_left, bc_right, k_max)
    return [eigenpair(profile, bc_left, lam, k, nodes) for k, lam in enumerate(lams, start=1)]


def frozen_conditions(tau: TauSample) -> FrozenRobinFamily:
    # +0.0 avoids a signed zero leaking into cache keys
    return FrozenRobinFamily(tau.lam, Robin(-tau.m_l.real + 0.0), Robin(-tau.m_r.real + 0.0))


def frozen_family(
    profile: CoefficientProfile,
    left: LeadSpec,
    right: LeadSpec,
    lam: float,
    k_max: int,
    nodes: int = DEFAULT_MESH_NODES,
) -> tuple[FrozenRobinFamily, list[EigenPair]]:
    """Eigenpairs of the internal operator with kappa = -Re m_l(lam), -Re m_r(lam)."""
    family = frozen_conditions(tau_sample(left, right, lam))
    return family, eigen_scan(profile, family.left, family.right, k_max, nodes)
