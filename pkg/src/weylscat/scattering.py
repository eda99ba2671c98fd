"""Scattering and R-matrices of the interval coupled to two leads.

Direct route (D = sqrt(Im tau), restricted to the open channels):

    S = I - 2i D (M + tau)^{-1} D,        R = -D (M + Re tau)^{-1} D.

Series route: with (lambda_k, psi_k) the eigenpairs of the internal
operator under the frozen Robin conditions kappa = -Re m(lambda),

    R = sum_k (lambda_k - lambda)^{-1} (D Gamma_0 psi_k)(D Gamma_0 psi_k)^T,

and S follows from R by the Cayley map S = (iI - R)(iI + R)^{-1}.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BracketFailure,
    CayleyPole,
    ChannelVoid,
    DirichletPole,
    FrozenResonance,
    NonFiniteState,
    SingularCoupling,
    ThresholdEnergy,
)
from .slp import DEFAULT_MESH_NODES, CoefficientProfile
from .spectra import DIRICHLET, EigenPair, FrozenRobinFamily, eigen_scan, eigenpair, frozen_conditions, iter_eigenvalues
from .weyl import LeadSpec, TauSample, WeylSample, internal_weyl, tau_sample

DET_EPS = 1e-10
CAYLEY_EPS = 1e-10
SERIES_TOL = 1e-3
DEFAULT_SERIES_TERMS = 200

EXCLUSIONS = ("threshold", "dirichlet_pole", "frozen_resonance", "no_channel")


@dataclass(frozen=True, eq=False)
class SMatrix:
    lam: float
    channels: tuple[str, ...]
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.channels)

    def unitarity_defect(self) -> float:
        s = self.entries
        return float(np.max(np.abs(s @ s.conj().T - np.eye(self.dim)))) if self.dim else 0.0

    def symmetry_defect(self) -> float:
        s = self.entries
        return float(np.max(np.abs(s - s.T))) if self.dim else 0.0


@dataclass(frozen=True, eq=False)
class RMatrix:
    lam: float
    channels: tuple[str, ...]
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.channels)


@dataclass(frozen=True)
class SeriesReport:
    n_terms: int
    partial: np.ndarray = field(compare=False)
    tail_estimate: float
    converged: bool


def _open_block(a: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return a[np.ix_(idx, idx)]


def _require_channels(tau: TauSample):
    idx = tau.open_indices
    if idx.size == 0:
        raise ChannelVoid(f"no open channel at lambda={tau.lam!r}")
    return idx


def _checked_inverse(a: np.ndarray, exc, what: str, lam, det_eps: float) -> np.ndarray:
    det = np.linalg.det(a)
    scale = max(1.0, float(np.max(np.abs(a)))) ** a.shape[0]
    if abs(det) <= det_eps * scale:
        raise exc(f"{what} is singular at lambda={lam!r} (|det|={abs(det):.3e})")
    return np.linalg.inv(a)


def s_direct(weyl: WeylSample, tau: TauSample, det_eps: float = DET_EPS) -> SMatrix:
    idx = _require_channels(tau)
    d = tau.sqrt_im_tau
    inv = _checked_inverse(weyl.M + tau.tau, SingularCoupling, "M + tau", tau.lam, det_eps)
    s = np.eye(2) - 2j * d @ inv @ d
    return SMatrix(tau.lam, tau.open_channels, _open_block(s, idx))


def r_direct(weyl: WeylSample, tau: TauSample, det_eps: float = DET_EPS) -> RMatrix:
    idx = _require_channels(tau)
    d = tau.sqrt_im_tau
    inv = _checked_inverse(weyl.M.real + tau.re_tau, FrozenResonance, "M + Re tau", tau.lam, det_eps)
    r = -d @ inv @ d
    return RMatrix(tau.lam, tau.open_channels, _open_block(r, idx))


def cayley_r_from_s(s: SMatrix, cayley_eps: float = CAYLEY_EPS) -> RMatrix:
    """R = i(I - S)(I + S)^{-1}."""
    n = s.dim
    eye = np.eye(n)
    a = eye + s.entries
    if n and np.min(np.linalg.svd(a, compute_uv=False)) < cayley_eps:
        raise CayleyPole(f"-1 is an eigenvalue of S at lambda={s.lam!r}")
    r = 1j * (eye - s.entries) @ np.linalg.inv(a)
    return RMatrix(s.lam, s.channels, r)


def cayley_s_from_r(r: RMatrix) -> SMatrix:
    """S = (iI - R)(iI + R)^{-1}; iI + R is invertible for Hermitian R."""
    eye = np.eye(r.dim)
    s = (1j * eye - r.entries) @ np.linalg.inv(1j * eye + r.entries)
    return SMatrix(r.lam, r.channels, s)


def _weighted_traces(pairs: Sequence[EigenPair], tau: TauSample) -> np.ndarray:
    d = np.diag(tau.sqrt_im_tau)
    w = np.array([d * p.trace0 for p in pairs]).reshape(len(pairs), 2)
    return w[:, tau.open_indices]


def r_series(
    lam: float,
    pairs: Sequence[EigenPair],
    tau: TauSample,
    n_terms: int | None = None,
    series_tol: float = SERIES_TOL,
    det_eps: float = DET_EPS,
) -> tuple[RMatrix, SeriesReport]:
    """Partial sum of the frozen-family eigenfunction series for R(lam).

    The tail estimate bounds sum_{k>N} |D Gamma_0 psi_k|^2 / (lambda_k - lam)
    with the trace envelope of the last five terms and Weyl growth
    lambda_k ~ lambda_N (k/N)^2, which gives  B N / (lambda_N - lam).
    """
    idx = _require_channels(tau)
    n = len(pairs) if n_terms is None else n_terms
    if n > len(pairs):
        raise ValueError(f"requested {n} terms but only {len(pairs)} eigenpairs supplied")
    used = pairs[:n]
    lams = np.array([p.lam for p in used])
    gaps = lams - lam
    if np.any(np.abs(gaps) <= det_eps * max(1.0, abs(lam))):
        raise FrozenResonance(f"lambda={lam!r} coincides with a frozen eigenvalue")
    w = _weighted_traces(used, tau)
    r = np.einsum("k,ki,kj->ij", 1.0 / gaps, w, w)
    if n and gaps[-1] > 0:
        envelope = float(np.max(np.sum(w[-5:] ** 2, axis=1)))
        tail = envelope * n / gaps[-1]
    else:
        tail = math.inf
    rm = RMatrix(lam, tau.open_channels, r)
    return rm, SeriesReport(n, r, tail, tail < series_tol)


def s_series(lam: float, pairs: Sequence[EigenPair], tau: TauSample, n_terms: int | None = None, **kw) -> SMatrix:
    rm, _ = r_series(lam, pairs, tau, n_terms, **kw)
    return cayley_s_from_r(rm)


def r_series_to_tol(
    profile: CoefficientProfile,
    left: LeadSpec,
    right: LeadSpec,
    lam: float,
    target_tol: float = SERIES_TOL,
    n_max: int = 4000,
    nodes: int = DEFAULT_MESH_NODES,
) -> tuple[RMatrix, SeriesReport]:
    """Extend the frozen-family series until its tail estimate is below ``target_tol``."""
    tau = tau_sample(left, right, lam)
    family = frozen_conditions(tau)
    gen = iter_eigenvalues(profile, family.left, family.right)
    pairs: list[EigenPair] = []
    n_next = 50
    while True:
        while len(pairs) < min(n_next, n_max):
            k = len(pairs) + 1
            pairs.append(eigenpair(profile, family.left, next(gen), k, nodes))
        rm, rep = r_series(lam, pairs, tau, series_tol=target_tol)
        if rep.converged or len(pairs) >= n_max:
            return rm, rep
        n_next *= 2


def divergence_diagnostic(profile: CoefficientProfile, lam: float, n_list: Iterable[int], nodes: int = DEFAULT_MESH_NODES) -> list[float]:
    """Trace norms of partial sums over Dirichlet eigenpairs with Gamma_1 traces.

    For lam below the Dirichlet spectrum every term is a positive rank-one
    matrix and the partial sums grow without bound.
    """
    n_list = list(n_list)
    pairs = eigen_scan(profile, DIRICHLET, DIRICHLET, max(n_list), nodes)
    mu = np.array([p.lam for p in pairs])
    if lam >= mu[0]:
        raise ValueError(f"lambda={lam!r} must lie below the Dirichlet spectrum (min {mu[0]!r})")
    g = np.array([p.trace1 for p in pairs])
    terms = np.einsum("k,ki,kj->kij", 1.0 / (mu - lam), g, g)
    partial = np.cumsum(terms, axis=0)
    return [float(np.linalg.norm(partial[n - 1], "nuc")) for n in n_list]


@dataclass(frozen=True)
class ScatteringSystem:
    profile: CoefficientProfile
    left: LeadSpec
    right: LeadSpec

    def __post_init__(self):
        if self.left.side != "left" or self.right.side != "right":
            raise ValueError("leads must be given as (left, right)")
        lt, rt = self.left.transition, self.right.transition
        if lt is not None and lt.x_b != self.profile.x_a:
            raise ValueError("left transition region must end at x_l")
        if rt is not None and rt.x_a != self.profile.x_b:
            raise ValueError("right transition region must start at x_r")

    @property
    def thresholds(self) -> tuple[float, float]:
        return self.left.tail_v, self.right.tail_v


@dataclass(frozen=True, eq=False)
class ScatterPoint:
    lam: float
    channels: tuple[str, ...] = ()
    exclusion: str | None = None
    S: np.ndarray | None = None
    R: np.ndarray | None = None
    series_error: float | None = None
    failure: str | None = None
    frozen: FrozenRobinFamily | None = None
    frozen_eigenvalues: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.channels)

    def full(self, which: str) -> np.ndarray:
        """S or R embedded into a 2x2 array (NaN for closed channels)."""
        a = self.S if which == "S" else self.R
        out = np.full((2, 2), np.nan, dtype=complex)
        if a is not None:
            idx = [("left", "right").index(c) for c in self.channels]
            out[np.ix_(idx, idx)] = a
        return out

    @property
    def transmission(self) -> float | None:
        if self.S is None:
            return None
        return float(abs(self.S[0, 1]) ** 2) if self.dim == 2 else 0.0

    @property
    def reflections(self) -> tuple[float, float] | None:
        if self.S is None:
            return None
        full = self.full("S")
        return float(abs(full[0, 0]) ** 2), float(abs(full[1, 1]) ** 2)


@dataclass(frozen=True)
class SweepOptions:
    compare_series: bool = False
    n_series_terms: int = DEFAULT_SERIES_TERMS
    series_tol: float = SERIES_TOL
    mesh_nodes: int = DEFAULT_MESH_NODES


class _FrozenCache:
    """Frozen-family eigenpairs keyed by the Robin parameters (pure memoization)."""

    def __init__(self, system: ScatteringSystem, opts: SweepOptions):
        self.system = system
        self.opts = opts
        self._store: dict[tuple[float, float], list[EigenPair]] = {}

    def get(self, family: FrozenRobinFamily) -> list[EigenPair]:
        key = (family.left.kappa, family.right.kappa)
        if key not in self._store:
            self._store[key] = eigen_scan(
                self.system.profile, family.left, family.right, self.opts.n_series_terms, self.opts.mesh_nodes
            )
        return self._store[key]


def scatter_point(system: ScatteringSystem, lam: float, opts: SweepOptions = SweepOptions(), cache: _FrozenCache | None = None) -> ScatterPoint:
    """Evaluate one energy; excluded energies and numerical failures are recorded, not raised."""
    lam = float(lam)
    try:
        tau = tau_sample(system.left, system.right, lam)
    except ThresholdEnergy:
        return ScatterPoint(lam, exclusion="threshold")
    channels = tau.open_channels
    if not channels:
        return ScatterPoint(lam, exclusion="no_channel")
    try:
        weyl = internal_weyl(system.profile, lam)
    except DirichletPole:
        return ScatterPoint(lam, channels, exclusion="dirichlet_pole")
    try:
        s = s_direct(weyl, tau)
        r = r_direct(weyl, tau)
    except FrozenResonance:
        return ScatterPoint(lam, channels, exclusion="frozen_resonance")
    except (SingularCoupling, NonFiniteState) as exc:
        return ScatterPoint(lam, channels, failure=str(exc))
    series_error = frozen = frozen_vals = None
    if opts.compare_series:
        frozen = frozen_conditions(tau)
        try:
            pairs = (cache or _FrozenCache(system, opts)).get(frozen)
            rs, _ = r_series(lam, pairs, tau, series_tol=opts.series_tol)
        except FrozenResonance:
            return ScatterPoint(lam, channels, exclusion="frozen_resonance")
        except (BracketFailure, NonFiniteState) as exc:
            return ScatterPoint(lam, channels, failure=str(exc))
        series_error = float(np.max(np.abs(rs.entries - r.entries)))
        frozen_vals = np.array([p.lam for p in pairs])
    return ScatterPoint(lam, channels, None, s.entries, r.entries.real, series_error, None, frozen, frozen_vals)


def _sweep_chunk(args):
    system, grid, opts = args
    cache = _FrozenCache(system, opts)
    return [scatter_point(system, lam, opts, cache) for lam in grid]


def sweep(system: ScatteringSystem, grid: Sequence[float], opts: SweepOptions = SweepOptions(), workers: int = 1) -> list[ScatterPoint]:
    """Evaluate every grid energy; output order follows the grid regardless of ``workers``."""
    grid = [float(x) for x in grid]
    if not all(math.isfinite(x) for x in grid):
        raise ValueError("energy grid must be finite")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("energy grid must be sorted")
    if workers <= 1 or len(grid) < 2:
        return _sweep_chunk((system, grid, opts))
    n = min(workers, len(grid))
    bounds = np.linspace(0, len(grid), n + 1).astype(int)
    chunks = [(system, grid[a:b], opts) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=n) as pool:
        parts = list(pool.map(_sweep_chunk, chunks))
    return [pt for part in parts for pt in part]
