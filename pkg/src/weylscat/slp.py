"""Quasi-derivative propagation for -(1/2)(d/dx)(1/m)(d/dx)u + v u = lambda u.

The state is the pair (u, p) with the flux p = u'/(2m), which is continuous
across mass jumps.  On an interval the first-order system reads

    u' = 2 m p,        p' = (v - lambda) u,

so every transfer matrix has unit determinant.  Constant segments are
propagated exactly; sampled segments (piecewise-linear m, v) with classical
RK4 on a fixed step grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import simpson

from .errors import MeshMismatch, NonFiniteState, ProfileError

DEFAULT_MESH_NODES = 2048
RK4_STEPS_PER_SEGMENT = 2000
_WIDTH_RTOL = 1e-12
_V_BOUND = 1e6

_EYE = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class ConstantSegment:
    width: float
    m: float
    v: float

    def __post_init__(self):
        if not self.width > 0:
            raise ProfileError(f"segment width must be > 0, got {self.width!r}")
        if not self.m > 0:
            raise ProfileError(f"mass must be > 0, got {self.m!r}")
        if not abs(self.v) < _V_BOUND:
            raise ProfileError(f"potential must be finite with |v| < {_V_BOUND:g}, got {self.v!r}")

    def mass(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.m)

    def potential(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.v)


@dataclass(frozen=True, eq=False)
class SampledSegment:
    """Segment with m and v given on a grid and interpolated linearly.

    ``positions`` are local coordinates running from 0 to ``width``; when
    omitted the samples are taken to be equally spaced.  ``h_max`` caps the
    RK4 step (default ``width / 2000``).
    """

    width: float
    m: np.ndarray
    v: np.ndarray
    positions: np.ndarray | None = None
    h_max: float | None = None

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if not self.width > 0:
            raise ProfileError(f"segment width must be > 0, got {self.width!r}")
        if m.ndim != 1 or m.shape != v.shape or m.size < 2:
            raise ProfileError("sampled m and v need matching 1D grids of >= 2 samples")
        if self.positions is None:
            pos = np.linspace(0.0, self.width, m.size)
        else:
            pos = np.asarray(self.positions, dtype=float)
            if pos.shape != m.shape:
                raise ProfileError("positions must match the sample count")
            if abs(pos[0]) > _WIDTH_RTOL * self.width or abs(pos[-1] - self.width) > _WIDTH_RTOL * self.width:
                raise ProfileError("sample positions must span [0, width]")
            if np.any(np.diff(pos) <= 0):
                raise ProfileError("sample positions must be strictly increasing")
        if not np.all(np.isfinite(m)) or np.min(m) <= 0:
            raise ProfileError("mass samples must be finite and > 0")
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) >= _V_BOUND:
            raise ProfileError(f"potential samples must be finite with |v| < {_V_BOUND:g}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "positions", pos)

    @property
    def step(self) -> float:
        return self.h_max if self.h_max is not None else self.width / RK4_STEPS_PER_SEGMENT

    def mass(self, s):
        return np.interp(s, self.positions, self.m)

    def potential(self, s):
        return np.interp(s, self.positions, self.v)

    def rk4_grid(self, extra=None) -> np.ndarray:
        n = max(1, math.ceil(self.width / self.step - 1e-9))
        grid = np.linspace(0.0, self.width, n + 1)
        if extra is not None and len(extra):
            grid = np.union1d(grid, np.clip(extra, 0.0, self.width))
        return grid


Segment = ConstantSegment | SampledSegment


@dataclass(frozen=True, eq=False)
class CoefficientProfile:
    """Piecewise description of m and v on [x_a, x_b].

    A profile with ``x_a == x_b`` and no segments is allowed; it transports
    every state unchanged.
    """

    x_a: float
    x_b: float
    segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            if self.x_a != self.x_b:
                raise ProfileError("a profile without segments must have zero width")
            return
        if not self.x_a < self.x_b:
            raise ProfileError(f"x_a must be < x_b, got {self.x_a!r} >= {self.x_b!r}")
        total = sum(s.width for s in segs)
        span = self.x_b - self.x_a
        if abs(total - span) > _WIDTH_RTOL * max(span, 1.0):
            raise ProfileError(f"segment widths sum to {total!r}, interval length is {span!r}")

    @classmethod
    def constant(cls, x_a: float, x_b: float, m: float, v: float) -> "CoefficientProfile":
        return cls(x_a, x_b, (ConstantSegment(x_b - x_a, m, v),))

    @classmethod
    def piecewise(cls, x_a: float, widths: Sequence[float], ms: Sequence[float], vs: Sequence[float]):
        segs = tuple(ConstantSegment(float(w), float(m), float(v)) for w, m, v in zip(widths, ms, vs))
        return cls(x_a, x_a + float(sum(widths)), segs)

    @classmethod
    def empty(cls, x: float) -> "CoefficientProfile":
        return cls(x, x, ())

    @property
    def length(self) -> float:
        return self.x_b - self.x_a

    @property
    def breakpoints(self) -> np.ndarray:
        """Segment boundaries; the last entry is pinned to x_b."""
        pts = self.x_a + np.concatenate([[0.0], np.cumsum([s.width for s in self.segments])])
        pts[-1] = self.x_b
        return pts

    @property
    def is_piecewise_constant(self) -> bool:
        return all(isinstance(s, ConstantSegment) for s in self.segments)

    def mass_range(self) -> tuple[float, float]:
        vals = np.concatenate([np.atleast_1d(s.m) for s in self.segments])
        return float(vals.min()), float(vals.max())

    def potential_range(self) -> tuple[float, float]:
        vals = np.concatenate([np.atleast_1d(s.v) for s in self.segments])
        return float(vals.min()), float(vals.max())

    def mass(self, x) -> np.ndarray:
        return self._sample(x, "mass")

    def potential(self, x) -> np.ndarray:
        return self._sample(x, "potential")

    def _sample(self, x, attr):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        bps = self.breakpoints
        idx = np.clip(np.searchsorted(bps, x, side="right") - 1, 0, len(self.segments) - 1)
        for j, seg in enumerate(self.segments):
            sel = idx == j
            if np.any(sel):
                out[sel] = getattr(seg, attr)(x[sel] - bps[j])
        return out

    def restrict(self, a: float, b: float) -> "CoefficientProfile":
        """Sub-profile on [a, b] (a < b, both inside the profile)."""
        if not (self.x_a <= a < b <= self.x_b):
            raise ProfileError(f"[{a!r}, {b!r}] is not inside [{self.x_a!r}, {self.x_b!r}]")
        bps = self.breakpoints
        segs = []
        for j, seg in enumerate(self.segments):
            lo, hi = max(a, bps[j]), min(b, bps[j + 1])
            if hi - lo <= 0:
                continue
            s0, s1 = lo - bps[j], hi - bps[j]
            if isinstance(seg, ConstantSegment):
                segs.append(ConstantSegment(hi - lo, seg.m, seg.v))
            else:
                inner = seg.positions[(seg.positions > s0) & (seg.positions < s1)]
                pos = np.concatenate([[s0], inner, [s1]])
                segs.append(
                    SampledSegment(
                        hi - lo, seg.mass(pos), seg.potential(pos), pos - s0,
                        h_max=seg.h_max if seg.h_max is not None else seg.width / RK4_STEPS_PER_SEGMENT,
                    )
                )
        # absorb rounding in the summed widths into the last segment
        total = sum(s.width for s in segs)
        if segs and abs(total - (b - a)) > 0:
            last = segs[-1]
            w = last.width + (b - a) - total
            if isinstance(last, ConstantSegment):
                segs[-1] = ConstantSegment(w, last.m, last.v)
        return CoefficientProfile(a, b, tuple(segs))


@dataclass(frozen=True)
class QuasiState:
    u: complex
    p: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.p], dtype=complex)


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    matrix: np.ndarray
    x_from: float
    x_to: float
    lam: complex

    @property
    def det(self) -> complex:
        t = self.matrix
        return complex(t[0, 0] * t[1, 1] - t[0, 1] * t[1, 0])

    def apply(self, state: QuasiState) -> QuasiState:
        u, p = self.matrix @ state.as_array()
        return QuasiState(complex(u), complex(p))

    def inverse(self) -> "TransferMatrix":
        t = self.matrix
        inv = np.array([[t[1, 1], -t[0, 1]], [-t[1, 0], t[0, 0]]]) / self.det
        return TransferMatrix(inv, self.x_to, self.x_from, self.lam)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        # self after other
        return TransferMatrix(self.matrix @ other.matrix, other.x_from, self.x_to, self.lam)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Solution sampled on a mesh: values u and fluxes p = u'/(2m)."""

    x: np.ndarray
    u: np.ndarray
    p: np.ndarray

    def scaled(self, c) -> "Trajectory":
        return Trajectory(self.x, self.u * c, self.p * c)


@dataclass(frozen=True, eq=False)
class FundamentalPair:
    lam: complex
    phi: Trajectory
    psi: Trajectory

    @property
    def phi_r(self) -> complex:
        return complex(self.phi.u[-1])

    @property
    def p_phi_r(self) -> complex:
        return complex(self.phi.p[-1])

    @property
    def psi_r(self) -> complex:
        return complex(self.psi.u[-1])

    @property
    def p_psi_r(self) -> complex:
        return complex(self.psi.p[-1])

    def wronskian(self) -> np.ndarray:
        return self.phi.u * self.psi.p - self.psi.u * self.phi.p


def _check_finite(arr, lam):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteState(f"propagation overflowed at lambda={lam!r}; rescale the problem")
    return arr


def _is_real(lam) -> bool:
    return isinstance(lam, (int, float, np.floating)) or complex(lam).imag == 0.0


def cos_sinc(m: float, v: float, lam, s):
    """cos(ks) and sin(ks)/k for k^2 = 2m(lam - v); even in k, so no branch choice.

    Real arrays are returned for real ``lam``.
    """
    s = np.asarray(s, dtype=float)
    if _is_real(lam):
        k2 = 2.0 * m * (float(np.real(lam)) - v)
        if k2 > 0:
            k = math.sqrt(k2)
            return np.cos(k * s), np.sin(k * s) / k
        if k2 < 0:
            q = math.sqrt(-k2)
            return np.cosh(q * s), np.sinh(q * s) / q
        return np.ones_like(s), s.copy()
    k = np.sqrt(complex(2.0 * m * (complex(lam) - v)))
    ks = k * s
    return np.cos(ks), s * np.sinc(ks / np.pi)


def _cos_sinc_scalar(m: float, v: float, lam: float, s: float) -> tuple[float, float]:
    k2 = 2.0 * m * (lam - v)
    if k2 > 0:
        k = math.sqrt(k2)
        return math.cos(k * s), math.sin(k * s) / k
    if k2 < 0:
        q = math.sqrt(-k2)
        if q * s > 700.0:
            raise NonFiniteState(f"propagation overflowed at lambda={lam!r}; rescale the problem")
        return math.cosh(q * s), math.sinh(q * s) / q
    return 1.0, s


def constant_transfer(m: float, v: float, lam: complex, s) -> np.ndarray:
    """Exact propagator of a constant segment for offsets ``s``; shape (..., 2, 2).

    With k = sqrt(2m(lam - v)):
    u(s) = cos(ks) u0 + (2m/k) sin(ks) p0,  p(s) = -(k/2m) sin(ks) u0 + cos(ks) p0.
    """
    c, sc = cos_sinc(m, v, lam, s)
    out = np.empty(np.shape(c) + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = 2.0 * m * sc
    out[..., 1, 0] = -(complex(lam) - v) * sc
    out[..., 1, 1] = c
    return out


def _coef_matrix(m, v, lam):
    a = np.zeros(np.shape(m) + (2, 2), dtype=complex)
    a[..., 0, 1] = 2.0 * m
    a[..., 1, 0] = v - lam
    return a


def rk4_step_matrices(seg: SampledSegment, lam: complex, grid: np.ndarray) -> np.ndarray:
    """One RK4 step matrix per interval of ``grid`` (local coordinates)."""
    lam = complex(lam)
    a, b = grid[:-1], grid[1:]
    h = (b - a)[:, None, None]
    mid = 0.5 * (a + b)
    A0 = _coef_matrix(seg.mass(a), seg.potential(a), lam)
    Ah = _coef_matrix(seg.mass(mid), seg.potential(mid), lam)
    A1 = _coef_matrix(seg.mass(b), seg.potential(b), lam)
    K1 = A0
    K2 = Ah @ (_EYE + 0.5 * h * K1)
    K3 = Ah @ (_EYE + 0.5 * h * K2)
    K4 = A1 @ (_EYE + h * K3)
    return _EYE + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)


def chain(mats: np.ndarray) -> np.ndarray:
    """Ordered product mats[-1] @ ... @ mats[0] by pairwise reduction."""
    mats = np.asarray(mats)
    if len(mats) == 0:
        return _EYE.copy()
    while len(mats) > 1:
        odd = mats[-1:] if len(mats) % 2 else None
        even = mats[: len(mats) - (len(mats) % 2)]
        mats = even[1::2] @ even[0::2]
        if odd is not None:
            mats = np.concatenate([mats, odd])
    return mats[0]


def prefix_products(mats: np.ndarray) -> np.ndarray:
    """Inclusive scan: out[i] = mats[i] @ ... @ mats[0]."""
    out = np.array(mats, dtype=complex, copy=True)
    d = 1
    while d < len(out):
        out[d:] = out[d:] @ out[:-d]
        d *= 2
    return out


def segment_transfer(seg: Segment, lam: complex) -> np.ndarray:
    if isinstance(seg, ConstantSegment):
        return constant_transfer(seg.m, seg.v, lam, seg.width)
    return chain(rk4_step_matrices(seg, lam, seg.rk4_grid()))


def transfer(profile: CoefficientProfile, lam: complex) -> np.ndarray:
    """2x2 transfer matrix from x_a to x_b."""
    t = _EYE.copy()
    # overflow is reported by _check_finite instead of numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for seg in profile.segments:
            t = segment_transfer(seg, lam) @ t
    return _check_finite(t, lam)


def transfer_at(profile: CoefficientProfile, lam: complex, xs) -> np.ndarray:
    """Transfer matrices from x_a to each of the sorted positions ``xs``."""
    xs = np.asarray(xs, dtype=float)
    out = np.empty(xs.shape + (2, 2), dtype=complex)
    done = np.zeros(xs.shape, dtype=bool)
    bps = profile.breakpoints
    t = _EYE.copy()
    for j, seg in enumerate(profile.segments):
        sel = ~done & (xs >= bps[j]) & (xs <= bps[j + 1])
        loc = np.clip(xs[sel] - bps[j], 0.0, seg.width)
        if isinstance(seg, ConstantSegment):
            if loc.size:
                out[sel] = constant_transfer(seg.m, seg.v, lam, loc) @ t
            t = constant_transfer(seg.m, seg.v, lam, seg.width) @ t
        else:
            grid = seg.rk4_grid(loc)
            scan = prefix_products(rk4_step_matrices(seg, lam, grid))
            if loc.size:
                idx = np.searchsorted(grid, loc)
                cum = np.concatenate([_EYE[None], scan])[idx]
                out[sel] = cum @ t
            t = scan[-1] @ t
        done |= sel
    if not np.all(done):
        # only possible for an empty profile
        out[~done] = _EYE
    return _check_finite(out, lam)


def propagate(profile: CoefficientProfile, lam: complex, state: QuasiState) -> tuple[QuasiState, TransferMatrix]:
    """Carry ``state`` from x_a to x_b; also return the accumulated transfer matrix."""
    if abs(complex(lam).imag) >= 1e6:
        raise NonFiniteState(f"|Im lambda| too large: {lam!r}")
    tm = TransferMatrix(transfer(profile, lam), profile.x_a, profile.x_b, complex(lam))
    return tm.apply(state), tm


def mesh(profile: CoefficientProfile, nodes: int = DEFAULT_MESH_NODES) -> np.ndarray:
    """``nodes`` points on [x_a, x_b], uniform inside each segment, with a node on every breakpoint.

    Intervals are shared out in proportion to segment width, in even counts
    where possible so Simpson panels never straddle a coefficient jump.
    Falls back to a plain uniform mesh when there are too few nodes.
    """
    n_int = nodes - 1
    segs = profile.segments
    if len(segs) <= 1 or n_int < 4 * len(segs):
        x = np.linspace(profile.x_a, profile.x_b, nodes)
        x[-1] = profile.x_b
        return x
    widths = np.array([s.width for s in segs])
    counts = np.maximum(2, 2 * np.round(widths / widths.sum() * n_int / 2).astype(int))
    # settle the remainder on the widest segment
    counts[np.argmax(widths)] += n_int - counts.sum()
    bps = profile.breakpoints
    parts = [np.linspace(bps[j], bps[j + 1], c + 1)[:-1] for j, c in enumerate(counts)]
    return np.concatenate(parts + [[profile.x_b]])


def trajectory(profile: CoefficientProfile, lam: complex, state, nodes: int = DEFAULT_MESH_NODES) -> Trajectory:
    """Solution with initial data ``state`` at x_a, sampled on ``mesh(profile, nodes)``."""
    x = mesh(profile, nodes)
    y0 = state.as_array() if isinstance(state, QuasiState) else np.asarray(state, dtype=complex)
    if not profile.is_piecewise_constant:
        y = transfer_at(profile, lam, x) @ y0
        return Trajectory(x, y[:, 0], y[:, 1])
    real = _is_real(lam) and not np.any(np.imag(y0))
    dtype = float if real else complex
    lam_v = float(np.real(lam)) if real else complex(lam)
    y = (y0.real if real else y0).astype(dtype)
    u = np.empty(x.shape, dtype=dtype)
    p = np.empty(x.shape, dtype=dtype)
    done = np.zeros(x.shape, dtype=bool)
    bps = profile.breakpoints
    for j, seg in enumerate(profile.segments):
        sel = ~done & (x >= bps[j]) & (x <= bps[j + 1])
        loc = np.append(np.clip(x[sel] - bps[j], 0.0, seg.width), seg.width)
        c, sc = cos_sinc(seg.m, seg.v, lam_v, loc)
        uu = c * y[0] + 2.0 * seg.m * sc * y[1]
        pp = -(lam_v - seg.v) * sc * y[0] + c * y[1]
        u[sel], p[sel] = uu[:-1], pp[:-1]
        y = np.array([uu[-1], pp[-1]])
        done |= sel
    _check_finite(u, lam)
    _check_finite(p, lam)
    return Trajectory(x, u, p)


def fundamental_pair(profile: CoefficientProfile, lam: complex, nodes: int = DEFAULT_MESH_NODES) -> FundamentalPair:
    """phi: (u, p) = (1, 0) at x_l;  psi: (u, p) = (0, 1) at x_l."""
    x = mesh(profile, nodes)
    t = transfer_at(profile, lam, x)
    phi = Trajectory(x, t[:, 0, 0], t[:, 1, 0])
    psi = Trajectory(x, t[:, 0, 1], t[:, 1, 1])
    return FundamentalPair(complex(lam), phi, psi)


def _values(f):
    if isinstance(f, Trajectory):
        return f.x, f.u
    x, vals = f
    return np.asarray(x), np.asarray(vals)


def l2_inner(a, b) -> complex:
    """Composite Simpson approximation of  integral a(x) conj(b(x)) dx.

    ``a`` and ``b`` are Trajectory objects or ``(x, values)`` pairs on the
    same mesh.
    """
    xa, va = _values(a)
    xb, vb = _values(b)
    if xa.shape != xb.shape or not np.array_equal(xa, xb):
        raise MeshMismatch("functions are sampled on different meshes")
    return complex(simpson(va * np.conj(vb), x=xa))


def l2_norm(a) -> float:
    return math.sqrt(max(l2_inner(a, a).real, 0.0))


def oscillation_count(profile: CoefficientProfile, lam: float, state: QuasiState) -> tuple[int, np.ndarray]:
    """Number of zeros of u in (x_a, x_b] for real ``lam``, and the end state.

    Oscillatory constant segments are counted through the exact phase
    advance k*width; elsewhere a solution has at most one zero per
    (sub)step, detected by a sign change.  The returned end state is
    rescaled to unit norm.
    """
    lam = float(lam)
    y = (state.u.real, state.p.real)
    zeros = 0
    for seg in profile.segments:
        if isinstance(seg, ConstantSegment):
            c, sc = _cos_sinc_scalar(seg.m, seg.v, lam, seg.width)
            y_new = (c * y[0] + 2.0 * seg.m * sc * y[1], -(lam - seg.v) * sc * y[0] + c * y[1])
            k2 = 2.0 * seg.m * (lam - seg.v)
            if k2 > 0:
                k = math.sqrt(k2)
                theta0 = math.atan2(y[0], (2.0 * seg.m / k) * y[1])
                zeros += math.floor((theta0 + k * seg.width) / math.pi) - math.floor(theta0 / math.pi)
            elif y[0] != 0.0 and y[0] * y_new[0] <= 0.0:
                zeros += 1
        else:
            grid = seg.rk4_grid()
            scan = prefix_products(rk4_step_matrices(seg, lam, grid)).real
            y = np.asarray(y)
            us = np.concatenate([[y[0]], (scan @ y)[:, 0]])
            prev, nxt = us[:-1], us[1:]
            zeros += int(np.count_nonzero((prev != 0.0) & (prev * nxt <= 0.0)))
            y_new = scan[-1] @ y
        norm = math.hypot(y_new[0], y_new[1])
        if not math.isfinite(norm):
            raise NonFiniteState(f"propagation overflowed at lambda={lam!r}")
        y = (y_new[0] / norm, y_new[1] / norm)
    return zeros, np.array(y)
