"""Two-lead one-dimensional scattering from boundary-triplet Weyl functions.

The internal region (x_l, x_r) carries the operator -(1/2)(1/m u')' + v u.
Its Weyl matrix M(lam) and the lead coefficients tau(lam) give the scattering
matrix S(lam), its Cayley transform R(lam), and an eigenfunction series for
R(lam) over an energy-dependent Robin family.
"""

__version__ = "0.1.0"

from .errors import (
    BracketFailure,
    CayleyPole,
    ChannelVoid,
    ConfigError,
    DegenerateInterface,
    DirichletPole,
    FrozenResonance,
    MeshMismatch,
    NonFiniteState,
    ProfileError,
    SingularCoupling,
    ThresholdEnergy,
    WeylScatError,
)
from .slp import (
    CoefficientProfile,
    ConstantSegment,
    FundamentalPair,
    QuasiState,
    SampledSegment,
    Trajectory,
    TransferMatrix,
    fundamental_pair,
    l2_inner,
    l2_norm,
    propagate,
    trajectory,
    transfer,
)
from .weyl import (
    LeadSpec,
    TauSample,
    WeylSample,
    constant_lead_m,
    gamma0,
    gamma1,
    gamma_field_apply,
    internal_weyl,
    lead_weyl,
    tau_sample,
)
from .spectra import (
    DIRICHLET,
    NEUMANN,
    Dirichlet,
    EigenPair,
    FrozenRobinFamily,
    Robin,
    eigen_scan,
    eigenvalues,
    frozen_family,
)
from .scattering import (
    RMatrix,
    ScatteringSystem,
    ScatterPoint,
    SeriesReport,
    SMatrix,
    SweepOptions,
    cayley_r_from_s,
    cayley_s_from_r,
    divergence_diagnostic,
    r_direct,
    r_series,
    s_direct,
    s_series,
    scatter_point,
    sweep,
)
