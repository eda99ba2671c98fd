"""Exception hierarchy shared by all solver modules."""

from __future__ import annotations


class WeylScatError(Exception):
    """Base class for every error raised by the package."""


class ProfileError(WeylScatError, ValueError):
    """Invalid coefficient profile (bad widths, nonpositive mass, ...)."""


class NonFiniteState(WeylScatError, FloatingPointError):
    """Propagation overflowed; the spectral parameter is far outside the usable range."""


class MeshMismatch(WeylScatError, ValueError):
    """Two mesh functions are not sampled on the same mesh."""


class DirichletPole(WeylScatError):
    """The energy is numerically an eigenvalue of the Dirichlet operator."""

    def __init__(self, lam, psi_r):
        self.lam = lam
        self.psi_r = psi_r
        super().__init__(f"lambda={lam!r} is a Dirichlet eigenvalue (psi(x_r)={psi_r!r})")


class ThresholdEnergy(WeylScatError):
    """The energy coincides with a lead threshold (tail potential)."""

    def __init__(self, lam, threshold):
        self.lam = lam
        self.threshold = threshold
        super().__init__(f"lambda={lam!r} is at the lead threshold v={threshold!r}")


class DegenerateInterface(WeylScatError):
    """The lead solution vanishes at the interface, so the m-coefficient is undefined."""


class BracketFailure(WeylScatError):
    """Oscillation counting and sign changes of the eigencondition disagree."""

    def __init__(self, message, interval=None):
        self.interval = interval
        if interval is not None:
            message = f"{message} on [{interval[0]!r}, {interval[1]!r}]"
        super().__init__(message)


class ChannelVoid(WeylScatError):
    """No lead channel is open at this energy; S and R are not defined."""


class SingularCoupling(WeylScatError):
    """M + tau is numerically singular at a real energy."""


class FrozenResonance(WeylScatError):
    """M + Re tau is singular: the energy hits an eigenvalue of the frozen Robin operator."""


class CayleyPole(WeylScatError):
    """-1 is (numerically) an eigenvalue of S, so the Cayley transform is undefined."""


class ConfigError(WeylScatError, ValueError):
    """Configuration document failed validation."""
