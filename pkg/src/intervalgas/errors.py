"""Exception and warning types shared across the package."""


class IntervalGasError(Exception):
    """Base class for all errors raised by this package."""


class DivergentIntegralError(IntervalGasError):
    """A radial moment or tail integral does not converge."""


class CapExceededError(IntervalGasError):
    """Full enumeration requested beyond the supported size cap."""


class DegreeSequenceError(IntervalGasError):
    """Degree sequence is not realizable by a labeled tree."""


class DisconnectedPairError(IntervalGasError):
    """Two vertices lie in different components of a forest."""


class IndexMismatchError(IntervalGasError):
    """Interpolation weights are not indexed by the forest edges."""


class NotPositiveSemidefiniteError(IntervalGasError):
    """A matrix required to be PSD has a significantly negative eigenvalue."""


class NegativeTimeError(IntervalGasError):
    """Finite-window Brownian covariance evaluated at negative times."""


class UnsupportedDimensionError(IntervalGasError):
    """Operation restricted to d = 3 called with another dimension."""


class OverflowGuardError(IntervalGasError):
    """Path-functional exponent exceeds the configured safety cap."""


class NonpositiveInverseMassError(IntervalGasError):
    """Truncated inverse-mass series is not positive at this coupling."""


class ConfigError(IntervalGasError):
    """Run configuration failed schema validation."""


class RadiusExceededWarning(UserWarning):
    """Coupling lies at or beyond the rigorous convergence radius."""


class LogReliabilityWarning(UserWarning):
    """Relative error of a partition-function estimate is too large for a
    trustworthy logarithm."""
