"""
Exception hierarchy for the sym-cube lab.

Every error carries the process exit code the command line maps it to.
"""


class SymCubeError(Exception):
    """Base class for all lab errors."""

    exit_code = 1


class ConfigurationError(SymCubeError):
    """Invalid or inconsistent configuration."""

    exit_code = 2


class UnsupportedWeightError(SymCubeError):
    """No built-in generator for the requested weight."""

    exit_code = 2


class ResourceError(SymCubeError):
    """Request exceeds the configured memory/term budget."""

    exit_code = 3


class NetworkError(SymCubeError):
    """Database request failed or network use is forbidden."""

    exit_code = 3


class CacheMissError(SymCubeError):
    """Offline mode and no usable cache file."""

    exit_code = 3


class IntegrityError(SymCubeError):
    """Coefficients violate multiplicativity or the Hecke recursion."""


class DeligneViolationError(SymCubeError):
    """Normalized Hecke eigenvalue outside [-2, 2]."""


class ConsistencyError(SymCubeError):
    """Two independent evaluations of the same quantity disagree."""


class AmbiguityError(SymCubeError):
    """Both root-number hypotheses are numerically consistent."""


class InsufficientCoefficientsError(SymCubeError):
    """Coefficient table shorter than the required truncation."""


class InsufficientBlocksError(SymCubeError):
    """Too few dyadic blocks to fit a slope."""


class QuadratureError(SymCubeError):
    """Vertical-line quadrature did not converge."""


class MissingValueError(SymCubeError):
    """Persisted central values incomplete and recomputation disabled."""
