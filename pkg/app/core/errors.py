"""
Exception hierarchy for the approximation package.

Argument-validation errors also derive from ValueError so callers that only
know the builtin keep working. The HTTP layer maps AnovaError to 400.
"""


class AnovaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(AnovaError, ValueError):
    """Invalid settings or experiment configuration."""


class InvalidTermSetError(AnovaError, ValueError):
    """Malformed ANOVA term set (bad subsets, duplicates, bad d_s)."""


class InvalidBandwidthError(AnovaError, ValueError):
    """Bandwidth not admissible for the chosen basis."""


class SupportMismatchError(AnovaError, ValueError):
    """Frequency support does not equal the term it is addressed with."""


class PlanMismatchError(AnovaError, ValueError):
    """Coefficients or samples do not fit the transform plan."""


class OversampledSizeError(AnovaError, ValueError):
    """Oversampled FFT grid would exceed the supported size."""


class BracketError(AnovaError, ValueError):
    """Root bracketing failed; the prox precondition was violated."""


class ZeroVarianceError(AnovaError, ValueError):
    """Sensitivity indices requested for a model without variance."""


class OracleInconsistencyError(AnovaError, ValueError):
    """Exact-coefficient oracle disagrees with the fitted index set."""


class DatasetError(AnovaError):
    """Tabular input could not be turned into a usable data set."""


class NodeDomainError(AnovaError, ValueError):
    """Sampling nodes outside the domain of the basis."""
