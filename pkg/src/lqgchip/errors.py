"""Exception hierarchy.

Every error raised on purpose by the package derives from ``LqgChipError`` so
the CLI can map it onto an exit code.
"""


class LqgChipError(Exception):
    """Base class for all package errors."""


class DomainError(LqgChipError, ValueError):
    """An argument lies outside the domain of the operation."""


class DimensionError(LqgChipError, ValueError):
    """Array shapes do not match what the operation expects."""


class NormalizationError(LqgChipError, ValueError):
    """A matrix has operator norm above one and cannot be dilated."""


class InvariantError(LqgChipError, ValueError):
    """A numerical invariant (e.g. unitarity) is violated."""


class ResourceError(LqgChipError, ValueError):
    """The request exceeds a hard computational limit."""


class ConfigError(LqgChipError, ValueError):
    """Invalid configuration or scan setup."""


class InsufficientDataError(LqgChipError, ValueError):
    """Measured data does not carry enough counts to estimate a quantity."""


class PlanningError(LqgChipError, ValueError):
    """A measurement plan cannot determine the requested parameters."""


class UndefinedVisibilityError(LqgChipError, ZeroDivisionError):
    """The distinguishable-photon coincidence probability is zero."""


class DependencyError(LqgChipError, FileNotFoundError):
    """A required artifact from an earlier pipeline step is missing."""
