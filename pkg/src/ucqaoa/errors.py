"""Exception hierarchy shared by all stages."""


class UcqaoaError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(UcqaoaError, ValueError):
    """Malformed input: bad instance document, dimension mismatch, bad vector length."""


class CompileError(UcqaoaError):
    """The QUBO could not be built (non-finite coefficients)."""


class CapacityError(UcqaoaError):
    """Problem too large for an exact or state-vector method."""


class ConfigurationError(UcqaoaError, ValueError):
    """Inconsistent solver or pipeline settings."""
