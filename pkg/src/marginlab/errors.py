"""Exception types shared across the lab."""


class MarginLabError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(MarginLabError):
    """Operands live in different ambient dimensions, or the dimension is invalid."""


class DegenerateVectorError(MarginLabError):
    """A vector with (near-)zero norm where a direction is required."""


class SamplerStallError(MarginLabError):
    """Rejection sampler exhausted its proposal budget.

    Carries the acceptance rate observed before giving up.
    """

    def __init__(self, message: str, acceptance_rate: float):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate


class InfeasibleSampleError(MarginLabError):
    """No strict linear separator exists for the given labeled sample."""


class NetConstructionError(MarginLabError):
    """Sphere-net construction could not reach a verified covering."""


class SizeGuardError(MarginLabError):
    """Input exceeds the size limits of a brute-force engine."""


class UnsupportedDimensionError(MarginLabError):
    """Operation only defined for a specific ambient dimension."""


class ConfigError(MarginLabError):
    """Invalid experiment configuration."""
