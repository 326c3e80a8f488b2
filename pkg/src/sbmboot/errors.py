"""Exception types shared across the package."""


class ResourceLimitError(RuntimeError):
    """A requested computation exceeds a configured resource cap."""


class ReducibleMatrixError(ValueError):
    """The coupling matrix is reducible: some communities are unreachable."""


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within its iteration budget."""


class InconclusiveError(RuntimeError):
    """The trajectory integrator exhausted its step budget without hitting
    either a domain exit or a stall; the instance cannot be classified."""
