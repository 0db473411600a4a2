"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter violates its documented domain."""


class DataError(ValueError):
    """Required trajectory data (snapshot, current window) is missing or too short."""


class CapacityError(ValueError):
    """An exact computation would exceed its configured state-space cap."""


class AccuracyError(RuntimeError):
    """A truncated computation reports error above its configured tolerance."""


class SolverError(RuntimeError):
    """Iterative solver failed to reach its tolerance within the iteration cap."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
