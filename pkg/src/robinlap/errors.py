"""Exception types shared across the package."""


class RobinLapError(Exception):
    """Base class for all errors raised by robinlap."""


class SizingError(RobinLapError, ValueError):
    """Grid parameters do not produce an integral number of cells."""


class CapacityError(RobinLapError, MemoryError):
    """The requested discretization exceeds the configured node cap."""


class UnsupportedDimensionError(RobinLapError, ValueError):
    """The operation is not defined in the requested dimension."""


class ExpressionError(RobinLapError, ValueError):
    """A boundary-coupling expression failed to parse or evaluate."""


class WrongTheoremError(RobinLapError, ValueError):
    """A hypothesis checker was called on data outside its scope."""


class SingularSolveError(RobinLapError, ArithmeticError):
    """A shifted system could not be factorized."""

    def __init__(self, message: str, condition_estimate: float = float("inf")):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class NoConvergenceError(RobinLapError, RuntimeError):
    """An iterative eigensolver failed to converge."""


class ConfigError(RobinLapError, ValueError):
    """A run configuration is malformed; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class PreconditionError(RobinLapError, ValueError):
    """Input lies outside the regime where a check is defined."""


class SupportError(RobinLapError, ValueError):
    """A manufactured profile has not decayed at the artificial walls."""
