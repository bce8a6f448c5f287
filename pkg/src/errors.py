from typing import Optional


class ParameterError(ValueError):
    """Invalid argument or precondition violation."""


class ConfigError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """Iterative solver hit its iteration cap."""

    def __init__(self, message: str, last_residual: float, iterations: int):
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations


class ConsistencyError(RuntimeError):
    """A discrete identity failed beyond its tolerance budget."""

    def __init__(self, message: str, residual: float, tolerance: Optional[float] = None):
        super().__init__(message)
        self.residual = residual
        self.tolerance = tolerance
