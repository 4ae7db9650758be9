"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented domain constraint (CLI exit code 2)."""


class NumericalError(RuntimeError):
    """An iterative numerical procedure failed to converge (CLI exit code 3)."""
