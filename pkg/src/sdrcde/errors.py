"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class DataError(ValueError):
    """A data file is malformed or contains invalid values."""


class SolverError(RuntimeError):
    """A linear system could not be solved (singular or indefinite)."""


class DegenerateDensityError(RuntimeError):
    """The density normalizer vanished at a query point.

    Carries the offending query so callers can report or substitute a
    fallback.
    """

    def __init__(self, message, query=None):
        super().__init__(message)
        self.query = query


class OptimizerStalledError(RuntimeError):
    """Every restart failed to make progress on its very first step.

    ``diagnostics`` holds per-restart gradient norms and objective values.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
