"""Exception hierarchy shared by the solver modules."""


class StgWaveError(Exception):
    pass


class ConfigurationError(StgWaveError, ValueError):
    """Invalid parameters (exponent schedule, grid sizes, study setup)."""


class DomainError(StgWaveError, ValueError):
    """Argument outside the domain where a quantity is defined."""


class UsageError(StgWaveError, ValueError):
    """Inconsistent call: wrong lengths, mismatched grids, missing history."""


class NumericalError(StgWaveError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    ``estimate`` carries the last achieved error estimate when known.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SolverError(NumericalError):
    """Linear solve failed (singular factorization or residual too large)."""


class NewtonDivergenceError(NumericalError):
    """Newton iteration hit its iteration cap."""

    def __init__(self, message, level=None, history=None):
        super().__init__(message, estimate=history[-1] if history else None)
        self.level = level
        self.history = list(history or [])
