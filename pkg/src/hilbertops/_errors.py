"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class DivergentIntegralError(ArithmeticError):
    """An integral, series or measure involved in the computation is infinite."""


class NonConvergenceError(ArithmeticError):
    """An iterative scheme exhausted its budget before meeting its tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
