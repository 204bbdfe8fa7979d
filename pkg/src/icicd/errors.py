"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class QuadratureError(ArithmeticError):
    """Numerical integration failed to reach the requested tolerance."""


class InsufficientRangeError(ValueError):
    """A curve does not cover enough of the small-threshold regime."""


class InfeasibleError(ValueError):
    """No grid cell satisfies the outage constraint."""
