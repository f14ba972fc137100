"""Exception types raised by the library."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class NotInteger(ValueError):
    """An integer-only code path was given a non-integral shape parameter."""


class NoConvergence(ArithmeticError):
    """A series or iteration did not reach its tolerance."""


class ContourTooShort(ArithmeticError):
    """Bromwich quadrature failed its self-check.

    Enlarge ``ContourSpec.T`` or ``ContourSpec.nodes`` and retry.
    """


class IllConditioned(ArithmeticError):
    """The Prony linear-prediction system has numerical rank below ``M``."""


class FitRangeTooSmall(ValueError):
    """An exponential-sum fit does not cover the range a metric needs."""
