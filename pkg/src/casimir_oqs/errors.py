"""Exception hierarchy shared by all modules."""

__all__ = [
    "CasimirError",
    "DomainError",
    "SingularityError",
    "QuadratureError",
    "RootPolishError",
    "ConfigError",
]


class CasimirError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CasimirError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class SingularityError(CasimirError, ArithmeticError):
    """A denominator vanished on the evaluation contour."""


class RootPolishError(CasimirError, ArithmeticError):
    """Newton polishing of a polynomial root did not reach its residual."""


class ConfigError(CasimirError, ValueError):
    """Invalid run configuration. ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class QuadratureError(CasimirError, RuntimeError):
    """
    Integration or summation did not converge.

    The best available estimate travels with the exception so callers can
    report a partial result.

    Attributes
    ----------
    value : float or ndarray
        Best estimate at the point of failure.
    abs_error : float or ndarray
        Error estimate attached to ``value``.
    evaluations : int
        Number of integrand (or term) evaluations spent.
    partial : object
        Optional higher-level partial result (e.g. a ``ForceResult``).
    """

    def __init__(self, message, value=None, abs_error=None, evaluations=0,
                 partial=None):
        super().__init__(message)
        self.value = value
        self.abs_error = abs_error
        self.evaluations = evaluations
        self.partial = partial
