"""
errors.py

Error hierarchy for atslab.

Every error derives from AtsError and from the closest builtin, so callers can
catch either ``AtsError`` or e.g. ``ValueError``.
"""

from typing import Optional


class AtsError(Exception):
    """Base class for all atslab errors."""


class DomainError(AtsError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(AtsError, ValueError):
    """A configuration file or command-line value is malformed."""


class WrongRegimeError(AtsError, ValueError):
    """An operation was asked for outside the parameter regime it covers."""


class OutOfBoundsPriceError(AtsError, ValueError):
    """A price lies on or outside the no-arbitrage bounds."""


class BracketError(AtsError, RuntimeError):
    """The implied-volatility root could not be bracketed."""


class QuadratureError(AtsError, ArithmeticError):
    """
    Adaptive quadrature failed to reach the requested tolerance.

    Attributes
    ----------
    value : float
        Best estimate returned by the integrator.
    achieved_tol : float
        Error estimate reported by the integrator.
    """

    def __init__(self, message: str, value: float = float("nan"), achieved_tol: float = float("inf")):
        super().__init__(message)
        self.value = value
        self.achieved_tol = achieved_tol


class DivergenceError(AtsError, ArithmeticError):
    """
    An integral representing a moment diverges.

    Attributes
    ----------
    exponent : float
        Fitted log-log slope of the integrand over its last decade.
    """

    def __init__(self, message: str, exponent: Optional[float] = None):
        super().__init__(message)
        self.exponent = exponent


class InversionAccuracyError(AtsError, ArithmeticError):
    """
    Fourier inversion could not meet its truncation tolerance.

    Attributes
    ----------
    achieved_tol : float
        Modulus of the transform at the truncation point.
    """

    def __init__(self, message: str, achieved_tol: float = float("inf")):
        super().__init__(message)
        self.achieved_tol = achieved_tol
