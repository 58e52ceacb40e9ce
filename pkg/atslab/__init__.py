"""
atslab

Short-time implied volatility of the power-law scaling ATS model: the
subordinator law, option prices, implied volatility and skew, and the
regime classification of the scaling parameters.
"""

from .ats_model import AtsParams, RegimeCase, characteristic_fn, classify, phi, sample_log_forward, validate
from .errors import (
    AtsError,
    BracketError,
    ConfigError,
    DivergenceError,
    DomainError,
    InversionAccuracyError,
    OutOfBoundsPriceError,
    QuadratureError,
    WrongRegimeError,
)
from .numerics import DEFAULT_TOL, Tolerances
from .pricer import OptionSpec, black_price, conditional_payoff, l_term, price_mc, price_quadrature
from .subordinator import SubordinatorLaw
from .vol_surface import (
    SmilePoint,
    atm_vol,
    implied_vol,
    short_time_extrapolate,
    skew_limit_case5,
    skew_surface,
    skew_term_closed,
    skew_term_fd,
)

__version__ = "0.1.0"
