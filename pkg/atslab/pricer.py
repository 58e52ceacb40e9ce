"""
pricer.py

European options under the ATS model, normalised to F_0 = 1 and B_t = 1.

Prices are the expectation over S_t of the Black-type price conditional on
S_t, integrated against the subordinator law, with a Monte Carlo cross-pricer
on the log-forward. Moneyness is carried as the degree y, x = ln K = y sqrt(t).
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Tuple, Union

import numpy as np
from scipy.special import ndtr

from .ats_model import AtsParams, phi, sample_log_forward
from .errors import DomainError
from .numerics import DEFAULT_TOL, Tolerances, norm_diff, norm_pdf

KINDS = ("call", "put")

SeedLike = Union[int, np.random.SeedSequence, None]


@dataclass(frozen=True)
class OptionSpec:
    """
    A European option on the unit forward.

    Parameters
    ----------
    t : float
        Maturity in years, > 0.
    y : float
        Moneyness degree; log-strike x = y sqrt(t).
    kind : {"call", "put"}
    """

    t: float
    y: float
    kind: str = "call"

    def __post_init__(self):
        if not (self.t > 0.0 and math.isfinite(self.t)):
            raise DomainError(f"[OptionSpec] t must be > 0, got {self.t}")
        if not math.isfinite(self.y):
            raise DomainError(f"[OptionSpec] y must be finite, got {self.y}")
        if self.kind not in KINDS:
            raise DomainError(f"[OptionSpec] kind must be one of {KINDS}, got {self.kind!r}")

    @property
    def x(self) -> float:
        return self.y * math.sqrt(self.t)

    @property
    def strike(self) -> float:
        return math.exp(self.x)

    def with_kind(self, kind: str) -> "OptionSpec":
        return replace(self, kind=kind)


def no_arbitrage_bounds(spec: OptionSpec) -> Tuple[float, float]:
    """(lower, upper) model-free bounds on the option price."""
    k = spec.strike
    if spec.kind == "call":
        return max(1.0 - k, 0.0), 1.0
    return max(k - 1.0, 0.0), k


def black_price(vol: float, spec: OptionSpec) -> float:
    """
    Black price in moneyness-degree coordinates.

    Parameters
    ----------
    vol : float
        Black volatility, > 0.
    spec : OptionSpec

    Returns
    -------
    float
    """
    if not vol > 0.0:
        raise DomainError(f"[black_price] vol must be > 0, got {vol}")
    sqrt_t = math.sqrt(spec.t)
    a = -spec.y / vol + 0.5 * vol * sqrt_t
    b = a - vol * sqrt_t
    k_minus_1 = math.expm1(spec.y * sqrt_t)
    if spec.kind == "call":
        return float(norm_diff(a, b)) - k_minus_1 * float(ndtr(b))
    return float(norm_diff(-b, -a)) + k_minus_1 * float(ndtr(-b))


def _payoff_fn(spec: OptionSpec, params: AtsParams, clip: bool = False) -> Callable:
    """Conditional price as a vectorised function of z, with the t-dependent terms frozen."""
    t = spec.t
    sqrt_t = math.sqrt(t)
    sigma = params.sigma_bar
    eta = params.eta_t(t)
    phi_t = phi(t, params) * t
    k_minus_1 = math.expm1(spec.y * sqrt_t)
    is_call = spec.kind == "call"

    def payoff(z):
        z = np.asarray(z, dtype=float)
        sqrt_z = np.sqrt(z)
        vol = sigma * sqrt_z * sqrt_t
        l = -sigma * eta * sqrt_z * sqrt_t + phi_t / (sigma * sqrt_z * sqrt_t)
        d2 = l - 0.5 * vol - spec.y / (sigma * sqrt_z)
        d1 = d2 + vol
        fwd_minus_1 = np.expm1(phi_t - t * sigma * sigma * eta * z)
        if is_call:
            out = norm_diff(d1, d2) + fwd_minus_1 * ndtr(d1) - k_minus_1 * ndtr(d2)
        else:
            out = norm_diff(-d2, -d1) + k_minus_1 * ndtr(-d2) - fwd_minus_1 * ndtr(-d1)
        if clip:
            out = np.maximum(out, 0.0)
        return out[()] if out.ndim == 0 else out

    return payoff


def l_term(z, t: float, params: AtsParams):
    """l_t^z = -sigma eta_t sqrt(z t) + phi_t sqrt(t) / (sigma sqrt(z))."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr <= 0.0):
        raise DomainError("[l_term] z must be > 0")
    sigma = params.sigma_bar
    out = -sigma * params.eta_t(t) * np.sqrt(z_arr * t) + phi(t, params) * math.sqrt(t) / (sigma * np.sqrt(z_arr))
    return out[()] if out.ndim == 0 else out


def conditional_payoff(z, spec: OptionSpec, params: AtsParams):
    """
    Option price conditional on S_t = z.

    Returns
    -------
    float or numpy.ndarray
        Conditional price, unclipped. It is non-negative up to rounding.

    Raises
    ------
    DomainError
        If any z <= 0.
    """
    if np.any(np.asarray(z) <= 0.0):
        raise DomainError("[conditional_payoff] z must be > 0")
    return _payoff_fn(spec, params)(z)


def price_quadrature(
    spec: OptionSpec,
    params: AtsParams,
    tol: Tolerances = DEFAULT_TOL,
    full_output: bool = False,
):
    """
    Option price as E[conditional_payoff(S_t)].

    The integration is split at z = 1 and at z = phi_t/(sigma^2 eta_t), where
    l_t^z changes sign.

    Returns
    -------
    float or (float, float)
        Price, and the achieved tolerance if ``full_output``.

    Raises
    ------
    QuadratureError
        If the expectation does not converge.
    """
    law = params.law(spec.t, inversion_tol=tol.inversion_tol)
    ratio = phi(spec.t, params) / (params.sigma_bar ** 2 * params.eta_t(spec.t))
    value, err = law.expect(_payoff_fn(spec, params, clip=True), landmarks=(1.0, ratio), tol=tol, full_output=True)
    return (value, err) if full_output else value


def price_mc(
    spec: OptionSpec,
    params: AtsParams,
    paths: int,
    rng_seed: SeedLike = 42,
    shards: int = 1,
) -> Tuple[float, float]:
    """
    Monte Carlo price and standard error.

    Paths are split over ``shards`` child seeds of
    ``numpy.random.SeedSequence(rng_seed).spawn(shards)``, so a given
    (seed, shards) pair is reproducible.
    """
    if paths < 1:
        raise DomainError(f"[price_mc] paths must be >= 1, got {paths}")
    if shards < 1:
        raise DomainError(f"[price_mc] shards must be >= 1, got {shards}")
    k_minus_1 = math.expm1(spec.x)
    sizes = np.full(shards, paths // shards)
    sizes[: paths % shards] += 1
    payoffs = []
    for size, seed in zip(sizes, np.random.SeedSequence(rng_seed).spawn(shards)):
        if size == 0:
            continue
        diff = np.expm1(sample_log_forward(spec.t, params, int(size), seed)) - k_minus_1
        payoffs.append(np.maximum(diff if spec.kind == "call" else -diff, 0.0))
    payoff = np.concatenate(payoffs)
    std_error = float(payoff.std(ddof=1) / math.sqrt(paths)) if paths > 1 else float("nan")
    return float(payoff.mean()), std_error


def martingale_residual(t: float, params: AtsParams, tol: Tolerances = DEFAULT_TOL) -> float:
    """E[exp(f_t)] - 1, by quadrature over S_t."""
    law = params.law(t, inversion_tol=tol.inversion_tol)
    phi_t = phi(t, params) * t
    slope = t * params.sigma_bar ** 2 * params.eta_t(t)
    discount = law.expect(lambda z: np.exp(-slope * np.asarray(z)), landmarks=(1.0,), tol=tol)
    return math.exp(phi_t) * discount - 1.0


def m_function(z, t: float, params: AtsParams):
    """N'(-l_t^z + sigma sqrt(z t)/2) sigma sqrt(z)."""
    z = np.asarray(z, dtype=float)
    sigma = params.sigma_bar
    out = norm_pdf(-l_term(z, t, params) + 0.5 * sigma * np.sqrt(z * t)) * sigma * np.sqrt(z)
    return out[()] if out.ndim == 0 else out
