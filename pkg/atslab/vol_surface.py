"""
vol_surface.py

Implied volatility, ATM level and skew of the ATS smile, their short-time
behaviour, and the short-time skew surface of the beta=1, delta=-1/2 model.
"""

import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize
from scipy.special import erf

from .ats_model import AtsParams, phi
from .errors import AtsError, BracketError, DomainError, OutOfBoundsPriceError, WrongRegimeError
from .numerics import (
    DEFAULT_TOL,
    Tolerances,
    aitken,
    loglog_slope,
    norm_diff,
    norm_pdf,
    parallel_starmap,
)
from .pricer import OptionSpec, black_price, no_arbitrage_bounds, price_quadrature
from .subordinator import fractional_moment

SQRT_PI_OVER_2 = math.sqrt(0.5 * math.pi)

VOL_LOW = 1e-8
VOL_HIGH = 5.0
VOL_CEILING = 10.0
FD_STEP_SHORT = 1e-3
FD_SHORT_T = 1e-6

QUANTITIES = ("atm_vol", "skew_term")
# range a short-time limit can take
LIMIT_RANGES = {"atm_vol": (0.0, math.inf), "skew_term": (-SQRT_PI_OVER_2, 0.0)}


@dataclass
class SmilePoint:
    t: float
    y: float
    price: float
    implied_vol: float
    achieved_tol: float


@dataclass
class ExtrapolationResult:
    """
    Short-time behaviour of a quantity sampled at t_k = t0 2^-k.

    ``status`` is one of converging, vanishing, diverging, inconclusive;
    ``limit`` is the Aitken estimate, 0, inf or nan accordingly and ``power``
    the fitted exponent of |value| against t over the shortest half.
    """

    status: str
    limit: float
    power: float
    times: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, object]:
        return {
            "status": self.status,
            "limit": self.limit,
            "power": self.power,
            "times": list(self.times),
            "values": list(self.values),
        }


# ---------------------------------------------------------------------------
# Implied volatility
# ---------------------------------------------------------------------------

def implied_vol(price: float, spec: OptionSpec, tol: Tolerances = DEFAULT_TOL) -> float:
    """
    Black volatility reproducing ``price``.

    The root is bracketed on [1e-8, 5]; the upper end doubles up to 10 and the
    lower end shrinks for prices close to intrinsic value.

    Raises
    ------
    OutOfBoundsPriceError
        If the price is not strictly inside the no-arbitrage bounds.
    BracketError
        If no bracket exists below vol = 10, or the root search does not converge.
    """
    lower, upper = no_arbitrage_bounds(spec)
    if not (lower < price < upper):
        raise OutOfBoundsPriceError(
            f"[implied_vol] price {price!r} outside ({lower!r}, {upper!r}) for {spec}"
        )

    def gap(vol):
        return black_price(vol, spec) - price

    hi = VOL_HIGH
    while gap(hi) < 0.0:
        if hi >= VOL_CEILING:
            raise BracketError(f"[implied_vol] price {price!r} needs vol above {VOL_CEILING} for {spec}")
        hi = min(2.0 * hi, VOL_CEILING)
    lo = VOL_LOW
    while gap(lo) > 0.0:
        lo *= 1e-4
        if lo < 1e-300:
            raise BracketError(f"[implied_vol] price {price!r} too close to intrinsic for {spec}")
    try:
        return optimize.brentq(gap, lo, hi, xtol=tol.vol_xtol, maxiter=500)
    except RuntimeError as e:
        raise BracketError(f"[implied_vol] root search on [{lo!r}, {hi!r}] failed for {spec}: {e}") from e


def _otm_spec(t: float, y: float) -> OptionSpec:
    return OptionSpec(t, y, "call" if y >= 0.0 else "put")


def smile_point(t: float, y: float, params: AtsParams, tol: Tolerances = DEFAULT_TOL) -> SmilePoint:
    """Quadrature price and implied vol of the out-of-the-money option at (t, y)."""
    spec = _otm_spec(t, y)
    price, err = price_quadrature(spec, params, tol, full_output=True)
    vol = implied_vol(price, spec, tol)
    residual = abs(black_price(vol, spec) - price)
    return SmilePoint(t, y, price, vol, max(residual, err))


def smile(
    t_grid: Sequence[float],
    y_grid: Sequence[float],
    params: AtsParams,
    tol: Tolerances = DEFAULT_TOL,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """
    Smile table over the (t, y) grid in t-major order.

    Calls price y >= 0 and puts y < 0. A point that fails keeps NaN price and
    vol and its message in an ``error`` column, added only when needed.
    """
    cells = [(t, y) for t in t_grid for y in y_grid]

    def run(t, y):
        try:
            return asdict(smile_point(t, y, params, tol)), ""
        except (AtsError, RuntimeError) as e:
            warnings.warn("smile point (t={}, y={}) skipped: {}".format(t, y, e))
            return dict(t=t, y=y, price=np.nan, implied_vol=np.nan, achieved_tol=np.nan), str(e)

    results = parallel_starmap(run, cells, threads)
    df = pd.DataFrame([row for row, _ in results], columns=["t", "y", "price", "implied_vol", "achieved_tol"])
    errors = [msg for _, msg in results]
    if any(errors):
        df["error"] = errors
    return df


def atm_vol(t: float, params: AtsParams, tol: Tolerances = DEFAULT_TOL, kind: str = "call") -> float:
    """ATM implied volatility from the quadrature price at y = 0."""
    spec = OptionSpec(t, 0.0, kind)
    return implied_vol(price_quadrature(spec, params, tol), spec, tol)


# ---------------------------------------------------------------------------
# Skew
# ---------------------------------------------------------------------------

def skew_term_closed(t: float, params: AtsParams, tol: Tolerances = DEFAULT_TOL) -> float:
    """
    Skew term dI_t/dy at y = 0 from the ATM vol and one expectation over S_t:

        xi_t = (N(-s) - E[N(l_t^S - sigma sqrt(S t)/2)]) / N'(s),   s = atm_vol sqrt(t)/2
    """
    half = 0.5 * atm_vol(t, params, tol) * math.sqrt(t)
    sigma = params.sigma_bar
    sqrt_t = math.sqrt(t)
    eta = params.eta_t(t)
    phi_t = phi(t, params) * t
    law = params.law(t, inversion_tol=tol.inversion_tol)

    def gap(z):
        sqrt_z = np.sqrt(np.asarray(z, dtype=float))
        l = -sigma * eta * sqrt_z * sqrt_t + phi_t / (sigma * sqrt_z * sqrt_t)
        return norm_diff(-half, l - 0.5 * sigma * sqrt_z * sqrt_t)

    # the numerator vanishes in some regimes, so an absolute floor replaces the relative target
    ratio = phi_t / (t * sigma * sigma * eta)
    numerator = law.expect(gap, landmarks=(1.0, ratio), tol=replace(tol, quad_epsabs=max(tol.quad_epsabs, 1e-12)))
    return numerator / float(norm_pdf(half))


def _fd_derivative(fn: Callable[[float], float], h: float) -> float:
    def central(step):
        return (fn(step) - fn(-step)) / (2.0 * step)

    return (4.0 * central(0.5 * h) - central(h)) / 3.0


def skew_term_fd(
    t: float,
    params: AtsParams,
    h: Optional[float] = None,
    tol: Tolerances = DEFAULT_TOL,
    coords: str = "y",
) -> float:
    """
    Skew by central differences of the smile with one Richardson step.

    Parameters
    ----------
    t : float
        Maturity.
    params : AtsParams
    h : float, optional
        Step in y. Defaults to ``tol.fd_step``, or 1e-3 below t = 1e-6.
    tol : Tolerances
    coords : {"y", "x"}
        "y" gives dI/dy; "x" gives the skew in log-moneyness, dI/dx = (dI/dy)/sqrt(t).
    """
    if coords not in ("y", "x"):
        raise DomainError(f"[skew_term_fd] coords must be 'y' or 'x', got {coords!r}")
    if h is None:
        h = FD_STEP_SHORT if t < FD_SHORT_T else tol.fd_step
    if not h > 0.0:
        raise DomainError(f"[skew_term_fd] h must be > 0, got {h}")

    def vol_at(y):
        spec = _otm_spec(t, y)
        return implied_vol(price_quadrature(spec, params, tol), spec, tol)

    slope = _fd_derivative(vol_at, h)
    return slope / math.sqrt(t) if coords == "x" else slope


def skew_limit_case5(params: AtsParams, tol: Tolerances = DEFAULT_TOL) -> float:
    """
    Short-time skew term for beta = 1, delta = -1/2.

    With S distributed as S_t (whose law does not depend on t when beta = 1),

        xi_0 = -sqrt(pi/2) E[erf(sigma eta (1/sqrt(S) - sqrt(S)) / sqrt(2))]

    Raises
    ------
    WrongRegimeError
        Unless beta == 1 and delta == -0.5.
    """
    if not (params.beta == 1.0 and params.delta == -0.5):
        raise WrongRegimeError(
            f"[skew_limit_case5] needs beta=1, delta=-0.5, got beta={params.beta}, delta={params.delta}"
        )
    scale = params.sigma_bar * params.eta_bar / math.sqrt(2.0)
    law = params.law(1.0, inversion_tol=tol.inversion_tol)

    def integrand(z):
        sqrt_z = np.sqrt(np.asarray(z, dtype=float))
        return erf(scale * (1.0 / sqrt_z - sqrt_z))

    return -SQRT_PI_OVER_2 * law.expect(integrand, landmarks=(1.0,), tol=tol)


def sqrt_moment_limit(params: AtsParams, tol: Tolerances = DEFAULT_TOL) -> float:
    """
    Limit of E[sqrt(S_t)] as t -> 0: 0 for beta < 1, 1 for beta > 1, and for
    beta = 1 the t-independent value E[sqrt(S)] at variance k_bar.
    """
    if params.beta < 1.0:
        return 0.0
    if params.beta > 1.0:
        return 1.0
    return fractional_moment(0.5, params.law(1.0, inversion_tol=tol.inversion_tol), tol)


# ---------------------------------------------------------------------------
# Short-time extrapolation
# ---------------------------------------------------------------------------

def _classify_sequence(
    values: np.ndarray,
    times: np.ndarray,
    tol: Tolerances,
    limit_range: Tuple[float, float] = (-math.inf, math.inf),
) -> ExtrapolationResult:
    mags = np.abs(values)
    tail = max(3, values.size // 2)
    power = loglog_slope(times[-tail:], mags[-tail:]) if np.all(mags[-tail:] > 0.0) else float("nan")
    steps = np.diff(values)
    mag_steps = np.diff(mags)
    shrinking = bool(np.all(mag_steps < 0.0))
    growing = bool(np.all(mag_steps > 0.0))
    monotone = bool(np.all(steps < 0.0) or np.all(steps > 0.0))

    if power > tol.slope_min and (shrinking or mags[-1] < tol.vanish_ratio * mags[0]):
        status, limit = "vanishing", 0.0
    elif power < -tol.slope_min and (growing or mags[-1] > tol.diverge_ratio * mags[0]):
        status, limit = "diverging", math.inf
    elif monotone:
        status, limit = "converging", float(np.clip(aitken(values), *limit_range))
    else:
        status, limit = "inconclusive", math.nan
    return ExtrapolationResult(status, limit, power, times.tolist(), values.tolist())


def short_time_extrapolate(
    params: AtsParams,
    quantity: str = "atm_vol",
    t0: float = 1e-2,
    levels: int = 6,
    tol: Tolerances = DEFAULT_TOL,
) -> ExtrapolationResult:
    """
    Sample ``quantity`` at t_k = t0 2^-k, k = 0..levels-1, and classify the
    sequence as converging (Aitken limit), vanishing or diverging (fitted
    power), or inconclusive. A converging limit is clipped to the range the
    quantity can take: vols are >= 0 and skews lie in [-sqrt(pi/2), 0].
    """
    if quantity not in QUANTITIES:
        raise DomainError(f"[short_time_extrapolate] quantity must be one of {QUANTITIES}, got {quantity!r}")
    if levels < 4:
        raise DomainError(f"[short_time_extrapolate] levels must be >= 4, got {levels}")
    if not t0 > 0.0:
        raise DomainError(f"[short_time_extrapolate] t0 must be > 0, got {t0}")
    fn = atm_vol if quantity == "atm_vol" else skew_term_closed
    times = t0 * 0.5 ** np.arange(levels)
    values = np.array([fn(float(t), params, tol) for t in times])
    return _classify_sequence(values, times, tol, LIMIT_RANGES[quantity])


# ---------------------------------------------------------------------------
# Skew surface
# ---------------------------------------------------------------------------

def _case5_params(alpha: float, k_bar: float, sigma_eta: float) -> AtsParams:
    return AtsParams(alpha=alpha, beta=1.0, delta=-0.5, k_bar=k_bar, eta_bar=sigma_eta, sigma_bar=1.0)


def _surface_point(alpha: float, k_bar: float, sigma_eta: float, tol: Tolerances):
    return skew_limit_case5(_case5_params(alpha, k_bar, sigma_eta), tol)


def skew_surface(
    alpha_list: Sequence[float],
    k_grid: Sequence[float],
    se_grid: Sequence[float],
    tol: Tolerances = DEFAULT_TOL,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """
    Short-time skew xi_0 over alpha x k_bar x sigma_bar*eta_bar.

    Returns
    -------
    pandas.DataFrame
        Columns alpha, k_bar, sigma_eta, xi0 in grid order.
    """
    cells = [(a, k, s) for a in alpha_list for k in k_grid for s in se_grid]
    xi0 = parallel_starmap(_surface_point, [c + (tol,) for c in cells], threads)
    df = pd.DataFrame(cells, columns=["alpha", "k_bar", "sigma_eta"])
    df["xi0"] = xi0
    return df


def skew_sections(
    alpha_list: Sequence[float],
    grid: Sequence[float],
    tol: Tolerances = DEFAULT_TOL,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """
    The two cuts of the surface: k_bar swept at sigma_bar*eta_bar = 1 and
    sigma_bar*eta_bar swept at k_bar = 1.
    """
    cells = [("k_bar", a, g, 1.0) for a in alpha_list for g in grid]
    cells += [("sigma_eta", a, 1.0, g) for a in alpha_list for g in grid]
    xi0 = parallel_starmap(_surface_point, [c[1:] + (tol,) for c in cells], threads)
    df = pd.DataFrame(cells, columns=["section", "alpha", "k_bar", "sigma_eta"])
    df["xi0"] = xi0
    return df


def monotonicity_flags(surface: pd.DataFrame, ripple: float = 1e-6) -> pd.DataFrame:
    """
    Per (alpha, k_bar) row: whether xi0 is nonincreasing in sigma_eta, and per
    (alpha, sigma_eta) column whether it is nonincreasing in k_bar.
    """
    rows = []
    for (alpha, k_bar), grp in surface.groupby(["alpha", "k_bar"], sort=True):
        vals = grp.sort_values("sigma_eta")["xi0"].to_numpy()
        rows.append(dict(alpha=alpha, axis="sigma_eta", at=k_bar, nonincreasing=bool(np.all(np.diff(vals) <= ripple))))
    for (alpha, se), grp in surface.groupby(["alpha", "sigma_eta"], sort=True):
        vals = grp.sort_values("k_bar")["xi0"].to_numpy()
        rows.append(dict(alpha=alpha, axis="k_bar", at=se, nonincreasing=bool(np.all(np.diff(vals) <= ripple))))
    return pd.DataFrame(rows, columns=["alpha", "axis", "at", "nonincreasing"])
