"""
numerics.py

Shared numerical helpers: tolerance defaults, a checked wrapper around
scipy's adaptive quadrature, cancellation-free normal CDF differences,
log-log slope fits and Aitken acceleration.
"""

from dataclasses import dataclass, fields, replace
from itertools import starmap
from multiprocessing.pool import ThreadPool
from typing import Any, Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import statsmodels.api as sm
from scipy import integrate
from scipy.special import ndtr

from .errors import ConfigError, QuadratureError

SQRT_2PI = float(np.sqrt(2.0 * np.pi))
TINY = float(np.finfo(float).tiny)

# quad reports ier > 0 on harmless roundoff; accept up to this factor above the request
_QUAD_SLACK = 1e3


@dataclass(frozen=True)
class Tolerances:
    """
    Numerical tolerances shared by the pricing and surface routines.

    Parameters
    ----------
    quad_epsrel, quad_epsabs : float
        Relative / absolute targets passed to adaptive quadrature.
    inversion_tol : float
        Maximum modulus of the transform at the Fourier truncation point.
    vol_xtol : float
        Absolute termination tolerance of the implied-vol root finder.
    fd_step : float
        Default finite-difference step in moneyness degree.
    vanish_ratio, diverge_ratio, slope_min : float
        Classification thresholds for short-time extrapolation.
    """

    quad_epsrel: float = 1e-10
    quad_epsabs: float = 1e-14
    inversion_tol: float = 1e-10
    vol_xtol: float = 1e-12
    fd_step: float = 1e-4
    vanish_ratio: float = 0.02
    diverge_ratio: float = 50.0
    slope_min: float = 0.1

    @classmethod
    def from_mapping(cls, values: Optional[Dict[str, Any]]) -> "Tolerances":
        """Build from a (possibly partial) mapping, rejecting unknown or non-positive entries."""
        if not values:
            return cls()
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError("[tolerances] unknown keys: {}".format(sorted(unknown)))
        clean = {}
        for key, val in values.items():
            try:
                val = float(val)
            except (TypeError, ValueError):
                raise ConfigError(f"[tolerances] {key} must be a number, got {val!r}")
            if not np.isfinite(val) or val <= 0:
                raise ConfigError(f"[tolerances] {key} must be > 0, got {val}")
            clean[key] = val
        return replace(cls(), **clean)


DEFAULT_TOL = Tolerances()


def integrate_checked(
    fn: Callable[[float], float],
    a: float,
    b: float,
    tol: Tolerances = DEFAULT_TOL,
    points: Optional[Iterable[float]] = None,
    limit: int = 400,
    name: str = "quad",
) -> Tuple[float, float]:
    """
    Adaptive quadrature of ``fn`` over [a, b] with a convergence check.

    Parameters
    ----------
    fn : callable
        Scalar integrand.
    a, b : float
        Integration limits (``b`` may be ``np.inf``).
    tol : Tolerances
        Supplies ``quad_epsrel`` and ``quad_epsabs``.
    points : iterable of float, optional
        Interior breakpoints, only for finite intervals.
    limit : int
        Maximum number of subintervals.
    name : str
        Operation name used in error messages.

    Returns
    -------
    (float, float)
        Integral estimate and its error estimate.

    Raises
    ------
    QuadratureError
        If the error estimate exceeds the accepted level.
    """
    kwargs = dict(epsabs=tol.quad_epsabs, epsrel=tol.quad_epsrel, limit=limit, full_output=1)
    if points is not None:
        pts = sorted({float(p) for p in points if a < p < b})
        if pts:
            kwargs["points"] = pts
    res = integrate.quad(fn, a, b, **kwargs)
    value, abserr = float(res[0]), float(res[1])
    if not np.isfinite(value):
        raise QuadratureError(f"[{name}] non-finite value on [{a}, {b}]", value=value, achieved_tol=abserr)
    if len(res) > 3:
        accepted = _QUAD_SLACK * max(tol.quad_epsabs, tol.quad_epsrel * abs(value))
        if abserr > accepted:
            raise QuadratureError(
                f"[{name}] no convergence on [{a}, {b}]: {res[3]}",
                value=value,
                achieved_tol=abserr,
            )
    return value, abserr


def norm_pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT_2PI


def norm_diff(a, b):
    """
    N(a) - N(b) without catastrophic cancellation.

    Close arguments use a third-order expansion around the midpoint; arguments
    in the right tail are differenced through the survival function.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        d = a - b
        m = 0.5 * (a + b)
        close = norm_pdf(m) * d * (1.0 + d * d * (m * m - 1.0) / 24.0)
        right = ndtr(-b) - ndtr(-a)
        left = ndtr(a) - ndtr(b)
        out = np.where(np.abs(d) < 1e-5, close, np.where(np.minimum(a, b) > 0.0, right, left))
    return out[()] if out.ndim == 0 else out


def ols_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Slope of the OLS line through (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fit = sm.OLS(y, sm.add_constant(x)).fit()
    return float(fit.params[1])


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """
    OLS slope of log|y| against log x.

    Parameters
    ----------
    x, y : sequence of float
        Positive abscissae and nonzero ordinates.

    Returns
    -------
    float
        Fitted exponent p in |y| ~ C x^p.
    """
    return ols_slope(np.log(np.asarray(x, dtype=float)), np.log(np.abs(np.asarray(y, dtype=float))))


def aitken(values: Sequence[float]) -> float:
    """
    Aitken delta-squared estimate of the limit of a sequence.

    Uses the last three terms; falls back to the last term unless the steps
    contract with ratio in (0, 1).
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return float(v[-1])
    x0, x1, x2 = v[-3], v[-2], v[-1]
    denom = x2 - 2.0 * x1 + x0
    if x1 == x0 or not np.isfinite(denom):
        return float(x2)
    ratio = (x2 - x1) / (x1 - x0)
    if not 0.0 < ratio < 1.0:
        return float(x2)
    return float(x2 - (x2 - x1) ** 2 / denom)


def parallel_starmap(fn: Callable[..., Any], arg_tuples: Iterable[tuple], threads: Optional[int] = None) -> list:
    """
    ``[fn(*args) for args in arg_tuples]`` on a thread pool, results in input order.

    ``threads=None`` uses one worker per CPU; ``threads=1`` runs inline.
    """
    arg_tuples = list(arg_tuples)
    if threads == 1 or len(arg_tuples) <= 1:
        return list(starmap(fn, arg_tuples))
    with ThreadPool(processes=threads) as pool:
        return pool.starmap(fn, arg_tuples)
