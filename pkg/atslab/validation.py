"""
validation.py

Property suite run by ``atslab validate``: martingale condition, put-call
parity, Monte Carlo against quadrature, the Gaussian CDF bound, characteristic
function against samples, implied-vol round trip, and the subordinator and
drift inequalities. Each check returns a record

    {name, status, observed, bound, tolerance}

with status "pass", "fail" or "error".
"""

import math
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy.special import ndtr

from .ats_model import AtsParams, characteristic_fn, drift_ratio, sample_log_forward, validate
from .errors import AtsError
from .numerics import DEFAULT_TOL, Tolerances
from .pricer import OptionSpec, black_price, conditional_payoff, martingale_residual, price_mc, price_quadrature
from .subordinator import SubordinatorLaw, cdf, fractional_moment, gaussian_cdf_bound, laplace
from .vol_surface import implied_vol, sqrt_moment_limit

# Global verbosity setting
VERBOSE = 1


def _vprint(level: int, msg: str):
    """Print message to stderr if verbosity level is sufficient"""
    if VERBOSE >= level:
        print(msg, file=sys.stderr)


PAYOFF_ROUNDOFF = 1e-15     # cancellation in the unclipped conditional price

CASE5 = AtsParams(alpha=0.0, beta=1.0, delta=-0.5, k_bar=1.0, eta_bar=1.0, sigma_bar=0.2)


def _record(name: str, observed: float, bound: float, tolerance: float, passed: bool) -> Dict[str, Any]:
    return {
        "name": name,
        "status": "pass" if passed else "fail",
        "observed": float(observed),
        "bound": float(bound),
        "tolerance": float(tolerance),
    }


def random_admissible_params(count: int, rng_seed: int = 42) -> List[AtsParams]:
    """Draw admissible parameter sets uniformly over a box, rejecting outside the region."""
    rng = np.random.default_rng(rng_seed)
    out = []
    while len(out) < count:
        alpha = float(rng.choice([0.0, 0.5]))
        params = AtsParams(
            alpha=alpha,
            beta=float(rng.uniform(0.0, 1.6)),
            delta=float(rng.uniform(-0.9, 0.0)),
            k_bar=float(rng.uniform(0.2, 2.0)),
            eta_bar=float(rng.uniform(0.2, 3.0)),
            sigma_bar=float(rng.uniform(0.1, 0.5)),
        )
        if validate(params).ok:
            out.append(params)
    return out


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_martingale(tol: Tolerances = DEFAULT_TOL, rng_seed: int = 42, n_params: int = 20) -> Dict[str, Any]:
    worst = 0.0
    for params in random_admissible_params(n_params, rng_seed):
        for t in (1e-3, 1e-1, 1.0):
            worst = max(worst, abs(martingale_residual(t, params, tol)))
    return _record("martingale", worst, 1e-8, tol.quad_epsrel, worst < 1e-8)


def check_put_call_parity(tol: Tolerances = DEFAULT_TOL) -> Dict[str, Any]:
    worst = 0.0
    for t in (1e-3, 1e-2, 0.1, 1.0):
        for y in (-1.0, -0.25, 0.0, 0.25, 1.0):
            spec = OptionSpec(t, y, "call")
            call = price_quadrature(spec, CASE5, tol)
            put = price_quadrature(spec.with_kind("put"), CASE5, tol)
            worst = max(worst, abs(call - put + math.expm1(spec.x)))
    return _record("put_call_parity", worst, 1e-9, tol.quad_epsrel, worst < 1e-9)


def check_mc_vs_quadrature(tol: Tolerances = DEFAULT_TOL, rng_seed: int = 42, paths: int = 10 ** 6) -> Dict[str, Any]:
    spec = OptionSpec(0.1, 0.0, "call")
    reference = price_quadrature(spec, CASE5, tol)
    price, std_error = price_mc(spec, CASE5, paths, rng_seed)
    z_score = abs(price - reference) / std_error
    return _record("mc_vs_quadrature", z_score, 3.0, std_error, z_score < 3.0)


def check_gaussian_cdf_bound(tol: Tolerances = DEFAULT_TOL, k_bar: float = 0.05) -> Dict[str, Any]:
    """Largest ratio of sup|F(z) - N((z-1)/sd)| to its bound over the alpha, beta, t grid."""
    worst = 0.0
    for alpha in (0.0, 0.5):
        for beta in (1.0, 1.5):
            for t in (1e-1, 1e-2, 1e-3):
                law = SubordinatorLaw(alpha, t, k_bar * t ** beta, inversion_tol=tol.inversion_tol)
                sd = math.sqrt(law.variance)
                z = np.linspace(max(1.0 - 6.0 * sd, 1e-6), 1.0 + 6.0 * sd, 512)
                gap = float(np.max(np.abs(cdf(z, law) - ndtr((z - 1.0) / sd))))
                worst = max(worst, gap / gaussian_cdf_bound(law))
    return _record("gaussian_cdf_bound", worst, 1.0, 0.0, worst <= 1.0)


def check_characteristic_fn(rng_seed: int = 42, count: int = 10 ** 5) -> Dict[str, Any]:
    """Largest |analytic - empirical| characteristic function, in units of 1/sqrt(count)."""
    worst = 0.0
    u = np.array([-5.0, -1.0, 0.5, 2.0, 10.0])
    for i, t in enumerate((1e-2, 1e-1, 1.0)):
        f = sample_log_forward(t, CASE5, count, rng_seed + i)
        empirical = np.exp(1j * np.outer(u, f)).mean(axis=1)
        worst = max(worst, float(np.max(np.abs(characteristic_fn(u, t, CASE5) - empirical))) * math.sqrt(count))
    return _record("characteristic_fn", worst, 4.0, 1.0 / math.sqrt(count), worst < 4.0)


def check_implied_vol_roundtrip(tol: Tolerances = DEFAULT_TOL, rng_seed: int = 42, count: int = 1000) -> Dict[str, Any]:
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    for vol, t, y in zip(rng.uniform(0.1, 0.8, count), rng.uniform(0.01, 2.0, count), rng.uniform(-0.5, 0.5, count)):
        spec = OptionSpec(float(t), float(y), "call" if y >= 0.0 else "put")
        worst = max(worst, abs(implied_vol(black_price(float(vol), spec), spec, tol) - vol))
    return _record("implied_vol_roundtrip", worst, 1e-9, tol.vol_xtol, worst < 1e-9)


def check_payoff_nonnegative(rng_seed: int = 42, n_params: int = 20) -> Dict[str, Any]:
    z = np.geomspace(1e-6, 1e3, 200)
    worst = math.inf
    for params in random_admissible_params(n_params, rng_seed):
        for kind in ("call", "put"):
            for y in (-1.0, 0.0, 1.0):
                worst = min(worst, float(np.min(conditional_payoff(z, OptionSpec(0.01, y, kind), params))))
    return _record("conditional_payoff_nonnegative", worst, 0.0, PAYOFF_ROUNDOFF, worst >= -PAYOFF_ROUNDOFF)


def check_laplace_bound() -> Dict[str, Any]:
    """1 - L(u) <= 1 - exp(-c u) for c in {1, 2}; reported as the largest excess."""
    u = np.linspace(0.0, 50.0, 201)
    worst = -math.inf
    for alpha in (0.0, 0.3, 0.5, 0.8):
        for shape in (0.1, 1.0, 10.0):
            law = SubordinatorLaw(alpha, shape, 1.0)
            one_minus_l = -np.expm1(np.log(laplace(u, law)))
            for c in (1.0, 2.0):
                worst = max(worst, float(np.max(one_minus_l + np.expm1(-c * u))))
    return _record("laplace_bound", worst, 0.0, 1e-14, worst <= 1e-14)


def check_laplace_monotone_in_t() -> Dict[str, Any]:
    """For beta >= 1, L_t(u) is nondecreasing in t at fixed u."""
    u = np.array([0.1, 1.0, 10.0])
    t = np.geomspace(1e-4, 1.0, 20)
    worst = -math.inf
    for alpha in (0.0, 0.5):
        for beta in (1.0, 1.5):
            values = np.array([laplace(u, SubordinatorLaw(alpha, s, s ** beta)) for s in t])
            worst = max(worst, float(np.max(values[:-1] - values[1:])))
    return _record("laplace_monotone_in_t", worst, 0.0, 1e-14, worst <= 1e-14)


def check_drift_ratio(rng_seed: int = 42, n_params: int = 20) -> Dict[str, Any]:
    worst = -math.inf
    for params in random_admissible_params(n_params, rng_seed):
        for t in np.geomspace(1e-8, 1.0, 17):
            worst = max(worst, drift_ratio(float(t), params))
    return _record("drift_ratio_bound", worst, 1.0, 1e-12, worst <= 1.0 + 1e-12)


def check_sqrt_moment(tol: Tolerances = DEFAULT_TOL) -> Dict[str, Any]:
    """
    E[sqrt(S_t)] stays in [0, sqrt(2)] and approaches 0, 1 and the beta = 1
    constant at t = 1e-12; observed is the largest deviation from the limit.
    """
    worst = 0.0
    in_range = True
    for alpha in (0.0, 0.5):
        for beta in (0.5, 1.0, 1.5):
            params = AtsParams(alpha=alpha, beta=beta, delta=0.0, k_bar=1.0, eta_bar=1.0, sigma_bar=0.2)
            value = fractional_moment(0.5, params.law(1e-12), tol)
            in_range = in_range and 0.0 <= value <= math.sqrt(2.0)
            worst = max(worst, abs(value - sqrt_moment_limit(params, tol)))
    return _record("sqrt_moment_limits", worst, 0.05, 0.05, in_range and worst < 0.05)


def check_density_sign() -> Dict[str, Any]:
    """p(z) > p(1/z)/z^2 on (0, 1), compared on a log scale."""
    z = np.linspace(0.02, 0.98, 49)
    worst = math.inf
    for alpha in (0.0, 0.5):
        for k_bar in (0.5, 1.0, 2.0):
            law = SubordinatorLaw(alpha, 1.0, k_bar)
            gap = law.logpdf(z) - law.logpdf(1.0 / z) + 2.0 * np.log(z)
            worst = min(worst, float(np.min(gap)))
    return _record("density_sign", worst, 0.0, 0.0, worst > 0.0)


CHECKS: Dict[str, Callable[[Tolerances, int, int], Dict[str, Any]]] = {
    "martingale": lambda tol, seed, paths: check_martingale(tol, seed),
    "put_call_parity": lambda tol, seed, paths: check_put_call_parity(tol),
    "mc_vs_quadrature": lambda tol, seed, paths: check_mc_vs_quadrature(tol, seed, paths),
    "gaussian_cdf_bound": lambda tol, seed, paths: check_gaussian_cdf_bound(tol),
    "characteristic_fn": lambda tol, seed, paths: check_characteristic_fn(seed),
    "implied_vol_roundtrip": lambda tol, seed, paths: check_implied_vol_roundtrip(tol, seed),
    "conditional_payoff_nonnegative": lambda tol, seed, paths: check_payoff_nonnegative(seed),
    "laplace_bound": lambda tol, seed, paths: check_laplace_bound(),
    "laplace_monotone_in_t": lambda tol, seed, paths: check_laplace_monotone_in_t(),
    "drift_ratio_bound": lambda tol, seed, paths: check_drift_ratio(seed),
    "sqrt_moment_limits": lambda tol, seed, paths: check_sqrt_moment(tol),
    "density_sign": lambda tol, seed, paths: check_density_sign(),
}


def run_suite(
    tol: Tolerances = DEFAULT_TOL,
    rng_seed: int = 42,
    mc_paths: int = 10 ** 6,
    only: Optional[List[str]] = None,
) -> List[Dict[str, Any]]:
    """
    Run the property checks in a fixed order.

    A check that raises an AtsError is recorded with status "error" and the
    message in ``observed``'s place; the remaining checks still run.
    """
    names = list(CHECKS) if only is None else only
    report = []
    for name in names:
        _vprint(1, f"   Running {name}...")
        try:
            record = CHECKS[name](tol, rng_seed, mc_paths)
        except AtsError as e:
            print(f"Could not run check {name}: {e}", file=sys.stderr)
            record = {"name": name, "status": "error", "observed": None, "bound": None, "tolerance": None, "message": str(e)}
        _vprint(1, f"   {name}: {record['status']} (observed={record['observed']}, bound={record['bound']})")
        report.append(record)
    return report
