"""
subordinator.py

The positive random variable S_t that time-changes the Brownian part of the
ATS forward: unit mean, variance k_t/t and a tempered-stable Laplace transform

    ln L_t(u) = (t/k_t) (1-a)/a (1 - (1 + u k_t / ((1-a) t))^a)    0 < a < 1
    ln L_t(u) = -(t/k_t) ln(1 + u k_t / t)                           a = 0

For a = 0 the law is Gamma and for a = 1/2 it is Inverse Gaussian, both
handled through scipy. Any other a is tabulated once per (a, t/k_t) by
FFT inversion of the characteristic function L_t(-iu).
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, Optional, Union

import numpy as np
from scipy import integrate, interpolate, special, stats

from .errors import DivergenceError, DomainError, InversionAccuracyError
from .numerics import DEFAULT_TOL, TINY, Tolerances, integrate_checked, ols_slope

EXACT_ALPHAS = (0.0, 0.5)
METHODS = ("auto", "exact", "fourier")

CF_TRUNCATION = 1e-12       # |L_t(-iu)| at which the u-grid stops
TAIL_MASS = 1e-13           # right-tail mass left outside the tabulated support
MIN_FFT_SIZE = 2 ** 12
MAX_FFT_SIZE = 2 ** 22
MAX_TABLE_KNOTS = 2 ** 17
SAMPLER_KNOTS = 4096
SAMPLER_TAIL = 1e-9
DIVERGENCE_MARGIN = 0.1

SeedLike = Union[int, np.random.SeedSequence, None]


# ---------------------------------------------------------------------------
# Laplace transform
# ---------------------------------------------------------------------------

def _log_laplace_raw(u, alpha: float, shape: float):
    """ln L(u) for real or complex u, no domain checks."""
    u = np.asarray(u)
    if alpha == 0.0:
        return -shape * special.log1p(u / shape)
    scale = (1.0 - alpha) * shape
    return -(scale / alpha) * special.expm1(alpha * special.log1p(u / scale))


# ---------------------------------------------------------------------------
# Law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubordinatorLaw:
    """
    Distribution of S_t at a fixed maturity.

    Parameters
    ----------
    alpha : float
        Stability index in [0, 1).
    t : float
        Maturity in years, > 0.
    k_t : float
        Jump-variance scale k_bar * t**beta, > 0.
    method : {"auto", "exact", "fourier"}
        "auto" uses the closed forms for alpha in {0, 1/2} and Fourier
        inversion otherwise; "fourier" forces inversion (used to validate it).
    inversion_tol : float
        Maximum |L_t(-iU)| accepted at the Fourier truncation point U.
    """

    alpha: float
    t: float
    k_t: float
    method: str = "auto"
    inversion_tol: float = DEFAULT_TOL.inversion_tol

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise DomainError(f"[SubordinatorLaw] alpha must lie in [0, 1), got {self.alpha}")
        if not (self.t > 0.0 and np.isfinite(self.t)):
            raise DomainError(f"[SubordinatorLaw] t must be > 0, got {self.t}")
        if not (self.k_t > 0.0 and np.isfinite(self.k_t)):
            raise DomainError(f"[SubordinatorLaw] k_t must be > 0, got {self.k_t}")
        if self.method not in METHODS:
            raise DomainError(f"[SubordinatorLaw] method must be one of {METHODS}, got {self.method!r}")
        if self.method == "exact" and self.alpha not in EXACT_ALPHAS:
            raise DomainError(f"[SubordinatorLaw] no closed form for alpha={self.alpha}")

    @property
    def shape(self) -> float:
        """t / k_t: Gamma shape for alpha=0, IG shape for alpha=1/2."""
        return self.t / self.k_t

    @property
    def variance(self) -> float:
        return self.k_t / self.t

    @property
    def is_exact(self) -> bool:
        return self.method != "fourier" and self.alpha in EXACT_ALPHAS

    def table(self) -> "FourierTable":
        return _fourier_table(self.alpha, self.shape, self.inversion_tol)

    # -- distribution functions ------------------------------------------

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        if not self.is_exact:
            out = self.table().pdf(z)
        elif self.alpha == 0.0:
            out = stats.gamma.pdf(z, self.shape, scale=1.0 / self.shape)
        else:
            out = stats.invgauss.pdf(z, 1.0 / self.shape, scale=self.shape)
        return out[()] if np.ndim(out) == 0 else out

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        if not self.is_exact:
            with np.errstate(divide="ignore"):
                out = np.log(self.table().pdf(z))
        elif self.alpha == 0.0:
            out = stats.gamma.logpdf(z, self.shape, scale=1.0 / self.shape)
        else:
            out = stats.invgauss.logpdf(z, 1.0 / self.shape, scale=self.shape)
        return out[()] if np.ndim(out) == 0 else out

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        if not self.is_exact:
            out = self.table().cdf(z)
        elif self.alpha == 0.0:
            out = special.gammainc(self.shape, self.shape * np.maximum(z, 0.0))
        else:
            out = stats.invgauss.cdf(z, 1.0 / self.shape, scale=self.shape)
        out = np.where(z <= 0.0, 0.0, out)
        return out[()] if out.ndim == 0 else out

    def ppf(self, v):
        v = np.asarray(v, dtype=float)
        if not self.is_exact:
            out = self.table().ppf(v)
        elif self.alpha == 0.0:
            out = special.gammaincinv(self.shape, v) / self.shape
        else:
            out = stats.invgauss.ppf(v, 1.0 / self.shape, scale=self.shape)
        return out[()] if np.ndim(out) == 0 else out

    def expect(
        self,
        fn: Callable[[Any], Any],
        landmarks: Iterable[float] = (),
        tol: Tolerances = DEFAULT_TOL,
        full_output: bool = False,
    ):
        """
        E[fn(S_t)].

        Exact laws are integrated in the probability variable v = F(z), which
        follows the mass however concentrated or spread the law is; the
        landmarks become breakpoints F(landmark). Tabulated laws use Simpson's
        rule on the inversion grid, so ``fn`` must accept arrays there.

        Parameters
        ----------
        fn : callable
            Function of z > 0.
        landmarks : iterable of float
            Points in z where ``fn`` changes behaviour.
        tol : Tolerances
            Quadrature tolerances.
        full_output : bool
            Also return the error estimate.

        Returns
        -------
        float or (float, float)
        """
        if not self.is_exact:
            tab = self.table()
            value = float(integrate.simpson(fn(tab.z) * tab.density, x=tab.z))
            err = tab.mass_defect * float(np.max(np.abs(fn(tab.z[-1:]))))
            return (value, err) if full_output else value

        breaks = [0.5]
        for z in landmarks:
            if z > 0.0 and np.isfinite(z):
                breaks.append(float(self.cdf(z)))

        def integrand(v):
            return float(fn(max(float(self.ppf(v)), TINY)))

        value, err = integrate_checked(integrand, 0.0, 1.0, tol, points=breaks, name="expect")
        return (value, err) if full_output else value

    def inversion_info(self) -> Dict[str, float]:
        """Diagnostics of the Fourier table (empty for closed-form laws)."""
        if self.is_exact:
            return {}
        return dict(self.table().info)


# ---------------------------------------------------------------------------
# Fourier inversion for generic alpha
# ---------------------------------------------------------------------------

class FourierTable:
    """
    Density and CDF of S_t on a uniform z-grid, from a trapezoid rule on the
    u-grid evaluated with one FFT each:

        p(z_j) = (du/pi) Re sum_k w_k phi(u_k) e^{-i u_k z_j}
        F(z_j) = (du/pi) (z_j/2 + Re sum_{k>0} a_k - Re sum_{k>0} a_k e^{-i u_k z_j}),
        a_k = phi(u_k) / (i u_k)

    The CDF form inverts the transform of the indicator of (0, z), so there is
    no principal value at u = 0. Aliasing is controlled by a period of 1.25 times
    a Chernoff bound on the right tail.
    """

    def __init__(self, alpha: float, shape: float, inversion_tol: float):
        self.alpha = alpha
        self.shape = shape
        scale = (1.0 - alpha) * shape

        tilt = 0.9 * scale
        log_mgf = float(_log_laplace_raw(-tilt, alpha, shape))
        z_hi = max((log_mgf - math.log(TAIL_MASS)) / tilt, 1.0 + 12.0 / math.sqrt(shape))
        period = 1.25 * z_hi
        du = 2.0 * math.pi / period

        u_cut = _cf_cutoff(alpha, shape)
        dz_target = 1e-3 * min(1.0, 1.0 / math.sqrt(shape))
        n = max(MIN_FFT_SIZE, _next_pow2(u_cut / du), _next_pow2(period / dz_target))
        capped = n > MAX_FFT_SIZE
        n = min(n, MAX_FFT_SIZE)

        achieved = float(np.abs(np.exp(_log_laplace_raw(np.array(-1j * n * du), alpha, shape))))
        if achieved > inversion_tol:
            raise InversionAccuracyError(
                f"[FourierTable] |phi(U)|={achieved:.3g} exceeds {inversion_tol:.3g} "
                f"at the grid cap (alpha={alpha}, t/k_t={shape})",
                achieved_tol=achieved,
            )
        if capped:
            warnings.warn(
                "Fourier grid capped at {} points for alpha={}, t/k_t={}; |phi(U)|={:.2e}".format(
                    n, alpha, shape, achieved
                )
            )

        u = du * np.arange(n)
        cf = np.exp(_log_laplace_raw(-1j * u, alpha, shape))
        weights = np.ones(n)
        weights[0] = 0.5
        dens = (du / math.pi) * np.fft.fft(weights * cf).real

        a = np.zeros(n, dtype=complex)
        a[1:] = cf[1:] / (1j * u[1:])
        z = np.arange(n) * (period / n)
        cum = (du / math.pi) * (0.5 * z + a.sum().real - np.fft.fft(a).real)

        keep = np.flatnonzero((z > 0.0) & (z <= z_hi))
        stride = max(1, int(math.ceil(keep.size / MAX_TABLE_KNOTS)))
        keep = keep[::stride]

        self.z = z[keep]
        self.density = np.clip(dens[keep], 0.0, None)
        self.cumulative = np.maximum.accumulate(np.clip(cum[keep], 0.0, 1.0))
        self.mass_defect = float(abs(1.0 - self.cumulative[-1]))

        self._pdf = interpolate.PchipInterpolator(self.z, self.density, extrapolate=False)
        self._cdf = interpolate.PchipInterpolator(self.z, self.cumulative, extrapolate=False)
        uniq = np.concatenate(([True], np.diff(self.cumulative) > 0.0))
        self._ppf_v = self.cumulative[uniq]
        self._ppf_z = self.z[uniq]

        self._sampler, sampler_tol = self._build_sampler()
        self.info = {
            "fft_size": float(n),
            "u_max": float(n * du),
            "cf_at_u_max": achieved,
            "z_max": float(z_hi),
            "mass_defect": self.mass_defect,
            "sampling_tol": sampler_tol,
        }

    def pdf(self, z):
        out = self._pdf(np.asarray(z, dtype=float))
        return np.nan_to_num(out, nan=0.0)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        out = self._cdf(z)
        return np.where(z >= self.z[-1], self.cumulative[-1], np.nan_to_num(out, nan=0.0))

    def ppf(self, v):
        return np.interp(np.asarray(v, dtype=float), self._ppf_v, self._ppf_z)

    def _build_sampler(self):
        lo, hi = self.ppf(SAMPLER_TAIL), self.ppf(1.0 - SAMPLER_TAIL)
        zk = np.linspace(lo, hi, SAMPLER_KNOTS)
        vk = np.maximum.accumulate(self.cdf(zk))
        uniq = np.concatenate(([True], np.diff(vk) > 0.0))
        zk, vk = zk[uniq], vk[uniq]
        inverse = interpolate.PchipInterpolator(vk, zk)
        z_mid = 0.5 * (zk[1:] + zk[:-1])
        v_mid = self.cdf(z_mid)
        v_mid = np.clip(v_mid, vk[0], vk[-1])
        err = float(np.max(np.abs(self.cdf(inverse(v_mid)) - v_mid))) if z_mid.size else 0.0
        return (inverse, float(vk[0]), float(vk[-1])), err + 2.0 * SAMPLER_TAIL

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        inverse, v_lo, v_hi = self._sampler
        return inverse(rng.uniform(v_lo, v_hi, size=count))


def _next_pow2(x: float) -> int:
    return 1 << max(0, int(math.ceil(math.log2(max(x, 1.0)))))


def _cf_cutoff(alpha: float, shape: float) -> float:
    """Smallest power-of-two multiple of 1/8 where |L(-iu)| drops below CF_TRUNCATION."""
    u = 0.125
    while u < 1e15:
        if float(_log_laplace_raw(np.array(-1j * u), alpha, shape).real) < math.log(CF_TRUNCATION):
            return u
        u *= 2.0
    return u


@lru_cache(maxsize=64)
def _fourier_table(alpha: float, shape: float, inversion_tol: float) -> FourierTable:
    return FourierTable(alpha, shape, inversion_tol)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def log_laplace(u, law: SubordinatorLaw):
    """
    Log Laplace transform ln L_t(u) of S_t.

    Parameters
    ----------
    u : float, complex or array
        Real u >= 0, or complex u with Re(u) >= 0 (principal branch).
    law : SubordinatorLaw

    Returns
    -------
    float, complex or array
        Value(s) <= 0 for real u.

    Raises
    ------
    DomainError
        If u < 0, Re(u) < 0, or the power's argument would cross its branch cut.
    """
    arr = np.asarray(u)
    if np.iscomplexobj(arr):
        if np.any(arr.real < 0.0):
            raise DomainError("[log_laplace] Re(u) must be >= 0")
        base = 1.0 + arr.real / ((1.0 - law.alpha) * law.shape)
        if np.any(base <= 0.0):
            raise DomainError("[log_laplace] branch cut crossed")
    elif np.any(arr < 0.0):
        raise DomainError(f"[log_laplace] u must be >= 0, got min {np.min(arr)}")
    out = _log_laplace_raw(arr, law.alpha, law.shape)
    return out[()] if np.ndim(out) == 0 else out


def laplace(u, law: SubordinatorLaw):
    """L_t(u) = E[exp(-u S_t)]."""
    return np.exp(log_laplace(u, law))


def cumulant(n: int, law: SubordinatorLaw, u: float = 0.0) -> float:
    """
    n-th cumulant of S_t under the exponential tilt e^{-uS}, i.e. (-1)^n times
    the n-th derivative of ln L_t at u.
    """
    if n < 1 or int(n) != n:
        raise DomainError(f"[cumulant] n must be a positive integer, got {n}")
    a = law.alpha
    c = 1.0 / ((1.0 - a) * law.shape)
    prod = math.prod(j - a for j in range(1, int(n)))
    return law.shape * (1.0 - a) * prod * c ** n * (1.0 + c * u) ** (a - n)


def _tilted_moment(n: int, law: SubordinatorLaw, u: float = 0.0) -> float:
    """E[S^n e^{-uS}] / L_t(u) via the cumulant recursion."""
    kappa = [cumulant(j, law, u) for j in range(1, n + 1)]
    m = [1.0]
    for order in range(1, n + 1):
        m.append(sum(math.comb(order - 1, j - 1) * kappa[j - 1] * m[order - j] for j in range(1, order + 1)))
    return m[n]


def fractional_moment(s: float, law: SubordinatorLaw, tol: Tolerances = DEFAULT_TOL) -> float:
    """
    E[S_t^s] for 0 < s < 1 from

        E[S^s] = 1/Gamma(-s) int_0^inf (L(u) - 1) u^{-s-1} du

    split at u = 1, with L - 1 taken as expm1(ln L).

    Raises
    ------
    DomainError
        If s is outside (0, 1).
    QuadratureError
        If the integral does not converge to tolerance.
    """
    if not (0.0 < s < 1.0):
        raise DomainError(f"[fractional_moment] s must lie in (0, 1), got {s}")

    def integrand(u):
        return math.expm1(float(_log_laplace_raw(u, law.alpha, law.shape))) / u ** (s + 1.0)

    knee = (1.0 - law.alpha) * law.shape
    left, _ = integrate_checked(integrand, 0.0, 1.0, tol, points=[knee], name="fractional_moment")
    right, _ = integrate_checked(integrand, 1.0, np.inf, tol, name="fractional_moment")
    return (left + right) / special.gamma(-s)


def _integrand_tail_slope(n: int, law: SubordinatorLaw) -> float:
    u_hi = 1e8 * max(1.0, 1.0 / law.shape)
    u = np.geomspace(u_hi / 10.0, u_hi, 50)
    log_f = (n - 1) * np.log(u) + _log_laplace_raw(u, law.alpha, law.shape)
    return ols_slope(np.log(u), log_f)


def inverse_moment(n: int, law: SubordinatorLaw, tol: Tolerances = DEFAULT_TOL) -> float:
    """
    E[S_t^{-n}] = Gamma(n)^{-1} int_0^inf u^{n-1} L_t(u) du.

    Divergence is detected from the log-log slope of the integrand over its last
    decade: a slope at or above -1 - 0.1 is treated as non-integrable.

    Raises
    ------
    DomainError
        If n is not a positive integer.
    DivergenceError
        If the integrand tail is not integrable.
    """
    if n < 1 or int(n) != n:
        raise DomainError(f"[inverse_moment] n must be a positive integer, got {n}")
    n = int(n)
    slope = _integrand_tail_slope(n, law)
    if slope >= -1.0 - DIVERGENCE_MARGIN:
        raise DivergenceError(
            f"[inverse_moment] E[S^-{n}] diverges: integrand tail slope {slope:.3f}", exponent=slope
        )

    def integrand(u):
        return u ** (n - 1) * math.exp(float(_log_laplace_raw(u, law.alpha, law.shape)))

    knee = (1.0 - law.alpha) * law.shape
    left, _ = integrate_checked(integrand, 0.0, 1.0, tol, points=[knee], name="inverse_moment")
    right, _ = integrate_checked(integrand, 1.0, np.inf, tol, name="inverse_moment")
    return (left + right) / math.gamma(n)


def moment(s: float, law: SubordinatorLaw, tol: Tolerances = DEFAULT_TOL) -> float:
    """
    E[S_t^s] for any s > 0.

    Fractional orders below one use ``fractional_moment``; integer orders come
    from the cumulants; other orders apply the fractional-moment integral to
    the tilted moment E[S^n e^{-uS}].
    """
    if s <= 0.0:
        raise DomainError(f"[moment] s must be > 0, got {s}")
    if s < 1.0:
        return fractional_moment(s, law, tol)
    n = int(math.floor(s))
    r = s - n
    m_n = _tilted_moment(n, law)
    if r == 0.0:
        return m_n

    def integrand(u):
        tilted = _tilted_moment(n, law, u) * math.exp(float(_log_laplace_raw(u, law.alpha, law.shape)))
        return (tilted - m_n) / u ** (r + 1.0)

    left, _ = integrate_checked(integrand, 0.0, 1.0, tol, name="moment")
    right, _ = integrate_checked(integrand, 1.0, np.inf, tol, name="moment")
    return (left + right) / special.gamma(-r)


def density(z, law: SubordinatorLaw):
    """
    Density of S_t.

    Gamma (shape t/k_t, unit mean) for alpha = 0, Inverse Gaussian (mean 1,
    shape t/k_t) for alpha = 1/2, Fourier inversion otherwise.

    Raises
    ------
    DomainError
        If any z <= 0.
    InversionAccuracyError
        If the inversion cannot reach its truncation tolerance.
    """
    if np.any(np.asarray(z) <= 0.0):
        raise DomainError("[density] z must be > 0")
    return law.pdf(z)


def cdf(z, law: SubordinatorLaw):
    """P(S_t < z); zero for z <= 0."""
    return law.cdf(z)


def cdf_at_offset(law: SubordinatorLaw, offset: float) -> float:
    """P(S_t <= 1 + offset)."""
    return float(law.cdf(1.0 + offset))


def gaussian_cdf_bound(law: SubordinatorLaw) -> float:
    """
    Uniform bound ((2-alpha)/(1-alpha)) sqrt(k_t/t) on the distance between the
    CDF of S_t and the matched Gaussian CDF N((z-1) sqrt(t/k_t)).
    """
    return (2.0 - law.alpha) / (1.0 - law.alpha) * math.sqrt(law.variance)


def _sample_inverse_gaussian(rng: np.random.Generator, shape: float, count: int) -> np.ndarray:
    # Michael-Schucany-Haas with unit mean; the smaller root is written as
    # mu^2 / (larger root) to avoid cancellation for small shapes
    nu = rng.standard_normal(count)
    y = nu * nu
    root = np.sqrt(4.0 * shape * y + y * y)
    x = 1.0 / (1.0 + y / (2.0 * shape) + root / (2.0 * shape))
    u = rng.uniform(size=count)
    return np.where(u <= 1.0 / (1.0 + x), x, 1.0 / x)


def sample(law: SubordinatorLaw, count: int, rng_seed: SeedLike = 42) -> np.ndarray:
    """
    I.i.d. draws of S_t.

    Gamma and Inverse Gaussian laws are sampled exactly; other alphas use
    inverse transform on a monotone-cubic table of the inverted CDF whose
    tolerance is reported by ``law.inversion_info()["sampling_tol"]``.

    Parameters
    ----------
    law : SubordinatorLaw
    count : int
        Number of draws, >= 1.
    rng_seed : int or numpy.random.SeedSequence
        Seed; identical seeds give identical draws.

    Returns
    -------
    numpy.ndarray
        Positive draws.
    """
    if count < 1:
        raise DomainError(f"[sample] count must be >= 1, got {count}")
    rng = np.random.default_rng(rng_seed)
    if not law.is_exact:
        draws = law.table().sample(rng, count)
    elif law.alpha == 0.0:
        draws = rng.gamma(law.shape, 1.0 / law.shape, size=count)
    else:
        draws = _sample_inverse_gaussian(rng, law.shape, count)
    return np.maximum(draws, TINY)
