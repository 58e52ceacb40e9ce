"""
ats_model.py

Power-law scaling ATS model: parameters, admissible region, regime
classification, martingale drift, characteristic function and sampling of
the log-forward

    f_t = -(eta_t + 1/2) sigma^2 S_t t + sigma sqrt(S_t t) g + phi_t t

with k_t = k_bar t^beta and eta_t = eta_bar t^delta.
"""

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from .errors import ConfigError, DomainError
from .numerics import DEFAULT_TOL
from .subordinator import SubordinatorLaw, log_laplace, sample

BETA_SLACK = 1e-12

CASE_TAGS = ("Case1", "Case2", "Case3", "Case4", "Case5")
INADMISSIBLE = "Inadmissible"

SeedLike = Union[int, np.random.SeedSequence, None]


@dataclass(frozen=True)
class AtsParams:
    """
    The six scaling parameters of the model.

    Parameters
    ----------
    alpha : float
        Stability index in [0, 1).
    beta, delta : float
        Time-scaling exponents of k_t and eta_t.
    k_bar, eta_bar, sigma_bar : float
        Positive scale parameters.
    """

    alpha: float
    beta: float
    delta: float
    k_bar: float
    eta_bar: float
    sigma_bar: float

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not isinstance(val, (int, float)) or not math.isfinite(val):
                raise DomainError(f"[AtsParams] {f.name} must be a finite number, got {val!r}")
        if not (0.0 <= self.alpha < 1.0):
            raise DomainError(f"[AtsParams] alpha must lie in [0, 1), got {self.alpha}")
        for name in ("k_bar", "eta_bar", "sigma_bar"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"[AtsParams] {name} must be > 0, got {getattr(self, name)}")

    def k_t(self, t: float) -> float:
        return self.k_bar * t ** self.beta

    def eta_t(self, t: float) -> float:
        return self.eta_bar * t ** self.delta

    def law(self, t: float, method: str = "auto", inversion_tol: float = DEFAULT_TOL.inversion_tol) -> SubordinatorLaw:
        """Law of S_t at maturity t."""
        if t <= 0.0:
            raise DomainError(f"[AtsParams.law] t must be > 0, got {t}")
        return SubordinatorLaw(self.alpha, t, self.k_t(t), method=method, inversion_tol=inversion_tol)

    def to_dict(self) -> Dict[str, float]:
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "AtsParams":
        """Build from the flat mapping written by ``to_dict``."""
        names = [f.name for f in fields(cls)]
        missing = [n for n in names if n not in values]
        if missing:
            raise ConfigError(f"[AtsParams] missing keys: {missing}")
        unknown = sorted(set(values) - set(names))
        if unknown:
            raise ConfigError(f"[AtsParams] unknown keys: {unknown}")
        try:
            return cls(**{n: float(values[n]) for n in names})
        except (TypeError, ValueError) as e:
            raise ConfigError(f"[AtsParams] {e}") from e

    def with_(self, **changes) -> "AtsParams":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# Regimes
# ---------------------------------------------------------------------------

_PREDICTIONS = {
    "Case1": ("zero", "not_applicable", "σ̂₀ = 0"),
    "Case2": ("infinite", "not_applicable", "σ̂₀ = ∞"),
    "Case3": ("finite", "zero", "σ̂₀ finite, ξ̂₀ = 0"),
    "Case4": ("finite", "minus_sqrt_pi_over_2", "σ̂₀ finite, ξ̂₀ = −√(π/2)"),
    "Case5": ("finite", "negative_finite", "σ̂₀ finite, ξ̂₀ negative finite"),
    INADMISSIBLE: ("not_applicable", "not_applicable", "outside the admissible region"),
}


@dataclass(frozen=True)
class RegimeCase:
    """A regime tag with its short-time predictions for the ATM vol and the skew term."""

    tag: str
    predicted_sigma0: str
    predicted_xi0: str

    @classmethod
    def from_tag(cls, tag: str) -> "RegimeCase":
        if tag not in _PREDICTIONS:
            raise DomainError(f"[RegimeCase] unknown tag {tag!r}")
        sigma0, xi0, _ = _PREDICTIONS[tag]
        return cls(tag, sigma0, xi0)

    @property
    def admissible(self) -> bool:
        return self.tag != INADMISSIBLE

    def describe(self) -> str:
        return "{}: {}".format(self.tag, _PREDICTIONS[self.tag][2])


@dataclass
class AdmissibilityReport:
    ok: bool
    violations: List[str] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)


def admissible_beta_max(alpha: float) -> float:
    """Largest admissible beta, 1/(1 - alpha/2)."""
    return 1.0 / (1.0 - 0.5 * alpha)


def _delta_floor(alpha: float, beta: float) -> float:
    """min(beta, (1 - beta(1-alpha))/alpha); delta must lie strictly above its negative."""
    if alpha == 0.0:
        return beta
    return min(beta, (1.0 - beta * (1.0 - alpha)) / alpha)


def validate(params: AtsParams) -> AdmissibilityReport:
    """
    Check (beta, delta) against the admissible region of the model.

    Either beta = delta = 0, or 0 <= beta <= 1/(1 - alpha/2) and
    -min(beta, (1 - beta(1-alpha))/alpha) < delta <= 0.

    Returns
    -------
    AdmissibilityReport
        ``ok`` plus the names of the violated conditions.
    """
    a, b, d = params.alpha, params.beta, params.delta
    report = AdmissibilityReport(ok=True)
    if b == 0.0 and d == 0.0:
        return report

    b_max = admissible_beta_max(a)
    if not (0.0 <= b <= b_max + BETA_SLACK):
        report.violations.append(f"beta_range: beta={b} outside [0, {b_max:.12g}]")
    floor = _delta_floor(a, b)
    if not (-floor < d <= 0.0):
        report.violations.append(f"delta_range: delta={d} not in (-{floor:.12g}, 0]")
    if b == 0.0 and d < 0.0:
        report.flags.append("beta=0 with delta<0 is not covered by the admissible region")
    report.ok = not report.violations
    return report


def case_memberships(params: AtsParams) -> List[str]:
    """Every regime whose set definition contains (alpha, beta, delta)."""
    a, b, d = params.alpha, params.beta, params.delta
    floor = _delta_floor(a, b)
    out = []
    if (b == 0.0 and d == 0.0) or (b < 1.0 and -min(0.5, b) < d <= 0.0):
        out.append("Case1")
    if -floor < d < -0.5 * max(b, 1.0):
        out.append("Case2")
    if b >= 1.0 and -0.5 * b <= d <= 0.0 and not (b == 1.0 and d == -0.5):
        out.append("Case3")
    if b < 1.0 and d == -0.5:
        out.append("Case4")
    if b == 1.0 and d == -0.5:
        out.append("Case5")
    return out


def classify(params: AtsParams) -> RegimeCase:
    """
    Regime of the parameters, with exact comparisons on the boundaries.

    Returns
    -------
    RegimeCase
        Inadmissible when ``validate`` fails, otherwise the unique Case.
    """
    if not validate(params).ok:
        return RegimeCase.from_tag(INADMISSIBLE)
    members = case_memberships(params)
    return RegimeCase.from_tag(members[0] if members else INADMISSIBLE)


def regime_region(alpha_list: Sequence[float], beta_grid: Sequence[float], delta_grid: Sequence[float]) -> pd.DataFrame:
    """
    Case of every (alpha, beta, delta) grid point, alpha-major then beta then delta.

    Only the scaling exponents matter for the regime, so the scale parameters
    are fixed at one.

    Returns
    -------
    pandas.DataFrame
        Columns alpha, beta, delta, case, admissible.
    """
    rows = []
    for alpha in alpha_list:
        for beta in beta_grid:
            for delta in delta_grid:
                params = AtsParams(alpha=alpha, beta=beta, delta=delta, k_bar=1.0, eta_bar=1.0, sigma_bar=1.0)
                case = classify(params)
                rows.append((alpha, beta, delta, case.tag, case.admissible))
    return pd.DataFrame(rows, columns=["alpha", "beta", "delta", "case", "admissible"])


# ---------------------------------------------------------------------------
# Drift and characteristic function
# ---------------------------------------------------------------------------

def phi(t: float, params: AtsParams) -> float:
    """Per-unit-time drift phi_t = -ln L_t(t sigma^2 eta_t) / t."""
    if t <= 0.0:
        raise DomainError(f"[phi] t must be > 0, got {t}")
    u = t * params.sigma_bar ** 2 * params.eta_t(t)
    return -float(log_laplace(u, params.law(t))) / t


def drift_ratio(t: float, params: AtsParams) -> float:
    """phi_t / (sigma^2 eta_t), never above one."""
    return phi(t, params) / (params.sigma_bar ** 2 * params.eta_t(t))


def phi_expansion(t: float, params: AtsParams) -> float:
    """Two-term small-time expansion of phi_t t."""
    s2, eta, k = params.sigma_bar ** 2, params.eta_t(t), params.k_t(t)
    return t * s2 * eta - 0.5 * t * s2 * s2 * eta * eta * k


def characteristic_fn(u, t: float, params: AtsParams):
    """
    E[exp(i u f_t)].

    Parameters
    ----------
    u : float, complex or array
        Real u gives the characteristic function; u = -1j gives E[exp(f_t)].
    t : float
        Maturity, > 0.
    params : AtsParams

    Returns
    -------
    complex or numpy.ndarray
    """
    law = params.law(t)
    s2, eta = params.sigma_bar ** 2, params.eta_t(t)
    u = np.asarray(u, dtype=complex)
    w = 1j * u * t * (0.5 + eta) * s2 + 0.5 * t * u * u * s2
    out = np.exp(log_laplace(w, law) + 1j * u * phi(t, params) * t)
    return out[()] if np.ndim(out) == 0 else out


def sample_log_forward(t: float, params: AtsParams, count: int, rng_seed: SeedLike = 42) -> np.ndarray:
    """
    I.i.d. draws of f_t from S_t and an independent standard normal.

    The seed is split into two children: the first drives S_t, the second the
    normals.
    """
    if count < 1:
        raise DomainError(f"[sample_log_forward] count must be >= 1, got {count}")
    seq = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    seed_s, seed_g = seq.spawn(2)
    s = sample(params.law(t), count, seed_s)
    g = np.random.default_rng(seed_g).standard_normal(count)
    s2, eta = params.sigma_bar ** 2, params.eta_t(t)
    return -(eta + 0.5) * s2 * s * t + params.sigma_bar * np.sqrt(s * t) * g + phi(t, params) * t
