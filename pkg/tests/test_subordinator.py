import math

import numpy as np
import pytest
from scipy import integrate, stats

from atslab.errors import DivergenceError, DomainError
from atslab.subordinator import (
    SubordinatorLaw,
    cdf,
    cdf_at_offset,
    cumulant,
    density,
    fractional_moment,
    gaussian_cdf_bound,
    inverse_moment,
    laplace,
    log_laplace,
    moment,
    sample,
)


@pytest.fixture
def exp_law():
    return SubordinatorLaw(0.0, 1.0, 1.0)


@pytest.fixture
def ig_law():
    return SubordinatorLaw(0.5, 1.0, 1.0)


class TestLaw:
    def test_shape_and_variance(self):
        law = SubordinatorLaw(0.0, 0.5, 0.25)
        assert law.shape == pytest.approx(2.0)
        assert law.variance == pytest.approx(0.5)

    def test_rejects_bad_alpha(self):
        with pytest.raises(DomainError):
            SubordinatorLaw(1.0, 1.0, 1.0)

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(DomainError):
            SubordinatorLaw(0.0, 1.0, 0.0)

    def test_exact_method_needs_closed_form(self):
        with pytest.raises(DomainError):
            SubordinatorLaw(0.3, 1.0, 1.0, method="exact")

    def test_inversion_info_only_for_tables(self, ig_law):
        assert ig_law.inversion_info() == {}
        info = SubordinatorLaw(0.3, 1.0, 1.0).inversion_info()
        assert info["cf_at_u_max"] <= 1e-10
        assert info["fft_size"] >= 2 ** 12


class TestLaplace:
    def test_zero(self, exp_law, ig_law):
        assert log_laplace(0.0, exp_law) == 0.0
        assert log_laplace(0.0, ig_law) == 0.0

    def test_gamma(self, exp_law):
        assert log_laplace(1.0, exp_law) == pytest.approx(-math.log(2.0), rel=1e-14)

    def test_inverse_gaussian(self, ig_law):
        assert log_laplace(1.0, ig_law) == pytest.approx(1.0 - math.sqrt(3.0), rel=1e-14)

    def test_negative_argument(self, exp_law):
        with pytest.raises(DomainError):
            log_laplace(-1.0, exp_law)

    def test_negative_real_part(self, exp_law):
        with pytest.raises(DomainError):
            log_laplace(-0.5 + 1j, exp_law)

    def test_complex_argument_is_bounded(self, ig_law):
        u = 1j * np.linspace(-50.0, 50.0, 101)
        assert np.all(np.abs(laplace(u, ig_law)) <= 1.0 + 1e-15)

    @pytest.mark.parametrize("alpha", [0.0, 0.3, 0.5])
    def test_complex_argument_principal_branch(self, alpha):
        law = SubordinatorLaw(alpha, 0.5, 0.25)
        w = np.array([1e-6 + 0.0j, 0.5 - 3.0j, 2.0 + 40.0j, 1e-12j])
        base = 1.0 + w / ((1.0 - alpha) * law.shape)
        if alpha == 0.0:
            expected = -law.shape * np.log(base)
        else:
            expected = -((1.0 - alpha) * law.shape / alpha) * (base ** alpha - 1.0)
        assert np.allclose(log_laplace(w, law), expected, rtol=1e-12, atol=1e-15)

    def test_matches_expectation_for_generic_alpha(self):
        law = SubordinatorLaw(0.3, 1.0, 1.0)
        numeric = law.expect(lambda z: np.exp(-np.asarray(z)))
        assert numeric == pytest.approx(float(laplace(1.0, law)), abs=1e-6)


class TestCumulants:
    def test_unit_mean(self):
        for alpha in (0.0, 0.3, 0.5):
            assert cumulant(1, SubordinatorLaw(alpha, 0.2, 0.05)) == pytest.approx(1.0)

    def test_variance(self):
        for alpha in (0.0, 0.3, 0.5):
            law = SubordinatorLaw(alpha, 0.2, 0.05)
            assert cumulant(2, law) == pytest.approx(law.variance)

    def test_rejects_fractional_order(self, exp_law):
        with pytest.raises(DomainError):
            cumulant(1.5, exp_law)


class TestMoments:
    def test_fractional_gamma(self, exp_law):
        assert fractional_moment(0.5, exp_law) == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-7)

    def test_fractional_inverse_gaussian(self, ig_law):
        expected, _ = integrate.quad(lambda z: math.sqrt(z) * stats.invgauss.pdf(z, 1.0, scale=1.0), 0.0, np.inf)
        assert fractional_moment(0.5, ig_law) == pytest.approx(expected, rel=1e-7)

    def test_fractional_order_range(self, exp_law):
        with pytest.raises(DomainError):
            fractional_moment(1.0, exp_law)

    def test_sqrt_moment_vanishes_for_small_beta(self):
        values = [fractional_moment(0.5, SubordinatorLaw(0.0, t, t ** 0.5)) for t in (1e-2, 1e-4, 1e-6, 1e-8)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] < 0.1

    def test_inverse_gamma(self):
        assert inverse_moment(1, SubordinatorLaw(0.0, 2.0, 1.0)) == pytest.approx(2.0, rel=1e-8)

    def test_inverse_inverse_gaussian(self, ig_law):
        # E[1/S] = 1/mean + 1/shape
        assert inverse_moment(1, ig_law) == pytest.approx(2.0, rel=1e-8)

    def test_inverse_exponential_diverges(self, exp_law):
        with pytest.raises(DivergenceError) as info:
            inverse_moment(1, exp_law)
        assert info.value.exponent == pytest.approx(-1.0, abs=0.05)

    def test_integer_moment(self):
        law = SubordinatorLaw(0.0, 2.0, 1.0)
        assert moment(2, law) == pytest.approx(1.5)

    def test_non_integer_moment(self):
        law = SubordinatorLaw(0.0, 2.0, 1.0)
        assert moment(1.5, law) == pytest.approx(math.gamma(3.5) / 2.0 ** 1.5, rel=1e-7)

    def test_moment_below_one(self, exp_law):
        assert moment(0.5, exp_law) == pytest.approx(fractional_moment(0.5, exp_law))


class TestDensity:
    def test_exponential(self, exp_law):
        assert density(1.0, exp_law) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_inverse_gaussian(self, ig_law):
        assert density(1.0, ig_law) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-12)

    def test_rejects_nonpositive(self, exp_law):
        with pytest.raises(DomainError):
            density(np.array([0.5, 0.0]), exp_law)

    def test_fourier_matches_inverse_gaussian(self):
        table = SubordinatorLaw(0.5, 1.0, 1.0, method="fourier").table()
        mask = (table.z > 0.2) & (table.z < 3.0)
        exact = stats.invgauss.pdf(table.z[mask], 1.0, scale=1.0)
        assert np.max(np.abs(table.density[mask] - exact)) < 1e-6

    def test_fourier_matches_gamma_cdf(self):
        law = SubordinatorLaw(0.0, 1.0, 0.5, method="fourier")
        z = np.linspace(0.1, 4.0, 40)
        exact = stats.gamma.cdf(z, 2.0, scale=0.5)
        assert np.max(np.abs(law.cdf(z) - exact)) < 1e-6

    def test_generic_alpha_normalised(self):
        law = SubordinatorLaw(0.3, 1.0, 1.0)
        assert law.expect(lambda z: np.ones_like(z)) == pytest.approx(1.0, abs=1e-6)
        assert law.expect(lambda z: z) == pytest.approx(1.0, abs=1e-6)

    def test_exact_laws_normalised(self, exp_law, ig_law):
        for law in (exp_law, ig_law):
            total, _ = integrate.quad(lambda z: float(density(z, law)), 0.0, np.inf, points=None)
            assert total == pytest.approx(1.0, abs=1e-8)


    @pytest.mark.parametrize("alpha", [0.0, 0.5])
    def test_mean_and_variance_from_density(self, alpha):
        law = SubordinatorLaw(alpha, 1.0, 0.5)

        def integral(fn):
            left, _ = integrate.quad(lambda z: fn(z) * float(density(z, law)), 0.0, 1.0, epsabs=1e-12)
            right, _ = integrate.quad(lambda z: fn(z) * float(density(z, law)), 1.0, np.inf, epsabs=1e-12)
            return left + right

        assert integral(lambda z: z) == pytest.approx(1.0, abs=1e-6)
        assert integral(lambda z: (z - 1.0) ** 2) == pytest.approx(law.variance, abs=1e-6)

class TestCdf:
    def test_zero(self, exp_law):
        assert cdf(0.0, exp_law) == 0.0

    def test_exponential(self, exp_law):
        assert cdf(1.0, exp_law) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)

    def test_median_limit_for_concentrated_law(self):
        law = SubordinatorLaw(0.0, 1e-3, 1e-6)
        assert abs(cdf_at_offset(law, 0.0) - 0.5) < 0.01

    @pytest.mark.parametrize("alpha", [0.0, 0.3, 0.5])
    def test_linear_scaling_freezes_the_law(self, alpha):
        # k_t = k_bar t keeps t/k_t fixed, so the CDF does not move with t
        z = np.linspace(0.05, 4.0, 40)
        curves = [cdf(z, SubordinatorLaw(alpha, t, 2.0 * t)) for t in (1e-1, 1e-2, 1e-3)]
        for curve in curves[1:]:
            assert np.allclose(curve, curves[0], rtol=1e-12, atol=1e-15)

    def test_offset_at_critical_power(self):
        # beta = 1.5, k_bar = 1: offsets of size t^{1/4} sit one standard deviation out
        t = 1e-8
        law = SubordinatorLaw(0.0, t, t ** 1.5)
        assert cdf_at_offset(law, -(t ** 0.25)) == pytest.approx(stats.norm.cdf(-1.0), abs=1e-3)
        assert cdf_at_offset(law, t ** 0.25) == pytest.approx(stats.norm.cdf(1.0), abs=1e-3)

    def test_offset_above_critical_power(self):
        t = 1e-8
        law = SubordinatorLaw(0.0, t, t ** 1.5)
        assert abs(cdf_at_offset(law, -(t ** 0.5)) - 0.5) < 0.01
        assert abs(cdf_at_offset(law, t ** 0.5) - 0.5) < 0.01

    def test_offset_below_critical_power(self):
        t = 1e-8
        law = SubordinatorLaw(0.0, t, t ** 1.5)
        assert cdf_at_offset(law, -(t ** 0.125)) < 1e-6
        assert cdf_at_offset(law, t ** 0.125) > 1.0 - 1e-6

    def test_gaussian_bound_examples(self):
        assert gaussian_cdf_bound(SubordinatorLaw(0.0, 1.0, 0.01)) == pytest.approx(0.2)
        assert gaussian_cdf_bound(SubordinatorLaw(0.5, 1.0, 0.04)) == pytest.approx(0.6)

    def test_gaussian_bound_vanishes(self):
        assert gaussian_cdf_bound(SubordinatorLaw(0.0, 1.0, 1e-12)) < 1e-5


class TestSample:
    def test_gamma_moments(self, exp_law):
        draws = sample(exp_law, 10 ** 6, rng_seed=42)
        assert abs(draws.mean() - 1.0) < 0.004
        assert abs(draws.var() - 1.0) < 0.01

    def test_inverse_gaussian_ks(self, ig_law):
        draws = sample(ig_law, 10 ** 6, rng_seed=42)
        result = stats.kstest(draws, stats.invgauss(1.0, scale=1.0).cdf)
        assert result.statistic < 0.002

    def test_small_shape_inverse_gaussian_positive(self):
        draws = sample(SubordinatorLaw(0.5, 1e-4, 1.0), 10 ** 4, rng_seed=1)
        assert np.all(draws > 0.0)

    def test_generic_alpha_mean(self):
        draws = sample(SubordinatorLaw(0.3, 1.0, 1.0), 10 ** 5, rng_seed=3)
        assert abs(draws.mean() - 1.0) < 0.02

    def test_deterministic(self, ig_law):
        a = sample(ig_law, 100, rng_seed=7)
        b = sample(ig_law, 100, rng_seed=7)
        c = sample(ig_law, 100, rng_seed=8)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_count(self, exp_law):
        with pytest.raises(DomainError):
            sample(exp_law, 0)
