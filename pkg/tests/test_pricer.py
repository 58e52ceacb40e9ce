import math

import numpy as np
import pytest
from scipy.special import ndtr

from atslab.ats_model import AtsParams, phi
from atslab.errors import DomainError
from atslab.pricer import (
    OptionSpec,
    black_price,
    conditional_payoff,
    l_term,
    m_function,
    martingale_residual,
    no_arbitrage_bounds,
    price_mc,
    price_quadrature,
)
from atslab.subordinator import log_laplace
from atslab.validation import random_admissible_params


class TestOptionSpec:
    def test_strike(self):
        spec = OptionSpec(0.04, 0.5)
        assert spec.x == pytest.approx(0.1)
        assert spec.strike == pytest.approx(math.exp(0.1))

    def test_rejects_bad_input(self):
        with pytest.raises(DomainError):
            OptionSpec(0.0, 0.0)
        with pytest.raises(DomainError):
            OptionSpec(1.0, 0.0, "straddle")

    def test_bounds(self):
        lower, upper = no_arbitrage_bounds(OptionSpec(1.0, -0.1, "call"))
        assert lower == pytest.approx(1.0 - math.exp(-0.1))
        assert upper == 1.0
        lower, upper = no_arbitrage_bounds(OptionSpec(1.0, -0.1, "put"))
        assert lower == 0.0
        assert upper == pytest.approx(math.exp(-0.1))


class TestBlackPrice:
    def test_atm(self):
        assert black_price(0.2, OptionSpec(1.0, 0.0)) == pytest.approx(ndtr(0.1) - ndtr(-0.1), rel=1e-12)
        assert black_price(0.2, OptionSpec(1.0, 0.0)) == pytest.approx(0.0796557, abs=1e-7)

    def test_zero_vol_limit(self):
        assert black_price(1e-14, OptionSpec(1.0, 0.0)) < 1e-14

    def test_rejects_nonpositive_vol(self):
        with pytest.raises(DomainError):
            black_price(0.0, OptionSpec(1.0, 0.0))

    def test_parity(self):
        for t in (1e-3, 0.5, 2.0):
            for y in (-1.0, 0.0, 0.7):
                call = black_price(0.3, OptionSpec(t, y, "call"))
                put = black_price(0.3, OptionSpec(t, y, "put"))
                assert call - put == pytest.approx(-math.expm1(y * math.sqrt(t)), abs=1e-14)

    def test_atm_expansion(self):
        for vol in np.linspace(0.05, 0.5, 10):
            for t in np.geomspace(1e-4, 1.0, 9):
                price = black_price(float(vol), OptionSpec(float(t), 0.0))
                assert abs(price - vol * math.sqrt(t / (2.0 * math.pi))) <= vol ** 3 * t ** 1.5 / 20.0


class TestLTerm:
    def test_root(self, case5):
        t = 0.01
        root = phi(t, case5) / (case5.sigma_bar ** 2 * case5.eta_t(t))
        assert l_term(root, t, case5) == pytest.approx(0.0, abs=1e-12)

    def test_vanishes_with_eta(self, case5):
        assert abs(l_term(1.3, 0.01, case5.with_(eta_bar=1e-12))) < 1e-10

    def test_recomputed(self, case5):
        t = 0.01
        sigma, eta = case5.sigma_bar, case5.eta_t(t)
        phi_t = -float(log_laplace(t * sigma ** 2 * eta, case5.law(t))) / t
        expected = -sigma * eta * math.sqrt(t) + phi_t * math.sqrt(t) / sigma
        assert l_term(1.0, t, case5) == pytest.approx(expected, rel=1e-13)

    def test_rejects_nonpositive(self, case5):
        with pytest.raises(DomainError):
            l_term(0.0, 0.01, case5)


class TestConditionalPayoff:
    def test_parity(self, case5):
        t, y = 0.05, 0.3
        z = np.geomspace(1e-3, 10.0, 25)
        call = conditional_payoff(z, OptionSpec(t, y, "call"), case5)
        put = conditional_payoff(z, OptionSpec(t, y, "put"), case5)
        forward = np.exp(phi(t, case5) * t - t * case5.sigma_bar ** 2 * case5.eta_t(t) * z)
        assert np.allclose(call - put, forward - math.exp(y * math.sqrt(t)), atol=1e-12, rtol=0.0)

    def test_atm_at_root(self, case5):
        t = 0.01
        root = phi(t, case5) / (case5.sigma_bar ** 2 * case5.eta_t(t))
        half = 0.5 * case5.sigma_bar * math.sqrt(root * t)
        value = conditional_payoff(root, OptionSpec(t, 0.0), case5)
        assert value == pytest.approx(2.0 * ndtr(half) - 1.0, abs=1e-14)

    def test_deep_otm_put(self, case5):
        assert conditional_payoff(1.0, OptionSpec(0.01, -200.0, "put"), case5) < 1e-8

    def test_nonnegative(self):
        z = np.geomspace(1e-6, 1e3, 200)
        for p in random_admissible_params(5, rng_seed=3):
            for kind in ("call", "put"):
                for y in (-1.0, 0.0, 1.0):
                    assert np.min(conditional_payoff(z, OptionSpec(0.01, y, kind), p)) >= -1e-15

    def test_rejects_nonpositive(self, case5):
        with pytest.raises(DomainError):
            conditional_payoff(np.array([1.0, -1.0]), OptionSpec(0.01, 0.0), case5)


class TestPriceQuadrature:
    @pytest.mark.parametrize("t", [1e-3, 1e-2, 0.1, 1.0])
    def test_parity(self, case5, t):
        for y in (-1.0, 0.0, 1.0):
            spec = OptionSpec(t, y)
            call = price_quadrature(spec, case5)
            put = price_quadrature(spec.with_kind("put"), case5)
            assert abs(call - put + math.expm1(spec.x)) < 1e-9

    def test_within_bounds(self, case5_ig):
        for y in (-1.0, -0.5, 0.0, 0.5, 1.0):
            for kind in ("call", "put"):
                spec = OptionSpec(0.05, y, kind)
                lower, upper = no_arbitrage_bounds(spec)
                assert lower <= price_quadrature(spec, case5_ig) <= upper

    def test_monotone_in_strike(self, case5):
        ys = np.linspace(-1.0, 1.0, 9)
        calls = [price_quadrature(OptionSpec(0.05, float(y)), case5) for y in ys]
        puts = [price_quadrature(OptionSpec(0.05, float(y), "put"), case5) for y in ys]
        assert np.all(np.diff(calls) < 0.0)
        assert np.all(np.diff(puts) > 0.0)

    def test_black_limit(self):
        p = AtsParams(alpha=0.0, beta=1.0, delta=0.0, k_bar=1e-6, eta_bar=1e-10, sigma_bar=0.2)
        for y in (-0.5, 0.0, 0.5):
            spec = OptionSpec(0.5, y)
            assert price_quadrature(spec, p) == pytest.approx(black_price(0.2, spec), abs=1e-4)

    def test_full_output(self, case5):
        price, err = price_quadrature(OptionSpec(0.1, 0.0), case5, full_output=True)
        assert price > 0.0
        assert 0.0 <= err < 1e-8

    def test_atm_prices_vanish(self, case5):
        prices = [price_quadrature(OptionSpec(10.0 ** -k, 0.0), case5) for k in range(1, 7)]
        assert all(b < a for a, b in zip(prices, prices[1:]))
        assert prices[-1] < 1e-3

    def test_martingale_residual(self):
        for p in random_admissible_params(20, rng_seed=42):
            for t in (1e-3, 1e-1, 1.0):
                assert abs(martingale_residual(t, p)) < 1e-8


class TestPriceMc:
    def test_agrees_with_quadrature(self, case5):
        spec = OptionSpec(0.1, 0.0)
        reference = price_quadrature(spec, case5)
        price, std_error = price_mc(spec, case5, 10 ** 6, rng_seed=42)
        assert std_error < 5e-4
        assert abs(price - reference) < 3.0 * std_error

    def test_deep_in_the_money(self, case5):
        t = 0.1
        spec = OptionSpec(t, -10.0 / math.sqrt(t))
        price, std_error = price_mc(spec, case5, 10 ** 5, rng_seed=42)
        assert abs(price - (1.0 - math.exp(-10.0))) < 3.0 * std_error

    def test_deterministic(self, case5):
        spec = OptionSpec(0.1, 0.2, "put")
        assert price_mc(spec, case5, 10 ** 4, rng_seed=9, shards=3) == price_mc(spec, case5, 10 ** 4, rng_seed=9, shards=3)

    def test_shards_split_paths(self, case5):
        price, std_error = price_mc(OptionSpec(0.1, 0.0), case5, 10 ** 4 + 1, rng_seed=1, shards=4)
        assert price > 0.0 and std_error > 0.0

    def test_rejects_bad_counts(self, case5):
        with pytest.raises(DomainError):
            price_mc(OptionSpec(0.1, 0.0), case5, 0)
        with pytest.raises(DomainError):
            price_mc(OptionSpec(0.1, 0.0), case5, 10, shards=0)


class TestMFunction:
    @pytest.mark.parametrize("t", [1e-3, 1e-4])
    def test_increasing_near_one(self, case5, t):
        z = np.linspace(1.0, 1.05, 51)
        assert np.all(np.diff(m_function(z, t, case5)) > 0.0)
