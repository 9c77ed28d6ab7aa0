import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mc_discounted_payoff, mp_power_call
from powervol.errors import MissingSigma, NonPositiveTau
from powervol.pricing import (
    MarketState,
    OptionKind,
    PowerOptionSpec,
    payoff_type1,
    payoff_type2,
    power_call_arrays,
    price_power_call,
    price_vanilla_call,
    zero_vol_limit,
)

ALPHAS = [0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0]

spots = st.floats(0.5, 2.0)
rates = st.floats(-0.02, 0.08)
taus = st.floats(0.05, 2.0)
sigmas = st.floats(0.05, 0.8)
alphas = st.floats(0.3, 2.5)


class TestContracts:
    @pytest.mark.parametrize("alpha,strike", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0), (math.nan, 1.0)])
    def test_invalid_spec(self, alpha, strike):
        with pytest.raises(ValueError):
            PowerOptionSpec(alpha, strike)

    def test_kind_from_string(self):
        assert PowerOptionSpec(2.0, 1.0, "TYPE2").kind is OptionKind.TYPE2
        with pytest.raises(ValueError):
            PowerOptionSpec(2.0, 1.0, "type3")

    @pytest.mark.parametrize("kwargs", [dict(spot=0.0), dict(spot=-1.0), dict(sigma=0.0), dict(sigma=-0.1)])
    def test_invalid_market(self, kwargs):
        base = dict(spot=1.0, rate=0.0, tau=1.0, sigma=0.2)
        base.update(kwargs)
        with pytest.raises(ValueError):
            MarketState(**base)

    def test_effective_strike(self):
        assert PowerOptionSpec(2.0, 1.3, OptionKind.TYPE1).effective_strike == 1.3
        assert PowerOptionSpec(2.0, 1.3, OptionKind.TYPE2).effective_strike == pytest.approx(1.69)


class TestPayoffs:
    def test_type1(self):
        spec = PowerOptionSpec(2.0, 1.0)
        assert payoff_type1(1.2, spec) == pytest.approx(0.44)
        assert payoff_type1(0.8, spec) == 0.0

    def test_type1_alpha_one_is_vanilla(self):
        assert payoff_type1(1.1, PowerOptionSpec(1.0, 0.9)) == pytest.approx(0.2)

    def test_type2(self):
        assert payoff_type2(1.2, PowerOptionSpec(2.0, 1.0, OptionKind.TYPE2)) == pytest.approx(0.44)
        assert payoff_type2(1.2, PowerOptionSpec(2.0, 1.3, OptionKind.TYPE2)) == 0.0

    @given(st.floats(0.01, 10.0), alphas)
    def test_unit_strike_kinds_agree(self, terminal, alpha):
        assert payoff_type1(terminal, PowerOptionSpec(alpha, 1.0)) == payoff_type2(
            terminal, PowerOptionSpec(alpha, 1.0, OptionKind.TYPE2)
        )

    def test_vectorised(self):
        out = payoff_type1(np.array([0.5, 1.0, 1.5]), PowerOptionSpec(2.0, 1.0))
        np.testing.assert_allclose(out, [0.0, 0.0, 1.25])


class TestVanilla:
    def test_zero_vol_limit(self):
        res = price_vanilla_call(MarketState(1.2, 0.0, 1.0, 1e-12), 1.0)
        assert res.price == pytest.approx(0.2, abs=1e-12)

    def test_atm_identity(self):
        # r = 0 at the money: C = S (2 N(sigma sqrt(tau) / 2) - 1) = S erf(sigma sqrt(tau) / (2 sqrt 2))
        expected = math.erf(0.075 / math.sqrt(2.0))
        assert expected == pytest.approx(0.0597852881057895, abs=1e-15)
        res = price_vanilla_call(MarketState(1.0, 0.0, 1.0, 0.15), 1.0)
        assert res.price == pytest.approx(expected, abs=1e-14)
        assert res.d2 == pytest.approx(res.d1 - 0.15, abs=1e-12)

    @given(spots, st.floats(0.5, 2.0), rates, taus, sigmas)
    def test_bounds(self, s, k, r, t, v):
        price = price_vanilla_call(MarketState(s, r, t, v), k).price
        assert max(s - k * math.exp(-r * t), 0.0) - 1e-12 <= price <= s + 1e-12

    def test_expiry_returns_intrinsic(self):
        assert price_vanilla_call(MarketState(1.3, 0.05, 0.0, 0.2), 1.0).price == pytest.approx(0.3)

    def test_missing_sigma(self):
        with pytest.raises(MissingSigma):
            price_vanilla_call(MarketState(1.0, 0.0, 1.0), 1.0)


class TestPowerCall:
    @given(spots, st.floats(0.5, 2.0), rates, taus, sigmas)
    def test_alpha_one_reduces_to_vanilla(self, s, k, r, t, v):
        market = MarketState(s, r, t, v)
        vanilla = price_vanilla_call(market, k).price
        for kind in OptionKind:
            assert price_power_call(market, PowerOptionSpec(1.0, k, kind)).price == pytest.approx(vanilla, abs=1e-12)

    @given(spots, rates, taus, sigmas, alphas)
    def test_unit_strike_kinds_agree(self, s, r, t, v, a):
        market = MarketState(s, r, t, v)
        p1 = price_power_call(market, PowerOptionSpec(a, 1.0, OptionKind.TYPE1))
        p2 = price_power_call(market, PowerOptionSpec(a, 1.0, OptionKind.TYPE2))
        assert p1 == p2

    @pytest.mark.parametrize("kind", list(OptionKind))
    @pytest.mark.parametrize("alpha", [0.4, 1.0, 2.0])
    @pytest.mark.parametrize("strike", [0.9, 1.0, 1.1])
    def test_against_extended_precision(self, kind, alpha, strike):
        market = MarketState(1.0, 0.001, 0.7, 0.25)
        expected = float(mp_power_call(1.0, strike, 0.001, 0.7, 0.25, alpha, kind.value))
        assert price_power_call(market, PowerOptionSpec(alpha, strike, kind)).price == pytest.approx(
            expected, rel=1e-12, abs=1e-15
        )

    def test_breakdown_relation(self):
        res = price_power_call(MarketState(1.0, 0.001, 0.5, 0.3), PowerOptionSpec(1.6, 0.95))
        assert res.d2 == pytest.approx(res.d1 - 0.3 * math.sqrt(0.5), abs=1e-12)
        assert res.price >= 0

    def test_matches_monte_carlo(self):
        market = MarketState(1.0, 0.001, 1.0, 0.15)
        spec = PowerOptionSpec(2.0, 0.9, OptionKind.TYPE1)
        normals = np.random.default_rng(2024).standard_normal(1_000_000)
        mean, stderr = mc_discounted_payoff(1.0, 0.001, 1.0, 0.15, normals, lambda st_: payoff_type1(st_, spec))
        assert abs(price_power_call(market, spec).price - mean) <= 3 * stderr

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("kind", list(OptionKind))
    def test_monotone_in_spot(self, alpha, kind):
        spec = PowerOptionSpec(alpha, 1.0, kind)
        spot_grid = np.linspace(0.5, 1.5, 201)
        _, _, prices = power_call_arrays(spot_grid, spec.effective_strike, 0.001, 1.0, 0.15, alpha)
        assert np.all(np.diff(prices) >= 0)

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("strike", [0.9, 1.0, 1.1])
    def test_zero_vol_limit(self, alpha, strike):
        market = MarketState(1.05, 0.001, 1.0, 1e-10)
        spec = PowerOptionSpec(alpha, strike)
        assert price_power_call(market, spec).price == pytest.approx(zero_vol_limit(market, spec), abs=1e-8)

    def test_expiry_intrinsic(self):
        res = price_power_call(MarketState(1.2, 0.01, 0.0, 0.2), PowerOptionSpec(2.0, 1.0))
        assert res.price == pytest.approx(0.44)
        assert res.d1 == math.inf

    def test_expiry_out_of_the_money(self):
        res = price_power_call(MarketState(0.8, 0.01, 0.0, 0.2), PowerOptionSpec(2.0, 1.0))
        assert res.price == 0.0
        assert res.d1 == -math.inf

    def test_errors(self):
        with pytest.raises(MissingSigma):
            price_power_call(MarketState(1.0, 0.0, 1.0), PowerOptionSpec(2.0, 1.0))
        with pytest.raises(NonPositiveTau):
            price_power_call(MarketState(1.0, 0.0, -0.5, 0.2), PowerOptionSpec(2.0, 1.0))

    @pytest.mark.filterwarnings("ignore:overflow encountered in exp:RuntimeWarning")
    def test_extreme_inputs_never_nan(self):
        # growth factor exp(1350) overflows: the price is +inf, not nan
        res = price_power_call(MarketState(1.0, 0.0, 10.0, 3.0), PowerOptionSpec(6.0, 1.0))
        assert res.price == math.inf
        deep_otm = price_power_call(MarketState(0.01, 0.0, 0.01, 0.05), PowerOptionSpec(3.0, 1.0))
        assert deep_otm.price == 0.0

    @settings(max_examples=50)
    @given(spots, st.floats(0.5, 2.0), rates, taus, sigmas, alphas, st.sampled_from(list(OptionKind)))
    def test_non_negative(self, s, k, r, t, v, a, kind):
        assert price_power_call(MarketState(s, r, t, v), PowerOptionSpec(a, k, kind)).price >= 0.0
