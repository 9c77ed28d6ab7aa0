"""Payoffs and closed-form prices for vanilla and power European calls.

Two power conventions are supported:

* ``OptionKind.TYPE1`` pays ``(S_T**alpha - K)^+``
* ``OptionKind.TYPE2`` pays ``(S_T**alpha - K**alpha)^+``

Both share one pricing kernel; they differ only in the effective strike
(``K`` versus ``K**alpha``).  With ``alpha == 1`` both collapse to the
Black-Scholes call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike

from .core_math import log_std_normal_cdf, std_normal_cdf
from .errors import MissingSigma, NonPositiveTau


class OptionKind(str, Enum):
    TYPE1 = "type1"
    TYPE2 = "type2"

    @classmethod
    def parse(cls, value: "OptionKind | str") -> "OptionKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown option kind {value!r}; expected 'type1' or 'type2'") from None


@dataclass(frozen=True)
class PowerOptionSpec:
    """Contract terms of a power call."""

    alpha: float
    strike: float
    kind: OptionKind = OptionKind.TYPE1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be a positive finite number, got {self.alpha}")
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise ValueError(f"strike must be a positive finite number, got {self.strike}")
        object.__setattr__(self, "kind", OptionKind.parse(self.kind))

    @property
    def effective_strike(self) -> float:
        """Strike the powered spot is compared against: K or K**alpha."""
        if self.kind is OptionKind.TYPE1:
            return self.strike
        return self.strike**self.alpha


@dataclass(frozen=True)
class MarketState:
    """Spot, rate and time to expiry, plus the volatility when it is known."""

    spot: float
    rate: float
    tau: float
    sigma: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.spot) and self.spot > 0):
            raise ValueError(f"spot must be a positive finite number, got {self.spot}")
        if not math.isfinite(self.rate):
            raise ValueError(f"rate must be finite, got {self.rate}")
        if not math.isfinite(self.tau):
            raise ValueError(f"tau must be finite, got {self.tau}")
        if self.sigma is not None and not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be a positive finite number, got {self.sigma}")

    def with_sigma(self, sigma: float) -> "MarketState":
        return MarketState(self.spot, self.rate, self.tau, sigma)


@dataclass(frozen=True)
class PricingBreakdown:
    d1: float
    d2: float
    price: float


def payoff_type1(terminal_spot: ArrayLike, spec: PowerOptionSpec) -> float | np.ndarray:
    """max(S_T**alpha - K, 0)."""
    out = np.maximum(np.power(terminal_spot, spec.alpha) - spec.strike, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def payoff_type2(terminal_spot: ArrayLike, spec: PowerOptionSpec) -> float | np.ndarray:
    """max(S_T**alpha - K**alpha, 0)."""
    out = np.maximum(np.power(terminal_spot, spec.alpha) - spec.strike**spec.alpha, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def payoff(terminal_spot: ArrayLike, spec: PowerOptionSpec) -> float | np.ndarray:
    if spec.kind is OptionKind.TYPE1:
        return payoff_type1(terminal_spot, spec)
    return payoff_type2(terminal_spot, spec)


def power_call_arrays(
    spot: ArrayLike,
    effective_strike: ArrayLike,
    rate: ArrayLike,
    tau: ArrayLike,
    sigma: ArrayLike,
    alpha: ArrayLike,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised power-call kernel for strictly positive ``tau`` and ``sigma``.

    Returns ``(d1, d2, price)`` with

        d1 = [ln(S**alpha / Ke) + alpha (r + sigma**2/2) tau] / (alpha sigma sqrt(tau))
        d2 = d1 - sigma sqrt(tau)
        C  = S**alpha exp([(alpha-1) r + alpha (alpha-1) sigma**2 / 2] tau)
               N(d1 + (alpha-1) sigma sqrt(tau))  -  Ke exp(-r tau) N(d2)

    where ``Ke`` is the effective strike.  The growth factor and N(.) of the
    first leg are combined in log space so that large ``alpha * sigma`` cannot
    produce ``inf * 0``.
    """
    spot = np.asarray(spot, dtype=float)
    effective_strike = np.asarray(effective_strike, dtype=float)
    rate = np.asarray(rate, dtype=float)
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    alpha = np.asarray(alpha, dtype=float)

    vol_sqrt_t = sigma * np.sqrt(tau)
    log_powered_spot = alpha * np.log(spot)
    log_moneyness = log_powered_spot - np.log(effective_strike) + alpha * (rate + 0.5 * sigma * sigma) * tau
    flat = vol_sqrt_t == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.where(flat, np.sign(log_moneyness) * np.inf, log_moneyness / (alpha * vol_sqrt_t))
    d2 = d1 - vol_sqrt_t
    log_growth = log_powered_spot + ((alpha - 1.0) * rate + 0.5 * alpha * (alpha - 1.0) * sigma * sigma) * tau
    discounted_strike = effective_strike * np.exp(-rate * tau)
    first = np.exp(log_growth + log_std_normal_cdf(d1 + (alpha - 1.0) * vol_sqrt_t))
    second = discounted_strike * std_normal_cdf(d2)
    # no diffusion left: the forward intrinsic value (also covers exactly at the money)
    price = np.where(flat, np.exp(log_growth) - discounted_strike, first - second)
    price = np.maximum(price, 0.0)
    return d1, d2, price


def _intrinsic_breakdown(spot: float, spec: PowerOptionSpec) -> PricingBreakdown:
    # tau == 0: d-terms degenerate to +/-inf (0 exactly at the money)
    value = float(payoff(spot, spec))
    log_moneyness = spec.alpha * math.log(spot) - math.log(spec.effective_strike)
    if log_moneyness == 0.0:
        d = 0.0
    else:
        d = math.copysign(math.inf, log_moneyness)
    return PricingBreakdown(d1=d, d2=d, price=value)


def price_power_call(market: MarketState, spec: PowerOptionSpec) -> PricingBreakdown:
    """Closed-form price of a type-1 or type-2 power call.

    At ``tau == 0`` the intrinsic payoff is returned.

    Raises:
        MissingSigma: ``market.sigma`` is absent.
        NonPositiveTau: ``market.tau`` is negative.
    """
    if market.sigma is None:
        raise MissingSigma("a volatility is required to price an option")
    if market.tau < 0:
        raise NonPositiveTau(f"tau must be non-negative, got {market.tau}")
    if market.tau == 0:
        return _intrinsic_breakdown(market.spot, spec)
    d1, d2, price = power_call_arrays(
        market.spot, spec.effective_strike, market.rate, market.tau, market.sigma, spec.alpha
    )
    return PricingBreakdown(d1=float(d1), d2=float(d2), price=float(price))


def price_vanilla_call(market: MarketState, strike: float) -> PricingBreakdown:
    """Black-Scholes call, written out independently of the power kernel.

    C = S N(d1) - K exp(-r tau) N(d2)
    """
    if market.sigma is None:
        raise MissingSigma("a volatility is required to price an option")
    if market.tau < 0:
        raise NonPositiveTau(f"tau must be non-negative, got {market.tau}")
    if not strike > 0:
        raise ValueError(f"strike must be positive, got {strike}")
    if market.tau == 0:
        return _intrinsic_breakdown(market.spot, PowerOptionSpec(1.0, strike))
    s, k, r, t, v = market.spot, strike, market.rate, market.tau, market.sigma
    vol_sqrt_t = v * math.sqrt(t)
    d1 = (math.log(s / k) + (r + 0.5 * v * v) * t) / vol_sqrt_t
    d2 = d1 - vol_sqrt_t
    price = s * std_normal_cdf(d1) - k * math.exp(-r * t) * std_normal_cdf(d2)
    return PricingBreakdown(d1=d1, d2=d2, price=max(price, 0.0))


def zero_vol_limit(market: MarketState, spec: PowerOptionSpec) -> float:
    """Limit of the power-call price as sigma -> 0+.

    max(S**alpha exp((alpha-1) r tau) - Ke exp(-r tau), 0)
    """
    forward_leg = market.spot**spec.alpha * math.exp((spec.alpha - 1.0) * market.rate * market.tau)
    return max(forward_leg - spec.effective_strike * math.exp(-market.rate * market.tau), 0.0)
