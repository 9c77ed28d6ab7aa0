"""Bracketed iterative implied volatility on the exact pricing formulas.

This is the reference the closed-form estimator is measured against.  The
root itself is found with :func:`scipy.optimize.brentq` (bisection safeguarded
inverse-quadratic interpolation); the code here handles bracketing and guards
against a price that is not monotone in sigma.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import MaxIterations, NoBracket, NonPositiveTau
from .pricing import MarketState, PowerOptionSpec, power_call_arrays

logger = logging.getLogger(__name__)

MAX_BRACKET_DOUBLINGS = 10
MONOTONICITY_SAMPLES = 257


class NonMonotonePriceWarning(UserWarning):
    """The price was not monotone in sigma inside the search bracket."""


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-13
    max_iterations: int = 200
    bracket_low: float = 1e-6
    bracket_high: float = 4.0

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        if not 0 < self.bracket_low < self.bracket_high:
            raise ValueError("need 0 < bracket_low < bracket_high")


def _price_curve(market: MarketState, spec: PowerOptionSpec, sigma: np.ndarray | float) -> np.ndarray:
    # wide brackets can overflow the growth factor; +inf still orders correctly
    with np.errstate(over="ignore"):
        return power_call_arrays(market.spot, spec.effective_strike, market.rate, market.tau, sigma, spec.alpha)[2]


def _first_crossing(market, spec, target, low, high):
    """Locate the first sign change of ``price(sigma) - target`` on a log grid.

    The bracket is widened (low halved, high doubled) up to
    ``MAX_BRACKET_DOUBLINGS`` times until some crossing appears.  Returns
    ``(lo, hi, monotone)`` where ``[lo, hi]`` is the grid cell holding the
    leftmost crossing and ``monotone`` tells whether the sampled price was
    non-decreasing.  Differences of a few ulps count as flat so that rounding
    noise is not mistaken for non-monotonicity.
    """
    for attempt in range(MAX_BRACKET_DOUBLINGS + 1):
        grid = np.geomspace(low, high, MONOTONICITY_SAMPLES)
        prices = _price_curve(market, spec, grid)
        excess = prices - target
        if np.any(excess == 0.0) or np.any(np.signbit(excess[1:]) != np.signbit(excess[:-1])):
            break
        if attempt == MAX_BRACKET_DOUBLINGS:
            raise NoBracket(
                f"price {target!r} not attained for sigma in [{low:g}, {high:g}] "
                f"(sampled range [{prices.min()!r}, {prices.max()!r}])"
            )
        low /= 2.0
        high *= 2.0

    steps = np.diff(prices)
    noise = 8.0 * np.spacing(np.maximum(np.abs(prices[1:]), np.abs(prices[:-1])))
    monotone = not np.any(steps < -noise)
    exact = np.nonzero(excess == 0.0)[0]
    flips = np.nonzero(np.signbit(excess[1:]) != np.signbit(excess[:-1]))[0]
    first_flip = int(flips[0]) if flips.size else len(grid)
    if exact.size and exact[0] <= first_flip:
        sigma = float(grid[exact[0]])
        return sigma, sigma, monotone
    if not monotone:
        hidden = _hidden_crossing(market, spec, target, grid, excess, first_flip)
        if hidden is not None:
            return hidden[0], hidden[1], monotone
    return float(grid[first_flip]), float(grid[first_flip + 1]), monotone


def _hidden_crossing(market, spec, target, grid, excess, stop):
    """Look for a dip below the target between samples, left of index ``stop``.

    Each positive sampled local minimum of ``price - target`` is refined by a
    bounded scalar minimisation over its two neighbouring cells; the first one
    that reaches the target gives a bracket ``(grid point, minimiser)``.
    """
    for i in range(1, min(stop + 1, len(grid) - 1)):
        if not (excess[i] > 0 and excess[i] <= excess[i - 1] and excess[i] <= excess[i + 1]):
            continue
        found = minimize_scalar(
            lambda v: float(_price_curve(market, spec, v)) - target,
            bounds=(float(grid[i - 1]), float(grid[i + 1])),
            method="bounded",
            options={"xatol": 1e-14},
        )
        if found.fun <= 0.0:
            if found.fun == 0.0:
                return float(found.x), float(found.x)
            return float(grid[i - 1]), float(found.x)
    return None


def implied_vol_iterative(
    market: MarketState,
    spec: PowerOptionSpec,
    call_price: float,
    config: SolverConfig | None = None,
) -> float:
    """Volatility that reproduces ``call_price`` under the exact power-call formula.

    The bracket ``[config.bracket_low, config.bracket_high]`` is widened by up
    to ten halvings/doublings until it straddles the target.  Power calls with
    ``alpha < 1`` can lose value as sigma grows (the forward of S**alpha falls),
    so the price is not assumed monotone: the leftmost crossing is solved for,
    and a :class:`NonMonotonePriceWarning` is issued when the sampled price
    was not monotone.

    Raises:
        NonPositiveTau: ``market.tau <= 0``.
        NoBracket: the price is unattainable (e.g. below the zero-vol limit).
        MaxIterations: the root finder ran out of iterations.
    """
    config = config or SolverConfig()
    if not market.tau > 0:
        raise NonPositiveTau(f"tau must be positive, got {market.tau}")
    if not math.isfinite(call_price):
        raise NoBracket(f"price must be finite, got {call_price!r}")

    low, high, monotone = _first_crossing(market, spec, call_price, config.bracket_low, config.bracket_high)
    if low == high:
        return low
    if not monotone:
        warnings.warn(
            f"price not monotone in sigma; returning the leftmost root, near {low:.6g}",
            NonMonotonePriceWarning,
            stacklevel=2,
        )

    def objective(sigma: float) -> float:
        return float(_price_curve(market, spec, sigma)) - call_price

    try:
        root, info = brentq(
            objective,
            low,
            high,
            xtol=config.tolerance,
            rtol=4 * np.finfo(float).eps,
            maxiter=config.max_iterations,
            full_output=True,
            disp=False,
        )
    except RuntimeError as exc:
        raise MaxIterations(str(exc)) from exc
    if not info.converged:
        raise MaxIterations(f"no convergence after {info.iterations} iterations ({info.flag})")
    logger.debug("iterative iv: sigma=%r after %d iterations", root, info.iterations)
    return float(root)
