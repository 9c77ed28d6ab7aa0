"""Closed-form implied volatility for power calls.

A second-order expansion of the power-call price in the total volatility
``v = sigma * sqrt(tau)`` gives ``a v**2 + b v + c = 0`` with

    a = power_forward * curvature_weight + discounted_strike
    b = sqrt(2 pi) * (power_forward - discounted_strike - 2 * price)
    c = 2 * log_moneyness / alpha * (power_forward - discounted_strike)

where ``discounted_strike = Ke exp(-r tau)`` (``Ke`` is K for type 1 and
K**alpha for type 2), ``power_forward = S**alpha exp((alpha - 1) r tau)``,
``log_moneyness = ln(power_forward / discounted_strike)`` and
``curvature_weight = 2 alpha - 1 + (alpha - 1) log_moneyness``.  At
``alpha == 1`` this is the Corrado-Miller quadratic.

``c`` is never negative, so when ``a > 0`` both roots share the sign of
``-b``, and when ``a < 0`` they straddle zero.  The largest root is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike

from .errors import NonPositiveTau
from .pricing import MarketState, OptionKind, PowerOptionSpec

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Negative discriminants within this fraction of b**2 are rounding noise.
DISCRIMINANT_NOISE = 1e-12


class IVStatus(IntEnum):
    SOLVED = 0
    NEGATIVE_DISCRIMINANT = 1
    WRONG_SIGN_CONDITION = 2
    NON_POSITIVE_ROOT = 3
    DEGENERATE_LINEAR = 4

    @property
    def label(self) -> str:
        return _STATUS_LABELS[self]


_STATUS_LABELS = {
    IVStatus.SOLVED: "Solved",
    IVStatus.NEGATIVE_DISCRIMINANT: "NegativeDiscriminant",
    IVStatus.WRONG_SIGN_CONDITION: "WrongSignCondition",
    IVStatus.NON_POSITIVE_ROOT: "NonPositiveRoot",
    IVStatus.DEGENERATE_LINEAR: "DegenerateLinear",
}


class RootBranch(IntEnum):
    NONE = 0
    PLUS = 1
    MINUS = 2
    LINEAR = 3

    @property
    def label(self) -> str | None:
        return {RootBranch.PLUS: "PlusRoot", RootBranch.MINUS: "MinusRoot", RootBranch.LINEAR: "Linear"}.get(self)


@dataclass(frozen=True)
class Intermediates:
    """Quote-level quantities that do not depend on the price.

    ``log_moneyness`` is carried separately so that its sign and the sign of
    ``power_forward - discounted_strike`` always agree.
    """

    power_forward: float
    discounted_strike: float
    curvature_weight: float
    kind: OptionKind
    log_moneyness: float


@dataclass(frozen=True)
class QuadraticIV:
    a: float
    b: float
    c: float
    discriminant: float


@dataclass(frozen=True)
class IVOutcome:
    status: IVStatus
    sigma: float | None = None
    total_vol: float | None = None
    branch: RootBranch = RootBranch.NONE
    discriminant: float = math.nan
    # raw discriminant >= 0 up to rounding noise, before any opt-in repair
    has_real_roots: bool = False

    @property
    def solved(self) -> bool:
        return self.status is IVStatus.SOLVED


# -- vectorised kernels ------------------------------------------------------


def intermediates_arrays(
    spot: ArrayLike,
    strike: ArrayLike,
    rate: ArrayLike,
    tau: ArrayLike,
    alpha: ArrayLike,
    kind: OptionKind | str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(power_forward, discounted_strike, curvature_weight, log_moneyness)`` elementwise.

    The forward does not depend on the payoff kind, since the strike over its
    discounted value is exp(r tau) in both conventions.
    """
    kind = OptionKind.parse(kind)
    spot = np.asarray(spot, dtype=float)
    rate = np.asarray(rate, dtype=float)
    tau = np.asarray(tau, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    strike = np.asarray(strike, dtype=float)
    log_strike = np.log(strike)
    if kind is OptionKind.TYPE2:
        strike = np.power(strike, alpha)
        log_strike = alpha * log_strike
    rate_tau = rate * tau
    log_moneyness = alpha * np.log(spot) + alpha * rate_tau - log_strike
    # products rather than exp(log) so that alpha == 1 gives F == S exactly
    power_forward = np.power(spot, alpha) * np.exp((alpha - 1.0) * rate_tau)
    discounted_strike = strike * np.exp(-rate_tau)
    curvature_weight = 2.0 * alpha - 1.0 + (alpha - 1.0) * log_moneyness
    return power_forward, discounted_strike, curvature_weight, log_moneyness


def coefficient_arrays(
    power_forward: ArrayLike,
    discounted_strike: ArrayLike,
    curvature_weight: ArrayLike,
    log_moneyness: ArrayLike,
    call_price: ArrayLike,
    alpha: ArrayLike,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(a, b, c, discriminant)`` of the implied-vol quadratic."""
    power_forward = np.asarray(power_forward, dtype=float)
    discounted_strike = np.asarray(discounted_strike, dtype=float)
    log_moneyness = np.asarray(log_moneyness, dtype=float)
    # F - X taken from the log ratio so its sign always matches ln(F/X) and c >= 0
    gap = discounted_strike * np.expm1(log_moneyness)
    a = power_forward * np.asarray(curvature_weight, dtype=float) + discounted_strike
    b = SQRT_2PI * (gap - 2.0 * np.asarray(call_price, dtype=float))
    c = 2.0 * (log_moneyness / np.asarray(alpha, dtype=float)) * gap
    disc = b * b - 4.0 * a * c
    return a, b, c, disc


def solve_arrays(
    a: ArrayLike,
    b: ArrayLike,
    c: ArrayLike,
    disc: ArrayLike | None = None,
    clamp_discriminant: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Largest admissible root of ``a total_vol**2 + b total_vol + c`` elementwise.

    Returns ``(status, total_vol, branch)`` as int/float/int arrays; ``total_vol`` is NaN
    wherever ``status != SOLVED``.

    Selection rules:

    * ``a > 0``: needs ``disc >= 0`` and ``b < 0``; total_vol = (-b + sqrt(disc)) / (2a).
    * ``a < 0``: needs ``disc >= 0``; total_vol = (-b - sqrt(disc)) / (2a).
    * ``a == 0``: linear root ``-c / b`` if positive.

    ``clamp_discriminant`` replaces every negative discriminant by zero
    (the double-root repair); by default only rounding-level negatives are.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    a, b, c = np.broadcast_arrays(a, b, c)
    if disc is None:
        disc = b * b - 4.0 * a * c
    disc = np.broadcast_to(np.asarray(disc, dtype=float), a.shape)

    noise = (disc < 0) & (disc >= -DISCRIMINANT_NOISE * b * b)
    if clamp_discriminant:
        usable = np.where(disc < 0, 0.0, disc)
    else:
        usable = np.where(noise, 0.0, disc)
    negative = usable < 0
    root_disc = np.sqrt(np.where(negative, 0.0, usable))

    status = np.full(a.shape, IVStatus.SOLVED, dtype=np.int8)
    branch = np.full(a.shape, RootBranch.NONE, dtype=np.int8)
    total_vol = np.full(a.shape, np.nan)

    with np.errstate(divide="ignore", invalid="ignore"):
        pos = a > 0
        neg = a < 0
        lin = a == 0

        # a > 0: -b > 0 when admissible, so -b + sqrt(disc) has no cancellation
        root_plus = (-b + root_disc) / (2.0 * a)
        # a < 0: pick the cancellation-free form of the same root
        root_minus = np.where(b > 0, (-b - root_disc) / (2.0 * a), 2.0 * c / (-b + root_disc))
        root_linear = -c / b

    status[pos & negative] = IVStatus.NEGATIVE_DISCRIMINANT
    status[pos & ~negative & (b >= 0)] = IVStatus.WRONG_SIGN_CONDITION
    ok_plus = pos & ~negative & (b < 0)
    total_vol[ok_plus] = root_plus[ok_plus]
    branch[ok_plus] = RootBranch.PLUS

    status[neg & negative] = IVStatus.NEGATIVE_DISCRIMINANT
    ok_minus = neg & ~negative
    total_vol[ok_minus] = root_minus[ok_minus]
    branch[ok_minus] = RootBranch.MINUS

    ok_lin = lin & (b != 0)
    total_vol[ok_lin] = root_linear[ok_lin]
    branch[ok_lin] = RootBranch.LINEAR
    status[lin & (b == 0)] = IVStatus.DEGENERATE_LINEAR

    candidate = ok_plus | ok_minus | ok_lin
    bad_root = candidate & ~(np.isfinite(total_vol) & (total_vol > 0))
    status[bad_root & ~lin] = IVStatus.NON_POSITIVE_ROOT
    status[bad_root & lin] = IVStatus.DEGENERATE_LINEAR
    failed = status != IVStatus.SOLVED
    total_vol[failed] = np.nan
    branch[failed] = RootBranch.NONE
    return status, total_vol, branch


# -- scalar API --------------------------------------------------------------


def compute_intermediates(market: MarketState, spec: PowerOptionSpec) -> Intermediates:
    """Price-independent quantities of one quote; sigma is not needed."""
    if not market.tau > 0:
        raise NonPositiveTau(f"tau must be positive, got {market.tau}")
    power_forward, discounted_strike, curvature_weight, log_moneyness = intermediates_arrays(
        market.spot, spec.strike, market.rate, market.tau, spec.alpha, spec.kind
    )
    return Intermediates(float(power_forward), float(discounted_strike), float(curvature_weight), spec.kind, float(log_moneyness))


def quadratic_coefficients(inter: Intermediates, call_price: float, alpha: float) -> QuadraticIV:
    if not call_price > 0:
        raise ValueError(f"call_price must be positive, got {call_price}")
    a, b, c, disc = coefficient_arrays(inter.power_forward, inter.discounted_strike, inter.curvature_weight, inter.log_moneyness, call_price, alpha)
    return QuadraticIV(float(a), float(b), float(c), float(disc))


def solve_largest_admissible_root(
    quad: QuadraticIV,
    tau: float = 1.0,
    clamp_discriminant: bool = False,
) -> IVOutcome:
    """Pick the admissible largest root of ``quad`` and convert it to a volatility.

    ``tau`` only scales the result (sigma = total_vol / sqrt(tau)); the default of 1
    makes sigma equal to total_vol.
    """
    status, total_vol, branch = solve_arrays(quad.a, quad.b, quad.c, quad.discriminant, clamp_discriminant)
    status = IVStatus(int(status))
    real_roots = bool(real_roots_mask(quad.b, quad.discriminant))
    if status is not IVStatus.SOLVED:
        return IVOutcome(status=status, discriminant=quad.discriminant, has_real_roots=real_roots)
    total_vol_value = float(total_vol)
    return IVOutcome(
        status=status,
        sigma=total_vol_value / math.sqrt(tau),
        total_vol=total_vol_value,
        branch=RootBranch(int(branch)),
        discriminant=quad.discriminant,
        has_real_roots=real_roots,
    )


def implied_vol_closed_form(
    market: MarketState,
    spec: PowerOptionSpec,
    call_price: float,
    clamp_discriminant: bool = False,
) -> IVOutcome:
    """Closed-form implied volatility of a power call quote.

    Raises:
        NonPositiveTau: ``market.tau <= 0``.
    """
    inter = compute_intermediates(market, spec)
    quad = quadratic_coefficients(inter, call_price, spec.alpha)
    return solve_largest_admissible_root(quad, market.tau, clamp_discriminant)


def corrado_miller_vanilla(
    market: MarketState,
    strike: float,
    call_price: float,
    clamp_discriminant: bool = False,
) -> IVOutcome:
    """Corrado-Miller style estimate for a plain call (the ``alpha == 1`` case)."""
    return implied_vol_closed_form(market, PowerOptionSpec(1.0, strike), call_price, clamp_discriminant)


class ClosedFormBatch(NamedTuple):
    status: np.ndarray
    sigma: np.ndarray
    branch: np.ndarray
    discriminant: np.ndarray
    b: np.ndarray

    @property
    def real_roots(self) -> np.ndarray:
        """Raw discriminant non-negative, up to rounding noise; ignores any repair."""
        return real_roots_mask(self.b, self.discriminant)


def real_roots_mask(b: ArrayLike, disc: ArrayLike) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    disc = np.asarray(disc, dtype=float)
    return disc >= -DISCRIMINANT_NOISE * b * b


def implied_vol_closed_form_arrays(
    spot: ArrayLike,
    strike: float,
    rate: float,
    tau: ArrayLike,
    alpha: float,
    kind: OptionKind | str,
    call_price: ArrayLike,
    clamp_discriminant: bool = False,
) -> ClosedFormBatch:
    """Array form of :func:`implied_vol_closed_form`; ``tau`` must be positive."""
    power_forward, discounted_strike, curvature_weight, log_moneyness = intermediates_arrays(spot, strike, rate, tau, alpha, kind)
    a, b, c, disc = coefficient_arrays(power_forward, discounted_strike, curvature_weight, log_moneyness, call_price, alpha)
    status, total_vol, branch = solve_arrays(a, b, c, disc, clamp_discriminant)
    sigma = total_vol / np.sqrt(np.asarray(tau, dtype=float))
    return ClosedFormBatch(status, sigma, branch, disc, b)
