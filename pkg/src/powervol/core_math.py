"""Scalar numerical primitives: the standard normal CDF and its odd Taylor series.

``std_normal_cdf`` delegates to :func:`scipy.special.ndtr`, which evaluates the
CDF through Cephes' rational approximations of ``erf``/``erfc`` (relative error
near machine epsilon over the whole real line, hence absolute error well below
1e-12).  The truncated series is kept only to check the quadratic expansion
used by the closed-form inversion; nothing prices with it.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import log_ndtr, ndtr

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: ArrayLike) -> float | np.ndarray:
    """Standard normal CDF N(x).

    Accepts a scalar or an array; scalars come back as ``float``.
    """
    out = ndtr(x)
    if np.ndim(out) == 0:
        return float(out)
    return out


def log_std_normal_cdf(x: ArrayLike) -> float | np.ndarray:
    """log N(x), accurate in the far left tail where N(x) underflows."""
    out = log_ndtr(x)
    if np.ndim(out) == 0:
        return float(out)
    return out


def std_normal_cdf_series(x: float, num_terms: int) -> float:
    """Truncated Maclaurin series of N(x) around zero.

    N(x) ~ 1/2 + (x - x**3/6 + x**5/40 - x**7/336 + ...) / sqrt(2*pi)

    The k-th term (k = 0, 1, ...) is ``(-1)**k x**(2k+1) / (2**k k! (2k+1))``.

    Args:
        x: evaluation point.
        num_terms: number of odd-power terms kept (>= 1).

    Returns:
        The truncated sum. It converges to N(x) for every finite x, quickly
        for |x| <= 1.
    """
    if num_terms < 1:
        raise ValueError(f"num_terms must be >= 1, got {num_terms}")
    x = float(x)
    total = 0.0
    # power = x**(2k+1) / (2**k k!) built incrementally to avoid factorial overflow
    power = x
    for k in range(num_terms):
        total += power / (2 * k + 1)
        power *= -x * x / (2.0 * (k + 1))
    return 0.5 + INV_SQRT_2PI * total
