"""Exception hierarchy shared by the pricing, inversion and study modules."""


class PowerVolError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveTau(PowerVolError, ValueError):
    """Time to expiry is not strictly positive where a positive value is required."""


class MissingSigma(PowerVolError, ValueError):
    """A price was requested from a market state without a volatility."""


class NoBracket(PowerVolError, ValueError):
    """The target price is not attainable inside the (expanded) volatility bracket."""


class MaxIterations(PowerVolError, RuntimeError):
    """The iterative solver did not converge within its iteration budget."""


class UnsupportedFormat(PowerVolError, ValueError):
    """Requested output format is not one of the supported encodings."""
