"""European power call options: pricing, closed-form implied volatility, and a Monte-Carlo study."""

from .core_math import std_normal_cdf, std_normal_cdf_series
from .errors import MaxIterations, MissingSigma, NoBracket, NonPositiveTau, PowerVolError, UnsupportedFormat
from .iv_closed_form import (
    Intermediates,
    IVOutcome,
    IVStatus,
    QuadraticIV,
    RootBranch,
    compute_intermediates,
    corrado_miller_vanilla,
    implied_vol_closed_form,
    quadratic_coefficients,
    solve_largest_admissible_root,
)
from .iv_reference import SolverConfig, implied_vol_iterative
from .mc_study import (
    GbmPath,
    StudyConfig,
    StudyStats,
    emit_table,
    run_single_experiment,
    run_study,
    simulate_gbm_path,
)
from .pricing import (
    MarketState,
    OptionKind,
    PowerOptionSpec,
    PricingBreakdown,
    payoff_type1,
    payoff_type2,
    price_power_call,
    price_vanilla_call,
)

__version__ = "0.1.0"

__all__ = [
    "GbmPath",
    "IVOutcome",
    "IVStatus",
    "Intermediates",
    "MarketState",
    "MaxIterations",
    "MissingSigma",
    "NoBracket",
    "NonPositiveTau",
    "OptionKind",
    "PowerOptionSpec",
    "PowerVolError",
    "PricingBreakdown",
    "QuadraticIV",
    "RootBranch",
    "SolverConfig",
    "StudyConfig",
    "StudyStats",
    "UnsupportedFormat",
    "compute_intermediates",
    "corrado_miller_vanilla",
    "emit_table",
    "implied_vol_closed_form",
    "implied_vol_iterative",
    "payoff_type1",
    "payoff_type2",
    "price_power_call",
    "price_vanilla_call",
    "quadratic_coefficients",
    "run_single_experiment",
    "run_study",
    "simulate_gbm_path",
    "solve_largest_admissible_root",
    "std_normal_cdf",
    "std_normal_cdf_series",
]
