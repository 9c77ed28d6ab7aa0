"""Command-line front end: ``price``, ``iv`` and ``simulate``.

Exit codes: 0 success, 2 usage or configuration error, 3 the closed form has
no admissible root, 4 the iterative reference solver failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import secrets
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .errors import PowerVolError
from .iv_closed_form import IVOutcome, corrado_miller_vanilla, implied_vol_closed_form
from .iv_reference import SolverConfig, implied_vol_iterative
from .mc_study import StudyConfig, StudyTable, emit_table, read_config_file, run_study
from .pricing import MarketState, OptionKind, PowerOptionSpec, price_power_call

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_SOLUTION = 3
EXIT_ORACLE_FAILURE = 4


def _fmt(value: float | None) -> str:
    return "NA" if value is None else f"{value:.6g}"


def _positive_float(text: str) -> float:
    value = float(text)
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text!r}")
    return value


def _finite_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
    return value


def _non_negative_float(text: str) -> float:
    value = _finite_float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text!r}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"must be an unsigned 64-bit integer, got {text!r}")
    return value


def _add_contract_flags(parser: argparse.ArgumentParser, *, alpha_required: bool = True) -> None:
    parser.add_argument("--kind", type=OptionKind.parse, default=OptionKind.TYPE1, help="type1 or type2 (default type1)")
    parser.add_argument("--alpha", type=_positive_float, required=alpha_required, default=None, help="power exponent")
    parser.add_argument("--spot", type=_positive_float, required=True)
    parser.add_argument("--strike", type=_positive_float, required=True)
    parser.add_argument("--rate", type=_finite_float, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="powervol", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-cell diagnostics")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="{price,iv,simulate}")

    p_price = sub.add_parser("price", help="price one power call")
    _add_contract_flags(p_price)
    p_price.add_argument("--tau", type=_non_negative_float, required=True)
    p_price.add_argument("--sigma", type=_positive_float, required=True)
    p_price.add_argument("--json", action="store_true", help="machine-readable output")
    p_price.set_defaults(handler=cmd_price)

    p_iv = sub.add_parser("iv", help="closed-form implied volatility of one quote")
    _add_contract_flags(p_iv, alpha_required=False)
    p_iv.add_argument("--tau", type=_positive_float, required=True)
    p_iv.add_argument("--price", type=_positive_float, required=True)
    p_iv.add_argument("--check-iterative", action="store_true", help="also run the iterative reference solver")
    p_iv.add_argument("--corrado-miller", action="store_true", help="vanilla call (alpha = 1)")
    p_iv.add_argument("--clamp-discriminant", action="store_true", help="repair negative discriminants to zero")
    p_iv.add_argument("--json", action="store_true")
    p_iv.set_defaults(handler=cmd_iv)

    p_sim = sub.add_parser("simulate", help="run the Monte-Carlo study")
    p_sim.add_argument("--config", type=Path, help="flat key=value file; flags override it")
    p_sim.add_argument("--seed", type=_seed)
    p_sim.add_argument("--reps", type=int)
    p_sim.add_argument("--steps", type=int)
    p_sim.add_argument("--strikes")
    p_sim.add_argument("--alphas")
    p_sim.add_argument("--kinds")
    p_sim.add_argument("--spot", type=_positive_float, help="initial spot S0")
    p_sim.add_argument("--sigma", type=_non_negative_float, help="true volatility")
    p_sim.add_argument("--rate", type=_finite_float)
    p_sim.add_argument("--horizon", type=_positive_float, help="expiry T")
    p_sim.add_argument("--clamp-discriminant", action="store_true", default=None)
    p_sim.add_argument("--common-paths", action="store_true", default=None, help="reuse one set of paths for every cell")
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--out", type=Path, help="output file (default: standard output)")
    p_sim.add_argument("--json", action="store_true", help="JSON instead of CSV")
    p_sim.set_defaults(handler=cmd_simulate)
    return parser


def cmd_price(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    spec = PowerOptionSpec(args.alpha, args.strike, args.kind)
    market = MarketState(args.spot, args.rate, args.tau, args.sigma)
    result = price_power_call(market, spec)
    if args.json:
        payload = {
            "kind": spec.kind.value,
            "alpha": spec.alpha,
            "spot": market.spot,
            "strike": spec.strike,
            "rate": market.rate,
            "tau": market.tau,
            "sigma": market.sigma,
            "price": result.price,
            "d1": result.d1,
            "d2": result.d2,
        }
        print(json.dumps(payload))
    else:
        print(f"price  {_fmt(result.price)}")
        print(f"d1     {_fmt(result.d1)}")
        print(f"d2     {_fmt(result.d2)}")
    return EXIT_OK


def _outcome_fields(outcome: IVOutcome) -> dict[str, object]:
    return {
        "status": outcome.status.label,
        "sigma": outcome.sigma,
        "total_vol": outcome.total_vol,
        "branch": outcome.branch.label,
        "discriminant": outcome.discriminant,
    }


def cmd_iv(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.corrado_miller:
        if args.alpha not in (None, 1.0):
            parser.error("--corrado-miller implies --alpha 1")
        args.alpha = 1.0
    elif args.alpha is None:
        parser.error("the following arguments are required: --alpha")
    spec = PowerOptionSpec(args.alpha, args.strike, args.kind)
    market = MarketState(args.spot, args.rate, args.tau)
    if args.corrado_miller:
        outcome = corrado_miller_vanilla(market, args.strike, args.price, args.clamp_discriminant)
    else:
        outcome = implied_vol_closed_form(market, spec, args.price, args.clamp_discriminant)

    report = _outcome_fields(outcome)
    exit_code = EXIT_OK if outcome.solved else EXIT_NO_SOLUTION
    if args.check_iterative:
        try:
            reference = implied_vol_iterative(market, spec, args.price, SolverConfig())
        except PowerVolError as exc:
            report["iterative_sigma"] = None
            report["iterative_error"] = f"{type(exc).__name__}: {exc}"
            if exit_code == EXIT_OK:
                exit_code = EXIT_ORACLE_FAILURE
        else:
            report["iterative_sigma"] = reference
            report["gap"] = None if outcome.sigma is None else outcome.sigma - reference

    if args.json:
        print(json.dumps(report))
    else:
        for key, value in report.items():
            shown = _fmt(value) if isinstance(value, float) or value is None else str(value)
            print(f"{key:<16}{shown}")
    if not outcome.solved:
        print(f"no admissible root: {outcome.status.label}", file=sys.stderr)
    elif exit_code == EXIT_ORACLE_FAILURE:
        print(f"iterative solver failed: {report['iterative_error']}", file=sys.stderr)
    return exit_code


def _study_config(args: argparse.Namespace) -> tuple[StudyConfig, bool]:
    settings: dict[str, object] = {}
    if args.config is not None:
        settings.update(read_config_file(args.config))
    flag_values = {
        "seed": args.seed,
        "reps": args.reps,
        "steps": args.steps,
        "strikes": args.strikes,
        "alphas": args.alphas,
        "kinds": args.kinds,
        "spot": args.spot,
        "sigma": args.sigma,
        "rate": args.rate,
        "horizon": args.horizon,
        "clamp_discriminant": args.clamp_discriminant,
        "common_paths": args.common_paths,
    }
    settings.update({k: v for k, v in flag_values.items() if v is not None})
    seeded = "seed" in {k.strip().lower() for k in settings}
    if not seeded:
        settings["seed"] = secrets.randbits(64)
    return StudyConfig.from_mapping(settings), seeded


def render_summary(results: StudyTable, config: StudyConfig) -> str:
    lines = [f"seed {config.seed}  reps {config.num_reps}  steps {config.num_steps}"]
    header = "K       stat        " + "".join(f"{a:>12.6g}" for a in config.alphas)
    for kind in config.kinds:
        lines.append("")
        lines.append(f"[{kind.value}]")
        lines.append(header)
        for strike in config.strikes:
            for stat, label in (("dnr", "dnr"), ("mean_sigma", "mean_sigma"), ("std_sigma", "std_sigma")):
                cells = [getattr(results[(kind, strike, alpha)], stat) for alpha in config.alphas]
                lines.append(f"{strike:<8.6g}{label:<12}" + "".join(f"{_fmt(v):>12}" for v in cells))
    return "\n".join(lines)


def cmd_simulate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.workers < 1:
        parser.error("argument --workers: must be a positive integer")
    try:
        config, seeded = _study_config(args)
    except (ValueError, OSError) as exc:
        parser.error(f"invalid study configuration: {exc}")
    if not seeded:
        print(f"no --seed given; using seed {config.seed}", file=sys.stderr)
    results = run_study(config, workers=args.workers)
    table = emit_table(results, "json" if args.json else "csv")
    summary = render_summary(results, config)
    if args.out is None:
        sys.stdout.buffer.write(table)
        sys.stdout.flush()
        print(summary, file=sys.stderr)
    else:
        args.out.write_bytes(table)
        print(summary)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    sub = parser._subparsers._group_actions[0].choices[args.verb]  # type: ignore[union-attr]
    try:
        return args.handler(args, sub)
    except PowerVolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        sub.error(str(exc))
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
