"""Monte-Carlo study of the closed-form implied-volatility estimator.

For every repetition a GBM path with ``num_steps`` steps is drawn.  At step
``i = 1..N`` the option is priced with the true volatility using the spot at
``t_{i-1}`` and ``tau_i = T - (i-1) T / N``, and the closed form inverts that
price.  Per path we record

* ``dnr``: share of steps whose quadratic has real roots,
* ``mean_sigma``: mean of the solved estimates,
* ``std_sigma``: their root-mean-square deviation (1/L normalisation),

and each table cell averages these over ``num_reps`` repetitions.

Random streams
--------------
Repetition ``m`` of the cell (K, alpha) draws from ``Philox4x64`` keyed by
``SeedSequence(seed, spawn_key=(m, bits(K), bits(alpha)))``, where ``bits``
is the IEEE-754 pattern of the value.  Cells are therefore independent, and a
cell's result does not depend on which other cells are run or in what
order.  The option kind is never part of the key, so both kinds of one
(K, alpha) cell see the same paths.  Uniforms on a 2**-52 midpoint grid are
mapped to normals by inversion (:func:`scipy.special.ndtri`).

``common_paths=True`` drops the cell from the key: every cell then reuses
the repetition paths (common random numbers).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections.abc import Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .errors import UnsupportedFormat
from .iv_closed_form import IVStatus, RootBranch, implied_vol_closed_form_arrays
from .pricing import OptionKind, PowerOptionSpec, power_call_arrays

logger = logging.getLogger(__name__)

STREAM_SCHEME = "philox4x64/seedsequence-spawn/ndtri-inversion/v1"

DEFAULT_ALPHAS = (0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0)
DEFAULT_STRIKES = (0.9, 1.0, 1.01)

_UNIFORM_BITS = 52


@dataclass(frozen=True)
class StudyConfig:
    s0: float = 1.0
    horizon: float = 1.0
    true_sigma: float = 0.15
    rate: float = 0.001
    num_steps: int = 100
    num_reps: int = 100
    seed: int = 0
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    strikes: tuple[float, ...] = DEFAULT_STRIKES
    kinds: tuple[OptionKind, ...] = (OptionKind.TYPE1, OptionKind.TYPE2)
    common_paths: bool = False
    clamp_discriminant: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "strikes", tuple(float(k) for k in self.strikes))
        object.__setattr__(self, "kinds", tuple(OptionKind.parse(k) for k in self.kinds))
        if not self.s0 > 0:
            raise ValueError(f"s0 must be positive, got {self.s0}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if not self.true_sigma >= 0:
            raise ValueError(f"true_sigma must be non-negative, got {self.true_sigma}")
        if not math.isfinite(self.rate):
            raise ValueError(f"rate must be finite, got {self.rate}")
        if self.num_steps < 1 or self.num_reps < 1:
            raise ValueError("num_steps and num_reps must be positive integers")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.alphas or any(not a > 0 for a in self.alphas):
            raise ValueError("alphas must be a non-empty list of positive numbers")
        if not self.strikes or any(not k > 0 for k in self.strikes):
            raise ValueError("strikes must be a non-empty list of positive numbers")
        if not self.kinds:
            raise ValueError("kinds must not be empty")

    @classmethod
    def from_mapping(cls, values: Mapping[str, object], base: "StudyConfig | None" = None) -> "StudyConfig":
        """Build a config from flat ``key -> value`` pairs (strings allowed).

        Keys follow the command-line flag names (``spot``, ``sigma``, ``steps``,
        ``reps``, ...); field names are accepted too.  List values may be
        comma-separated strings.
        """
        base = base or cls()
        updates: dict[str, object] = {}
        for raw_key, value in values.items():
            key = raw_key.strip().lower().replace("-", "_")
            name = _KEY_ALIASES.get(key, key)
            if name not in _FIELD_TYPES:
                raise ValueError(f"unknown study setting {raw_key!r}")
            updates[name] = _coerce(name, value)
        return replace(base, **updates)


_KEY_ALIASES = {
    "spot": "s0",
    "sigma": "true_sigma",
    "tau": "horizon",
    "steps": "num_steps",
    "reps": "num_reps",
}
_FIELD_TYPES = {f.name: f.type for f in fields(StudyConfig)}


def _split(value: object) -> list[str]:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return [str(v) for v in value]  # type: ignore[union-attr]


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(name: str, value: object) -> object:
    if name in {"alphas", "strikes"}:
        return tuple(float(v) for v in _split(value))
    if name == "kinds":
        return tuple(OptionKind.parse(v) for v in _split(value))
    if name in {"num_steps", "num_reps", "seed"}:
        return int(str(value).strip())
    if name in {"common_paths", "clamp_discriminant"}:
        return value if isinstance(value, bool) else _parse_bool(str(value))
    return float(str(value).strip())


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    settings: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        settings[key.strip()] = value.strip()
    return settings


# -- random streams and paths --------------------------------------------------


def _float_key(value: float) -> int:
    return int(np.float64(value).view(np.uint64))


def rep_stream(seed: int, rep: int, strike: float | None = None, alpha: float | None = None) -> np.random.Generator:
    """Generator for one repetition, optionally specialised to one cell."""
    key: tuple[int, ...] = (rep,)
    if strike is not None and alpha is not None:
        key += (_float_key(strike), _float_key(alpha))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def standard_normals(rng: np.random.Generator, size: int) -> np.ndarray:
    """N(0, 1) draws by inverse-CDF on midpoints of a 2**-52 grid (never 0 or 1)."""
    ints = rng.integers(0, 2**_UNIFORM_BITS, size=size, dtype=np.uint64)
    uniforms = (ints.astype(np.float64) + 0.5) * 2.0**-_UNIFORM_BITS
    return ndtri(uniforms)


@dataclass(frozen=True)
class GbmPath:
    times: np.ndarray
    values: np.ndarray


def simulate_gbm_path(config: StudyConfig, rng_stream: np.random.Generator) -> GbmPath:
    """Exact lognormal discretisation of dS/S = r dt + sigma dB on a uniform grid.

    S(t_i) = s0 exp((r - sigma**2/2) t_i + sigma B(t_i)), with Brownian
    increments N(0, T/N).
    """
    n = config.num_steps
    times = np.linspace(0.0, config.horizon, n + 1)
    increments = math.sqrt(config.horizon / n) * standard_normals(rng_stream, n)
    brownian = np.concatenate(([0.0], np.cumsum(increments)))
    sigma = config.true_sigma
    log_growth = (config.rate - 0.5 * sigma * sigma) * times + sigma * brownian
    return GbmPath(times=times, values=config.s0 * np.exp(log_growth))


# -- one experiment --------------------------------------------------------------


@dataclass(frozen=True)
class StudyStats:
    """Summary of one simulated path for one contract."""

    dnr: float
    mean_sigma: float | None
    std_sigma: float | None
    usable: int
    solved: int
    num_steps: int
    branch_counts: dict[str, int] = field(default_factory=dict)
    estimates: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False, compare=False)


def experiment_on_path(path: GbmPath, config: StudyConfig, spec: PowerOptionSpec) -> StudyStats:
    """Price along ``path`` with the true sigma and invert every price."""
    n = config.num_steps
    spots = path.values[:n]
    taus = config.horizon - path.times[:n]
    _, _, prices = power_call_arrays(
        spots, spec.effective_strike, config.rate, taus, config.true_sigma, spec.alpha
    )
    batch = implied_vol_closed_form_arrays(
        spots, spec.strike, config.rate, taus, spec.alpha, spec.kind, prices, config.clamp_discriminant
    )
    usable = int(np.count_nonzero(batch.real_roots))
    estimates = batch.sigma[batch.status == IVStatus.SOLVED]
    branch = batch.branch
    counts = {
        b.label: int(np.count_nonzero(branch == b))
        for b in (RootBranch.PLUS, RootBranch.MINUS, RootBranch.LINEAR)
    }
    if estimates.size:
        mean = float(np.mean(estimates))
        std = float(np.sqrt(np.mean((estimates - mean) ** 2)))
    else:
        mean = std = None
    return StudyStats(
        dnr=usable / n,
        mean_sigma=mean,
        std_sigma=std,
        usable=usable,
        solved=int(estimates.size),
        num_steps=n,
        branch_counts=counts,
        estimates=estimates,
    )


def run_single_experiment(
    config: StudyConfig, spec: PowerOptionSpec, rng_stream: np.random.Generator
) -> StudyStats:
    """Simulate one path from ``rng_stream`` and summarise the estimator on it."""
    return experiment_on_path(simulate_gbm_path(config, rng_stream), config, spec)


# -- full study -----------------------------------------------------------------


@dataclass(frozen=True)
class CellStats:
    """Averages over repetitions for one (kind, strike, alpha) cell."""

    kind: OptionKind
    strike: float
    alpha: float
    dnr: float
    mean_sigma: float | None
    std_sigma: float | None
    reps: int
    reps_with_estimates: int
    solved_fraction: float
    branch_counts: dict[str, int]


StudyTable = dict[tuple[OptionKind, float, float], CellStats]


def _aggregate(spec: PowerOptionSpec, runs: list[StudyStats]) -> CellStats:
    with_estimates = [s for s in runs if s.mean_sigma is not None]
    counts: dict[str, int] = {}
    for s in runs:
        for label, count in s.branch_counts.items():
            counts[label] = counts.get(label, 0) + count
    # math.fsum over a fixed repetition order keeps the averages order-exact
    return CellStats(
        kind=spec.kind,
        strike=spec.strike,
        alpha=spec.alpha,
        # integer totals: the mean of usable/N over reps, without float accumulation
        dnr=sum(s.usable for s in runs) / sum(s.num_steps for s in runs),
        mean_sigma=(math.fsum(s.mean_sigma for s in with_estimates) / len(with_estimates)) if with_estimates else None,
        std_sigma=(math.fsum(s.std_sigma for s in with_estimates) / len(with_estimates)) if with_estimates else None,
        reps=len(runs),
        reps_with_estimates=len(with_estimates),
        solved_fraction=sum(s.solved for s in runs) / sum(s.num_steps for s in runs),
        branch_counts=counts,
    )


def _cell_paths(config: StudyConfig, spec: PowerOptionSpec) -> Iterable[GbmPath]:
    for rep in range(config.num_reps):
        yield simulate_gbm_path(config, rep_stream(config.seed, rep, spec.strike, spec.alpha))


def run_cell(config: StudyConfig, spec: PowerOptionSpec, paths: list[GbmPath] | None = None) -> CellStats:
    """Run all repetitions for one contract.

    ``paths`` may supply the shared repetition paths; otherwise they are
    regenerated from the seed.
    """
    if paths is None:
        paths = list(_cell_paths(config, spec)) if not config.common_paths else common_paths(config)
    runs = [experiment_on_path(path, config, spec) for path in paths]
    cell = _aggregate(spec, runs)
    logger.info(
        "cell kind=%s K=%r alpha=%r dnr=%.4f branches=%s",
        spec.kind.value,
        spec.strike,
        spec.alpha,
        cell.dnr,
        cell.branch_counts,
    )
    return cell


def common_paths(config: StudyConfig) -> list[GbmPath]:
    return [simulate_gbm_path(config, rep_stream(config.seed, rep)) for rep in range(config.num_reps)]


def study_specs(config: StudyConfig) -> list[PowerOptionSpec]:
    """Contracts of the study grid in table order (kind, strike, alpha)."""
    return [
        PowerOptionSpec(alpha=alpha, strike=strike, kind=kind)
        for kind in config.kinds
        for strike in config.strikes
        for alpha in config.alphas
    ]


def run_study(config: StudyConfig, workers: int = 1) -> StudyTable:
    """Average the per-path indexes over ``num_reps`` repetitions for every cell.

    Cells may be evaluated on ``workers`` threads; the table is identical
    for any worker count.
    """
    specs = study_specs(config)
    shared = common_paths(config) if config.common_paths else None

    def work(spec: PowerOptionSpec) -> CellStats:
        return run_cell(config, spec, shared if shared is not None else list(_cell_paths(config, spec)))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(work, specs))
    else:
        cells = [work(spec) for spec in specs]
    return {(c.kind, c.strike, c.alpha): c for c in cells}


# -- output ------------------------------------------------------------------------


class TableFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


TABLE_COLUMNS = ("kind", "K", "alpha", "dnr", "mean_sigma", "std_sigma")
NA = "NA"


def _table_rows(results: StudyTable) -> list[dict[str, object]]:
    return [
        {
            "kind": cell.kind.value,
            "K": cell.strike,
            "alpha": cell.alpha,
            "dnr": cell.dnr,
            "mean_sigma": cell.mean_sigma,
            "std_sigma": cell.std_sigma,
        }
        for cell in results.values()
    ]


def _csv_field(value: object) -> str:
    if value is None:
        return NA
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_table(results: StudyTable, format: TableFormat | str = TableFormat.CSV) -> bytes:
    """Serialise a study table.

    Rows follow the table's insertion order; floats are written with full
    round-trip precision.  Missing estimates are ``NA`` in CSV and ``null``
    in JSON.
    """
    try:
        fmt = TableFormat(str(getattr(format, "value", format)).lower())
    except ValueError:
        raise UnsupportedFormat(f"unsupported table format {format!r}; use 'csv' or 'json'") from None
    if not results:
        raise ValueError("cannot emit an empty study table")
    rows = _table_rows(results)
    if fmt is TableFormat.JSON:
        return (json.dumps(rows, indent=2) + "\n").encode("utf-8")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for row in rows:
        writer.writerow([_csv_field(row[col]) for col in TABLE_COLUMNS])
    return buffer.getvalue().encode("utf-8")
