"""
Accuracy sweeps over (n, ρ, engine) grids.

A SweepSpec names one family, the voter counts, a ρ grid (or an ε grid that
is converted once), and the engines to run. Cells are independent and may run
on a thread pool; rows are always emitted in grid order: n, then ρ, then engine.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from noisy_choice.accuracy import (
    CLOSED_FORM_KINDS,
    AccuracyReport,
    accuracy_closed_form,
    accuracy_dp,
    accuracy_exact,
    accuracy_via_level_sets,
    majority_bounds,
)
from noisy_choice.bf_core import make_family
from noisy_choice.config import get_settings
from noisy_choice.corpus import canonical_family
from noisy_choice.formats import SWEEP_FORMATS, SweepRow, dump_sweep, load_sweep
from noisy_choice.montecarlo import EstimatorConfig, family_evaluator, mc_accuracy
from noisy_choice.noise import RhoParam, rho_of_epsilon
from noisy_choice.utils import prepare_output_path, validate_file_path, write_text

logger = logging.getLogger(__name__)

ENGINES = ("closed_form", "exact_spectral", "exact_level_sets", "dp_memo", "monte_carlo")
DP_KINDS = ("majority", "threshold")
DEFAULT_SAMPLES = 100_000


@dataclass
class SweepSpec:
    """
    One sweep: a family, its parameters, the grids and the engines.

    Exactly one of rho_grid / epsilon_grid is set.
    """
    family: str
    n_grid: list[int]
    engines: list[str]
    rho_grid: Optional[list[float]] = None
    epsilon_grid: Optional[list[float]] = None
    params: dict[str, Any] = field(default_factory=dict)
    name: str = "unnamed_sweep"
    seed: Optional[int] = None
    samples: int = DEFAULT_SAMPLES
    output_path: Optional[str] = None
    output_format: str = "csv"
    bound_constant: Optional[float] = None

    def __post_init__(self):
        self.family = canonical_family(self.family)
        if not self.n_grid:
            raise ValueError("n_grid must not be empty")
        if (self.rho_grid is None) == (self.epsilon_grid is None):
            raise ValueError("Specify exactly one of rho_grid or epsilon_grid")
        grid = self.rho_grid if self.rho_grid is not None else self.epsilon_grid
        if not grid:
            raise ValueError("The rho/epsilon grid must not be empty")
        if not self.engines:
            raise ValueError("engines must not be empty")
        for position, engine in enumerate(self.engines, start=1):
            if engine not in ENGINES:
                raise ValueError(
                    f"Unknown engine '{engine}' at position {position}. "
                    f"Available engines: {', '.join(ENGINES)}"
                )
        if "closed_form" in self.engines and self.family not in CLOSED_FORM_KINDS:
            raise ValueError(
                f"Engine 'closed_form' supports {', '.join(CLOSED_FORM_KINDS)}, not '{self.family}'"
            )
        if "dp_memo" in self.engines and self.family not in DP_KINDS:
            raise ValueError(f"Engine 'dp_memo' supports {', '.join(DP_KINDS)}, not '{self.family}'")
        if self.output_format not in SWEEP_FORMATS:
            raise ValueError(
                f"Unknown output format '{self.output_format}'. Available formats: {', '.join(SWEEP_FORMATS)}"
            )
        if self.seed is None:
            self.seed = get_settings().seed

    def rhos(self) -> list[RhoParam]:
        if self.rho_grid is not None:
            return [RhoParam(float(rho)) for rho in self.rho_grid]
        return [rho_of_epsilon(float(eps)) for eps in self.epsilon_grid]

    def cells(self) -> list[tuple[int, RhoParam, str]]:
        return [
            (int(n), rho, engine)
            for n in self.n_grid
            for rho in self.rhos()
            for engine in self.engines
        ]


def _expand_grid(value: Any, key: str) -> list:
    if isinstance(value, dict):
        missing = [k for k in ("start", "stop") if k not in value]
        if missing:
            raise KeyError(f"Range for '{key}' is missing: {', '.join(missing)}")
        start, stop, step = value["start"], value["stop"], value.get("step", 1)
        if step <= 0:
            raise ValueError(f"Range step for '{key}' must be positive, got {step}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(max(0, count))]
    if isinstance(value, list):
        return value
    raise ValueError(f"'{key}' must be a list or a {{start, stop, step}} mapping")


def build_sweep_from_config(config: dict[str, Any]) -> SweepSpec:
    """
    Build a SweepSpec from a configuration dictionary.

    The config should have the structure:
        {
            "sweep": {
                "name": "majority_curves",
                "family": "majority",
                "params": {},
                "n_grid": {"start": 3, "stop": 101, "step": 2},
                "rho_grid": [0.9],
                "engines": ["dp_memo"],
                "output": {"path": "out.csv", "format": "csv"}
            }
        }

    Raises:
        KeyError: If required keys are missing
        ValueError: If values are invalid
    """
    if "sweep" not in config:
        raise KeyError("Configuration must contain a 'sweep' key")
    sweep_config = config["sweep"]
    for key in ("family", "n_grid", "engines"):
        if key not in sweep_config:
            raise KeyError(f"Sweep configuration must contain '{key}'")
    if "rho_grid" in sweep_config and "epsilon_grid" in sweep_config:
        raise ValueError("Sweep configuration mixes rho_grid and epsilon_grid")

    output = sweep_config.get("output") or {}
    spec = SweepSpec(
        name=sweep_config.get("name", "unnamed_sweep"),
        family=sweep_config["family"],
        params=dict(sweep_config.get("params") or {}),
        n_grid=[int(n) for n in _expand_grid(sweep_config["n_grid"], "n_grid")],
        rho_grid=(
            _expand_grid(sweep_config["rho_grid"], "rho_grid")
            if "rho_grid" in sweep_config else None
        ),
        epsilon_grid=(
            _expand_grid(sweep_config["epsilon_grid"], "epsilon_grid")
            if "epsilon_grid" in sweep_config else None
        ),
        engines=list(sweep_config["engines"]),
        seed=sweep_config.get("seed"),
        samples=int(sweep_config.get("samples", DEFAULT_SAMPLES)),
        output_path=output.get("path"),
        output_format=output.get("format", "csv"),
        bound_constant=sweep_config.get("bound_constant"),
    )
    logger.info(f"Built sweep '{spec.name}' with {len(spec.cells())} cells")
    return spec


def _report(spec: SweepSpec, n: int, rho: RhoParam, engine: str) -> AccuracyReport:
    params = spec.params
    if engine == "closed_form":
        return accuracy_closed_form(spec.family, n, rho)
    if engine == "dp_memo":
        theta = 0 if spec.family == "majority" else int(params["theta"])
        if spec.family == "majority" and n % 2 == 0:
            raise ValueError(f"Majority needs an odd number of voters, got n={n}")
        return accuracy_dp(theta, n, rho)
    if engine == "monte_carlo":
        if rho.rho == 1.0:
            logger.warning("Monte-Carlo at rho=1 samples a noiseless mechanism; the estimate is exactly 1")
        cfg = EstimatorConfig(samples=spec.samples, seed=spec.seed)
        return mc_accuracy(family_evaluator(spec.family, n, **params), n, rho, cfg)
    table = make_family(spec.family, n, **params)
    if engine == "exact_level_sets":
        return accuracy_via_level_sets(table, rho)
    return accuracy_exact(table, rho)


def run_cell(spec: SweepSpec, n: int, rho: RhoParam, engine: str) -> SweepRow:
    report = _report(spec, n, rho, engine)
    lower = upper = None
    if spec.family == "majority" and n % 2 == 1 and rho.rho < 1.0:
        lower, upper = majority_bounds(n, rho, spec.bound_constant)
    logger.debug(f"Cell n={n} rho={rho.rho} engine={engine}: accuracy {report.accuracy}")
    return SweepRow(
        family=spec.family,
        n=n,
        rho=float(rho.rho),
        method=report.method,
        accuracy=float(report.accuracy),
        stability=float(report.stability),
        lower_bound=lower,
        upper_bound=upper,
        ci_halfwidth=None if report.ci_halfwidth is None else float(report.ci_halfwidth),
    )


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Evaluate every cell; rows come back in grid order regardless of workers."""
    cells = spec.cells()
    logger.info(f"Sweep '{spec.name}' starting: {len(cells)} cells, {workers} worker(s)")
    if "monte_carlo" in spec.engines:
        logger.info(f"Sweep '{spec.name}' uses seed {spec.seed}")

    def run(cell: tuple[int, RhoParam, str]) -> SweepRow:
        return run_cell(spec, *cell)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(cell) for cell in cells]

    logger.info(f"Sweep '{spec.name}' completed with {len(rows)} rows")
    return rows


def write_sweep(rows: list[SweepRow], path: str, fmt: str = "csv") -> Path:
    target = prepare_output_path(path)
    write_text(target, dump_sweep(rows, fmt))
    return target


def read_sweep(path: str, fmt: Optional[str] = None) -> list[SweepRow]:
    """Read a sweep file; the format defaults to the file suffix."""
    resolved = validate_file_path(path)
    fmt = fmt or resolved.suffix.lstrip(".").lower()
    return load_sweep(resolved.read_text(encoding="utf-8"), fmt)
