"""
CLI interface for noisy_choice.

Analyzes social choice functions under the ρ-correlated noisy mechanism,
writes spectra and accuracy sweeps, runs the verification suite and audits
privacy. Every command that takes ρ also takes ε.
"""

import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator, Optional

import typer
import yaml

from noisy_choice.accuracy import CLOSED_FORM_KINDS, accuracy_closed_form, accuracy_exact
from noisy_choice.analysis import (
    influence_profile,
    mechanism_welfare,
    probabilistic_influence,
    welfare,
)
from noisy_choice.bf_core import TruthTable, make_family, wht
# Import built-in checks to auto-register them
import noisy_choice.checks  # noqa: F401
from noisy_choice.checks.common import DEFAULT_MAX_N, build_context
from noisy_choice.config import (
    CapExceededError,
    build_suite_from_config,
    default_suite,
    get_settings,
    load_config,
)
from noisy_choice.corpus import canonical_family, family_label
from noisy_choice.formats import (
    SWEEP_FORMATS,
    TableFormatError,
    dump_sweep,
    metric_record,
    parse_table_string,
    records_to_json,
    spectrum_to_csv,
    to_table_string,
)
from noisy_choice.noise import RhoParam, rho_of_epsilon
from noisy_choice.privacy_audit import audit as run_audit
from noisy_choice.sweep import DEFAULT_SAMPLES, SweepSpec, build_sweep_from_config, run_sweep
from noisy_choice.utils import prepare_output_path, validate_file_path, write_text

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_VERIFICATION = 3
EXIT_CAP = 4

app = typer.Typer(help="noisy_choice - privacy, welfare and accuracy of noisy social choice")


def safe_echo(text: str, **kwargs):
    """
    Echo text to console, falling back to ASCII if Unicode fails.

    Greek letters and status marks are replaced when the console encoding
    cannot represent them.
    """
    try:
        typer.echo(text, **kwargs)
    except UnicodeEncodeError:
        ascii_text = (
            text.replace("ρ", "rho").replace("ε", "eps").replace("≤", "<=")
            .replace("✅", "[OK]").replace("❌", "[FAIL]").replace("→", "->")
        )
        typer.echo(ascii_text.encode("ascii", "replace").decode("ascii"), **kwargs)


def print_banner():
    safe_echo("== noisy_choice ==")
    typer.echo()


def _set_verbosity(verbose: bool) -> None:
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        logging.getLogger("noisy_choice").setLevel(logging.DEBUG)


def _fail(message: str, code: int):
    safe_echo(f"Error: {message}", err=True)
    raise typer.Exit(code=code)


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Translate library errors into the CLI's exit codes."""
    try:
        yield
    except typer.Exit:
        raise
    except CapExceededError as e:
        logger.debug(f"Cap exceeded: {e}")
        _fail(str(e), EXIT_CAP)
    except TableFormatError as e:
        _fail(f"Invalid table string: {e}", EXIT_USAGE)
    except PermissionError as e:
        _fail(f"Cannot write output: {e}", EXIT_USAGE)
    except FileNotFoundError as e:
        _fail(str(e), EXIT_USAGE)
    except yaml.YAMLError as e:
        _fail(f"Failed to load config: {e}", EXIT_USAGE)
    except (ValueError, KeyError, TypeError) as e:
        _fail(str(e), EXIT_USAGE)


def _resolve_rho(rho: Optional[float], epsilon: Optional[float]) -> RhoParam:
    if rho is not None and epsilon is not None:
        _fail("--rho and --epsilon are mutually exclusive", EXIT_USAGE)
    if rho is None and epsilon is None:
        _fail("One of --rho or --epsilon is required", EXIT_USAGE)
    if epsilon is not None:
        param = rho_of_epsilon(epsilon)
        logger.info(f"epsilon={epsilon} resolves to rho={param.rho}")
        return param
    return RhoParam(rho)


@dataclass(frozen=True)
class ResolvedFunction:
    label: str
    kind: Optional[str]
    table: TruthTable


def _resolve_function(
    function: Optional[str],
    n: Optional[int],
    i: Optional[int],
    theta: Optional[float],
    value: int,
    table_file: Optional[str],
) -> ResolvedFunction:
    """Label and table for a family name, a bf:v1 string or a file holding one."""
    if table_file is not None:
        text = validate_file_path(table_file).read_text(encoding="utf-8")
        return ResolvedFunction("table", None, parse_table_string(text))
    if function is None:
        _fail("Give a family name, a bf:v1 table string or --table-file", EXIT_USAGE)
    if function.startswith("bf:"):
        return ResolvedFunction("table", None, parse_table_string(function))

    kind = canonical_family(function)
    if n is None:
        _fail(f"Family '{kind}' needs --n", EXIT_USAGE)
    if kind == "dictator" and i is None:
        i = 1
    params = {"i": i, "theta": theta, "value": value}
    table = make_family(kind, n, i=i, theta=theta, value=value)
    return ResolvedFunction(family_label(kind, n, params), kind, table)


def _format_float(value: float) -> str:
    return "inf" if math.isinf(value) else repr(float(value))


def _analysis_records(resolved: ResolvedFunction, param: RhoParam) -> list[dict]:
    label, f, rho = resolved.label, resolved.table, param.rho
    profile = influence_profile(f)
    noisy = [probabilistic_influence(f, i, param) for i in range(1, f.n + 1)]
    report = accuracy_exact(f, param)
    epsilon = param.epsilon()
    records = [
        metric_record(label, f.n, None, "influence", list(profile.per_voter), "exact"),
        metric_record(label, f.n, None, "total_influence", profile.total, "exact"),
        metric_record(label, f.n, rho, "probabilistic_influence", noisy, "exact"),
        metric_record(label, f.n, rho, "total_probabilistic_influence", float(sum(noisy)), "exact"),
        metric_record(label, f.n, None, "welfare", welfare(f).value, "exact"),
        metric_record(label, f.n, rho, "mechanism_welfare", mechanism_welfare(f, param).value, "exact"),
        metric_record(label, f.n, rho, "stability", report.stability, report.method),
        metric_record(label, f.n, rho, "accuracy", report.accuracy, report.method),
    ]
    if resolved.kind in CLOSED_FORM_KINDS:
        closed = accuracy_closed_form(resolved.kind, f.n, param)
        records.append(metric_record(label, f.n, rho, "accuracy", closed.accuracy, closed.method))
    # JSON has no infinity; an unbounded ε is reported as null
    records.append(metric_record(
        label, f.n, rho, "epsilon", None if math.isinf(epsilon) else epsilon, "closed_form",
    ))
    return records


@app.command()
def analyze(
    function: Optional[str] = typer.Argument(None, help="Family (maj, dict, and, or, thr, parity, const) or a bf:v1 string"),
    n: Optional[int] = typer.Option(None, "--n", help="Number of voters for a family"),
    i: Optional[int] = typer.Option(None, "--i", help="Dictator voter index (1-based)"),
    theta: Optional[float] = typer.Option(None, "--theta", help="Threshold θ for the threshold family"),
    value: int = typer.Option(1, "--value", help="Output of the constant family"),
    table_file: Optional[str] = typer.Option(None, "--table-file", help="File containing a bf:v1 string"),
    rho: Optional[float] = typer.Option(None, "--rho", help="Noise parameter ρ in [0, 1]"),
    epsilon: Optional[float] = typer.Option(None, "--epsilon", help="Privacy level ε >= 0 (converted to ρ)"),
    json_output: bool = typer.Option(False, "--json", help="Emit JSON records instead of text"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable debug logging"),
):
    """
    Influence, welfare, stability, accuracy and ε of one function.
    """
    _set_verbosity(verbose)
    with _exit_codes():
        param = _resolve_rho(rho, epsilon)
        resolved = _resolve_function(function, n, i, theta, value, table_file)
        records = _analysis_records(resolved, param)

    if json_output:
        typer.echo(records_to_json(records))
        return

    print_banner()
    f = resolved.table
    safe_echo(f"Function: {resolved.label} (n={f.n})")
    if f.n <= 8:
        safe_echo(f"Table: {to_table_string(f)}")
    safe_echo(f"ρ = {param.rho!r}  ε = {_format_float(param.epsilon())}")
    typer.echo()
    for record in records:
        shown = record["value"]
        if isinstance(shown, list):
            shown = "[" + ", ".join(repr(float(v)) for v in shown) + "]"
        elif shown is None:
            shown = "inf"
        safe_echo(f"  {record['metric']:<30} {shown}  ({record['method']})")


@app.command()
def spectrum(
    function: Optional[str] = typer.Argument(None, help="Family name or bf:v1 string"),
    n: Optional[int] = typer.Option(None, "--n", help="Number of voters for a family"),
    i: Optional[int] = typer.Option(None, "--i", help="Dictator voter index (1-based)"),
    theta: Optional[float] = typer.Option(None, "--theta", help="Threshold θ"),
    value: int = typer.Option(1, "--value", help="Output of the constant family"),
    table_file: Optional[str] = typer.Option(None, "--table-file", help="File containing a bf:v1 string"),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="CSV path (stdout if omitted)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable debug logging"),
):
    """
    Write the Fourier spectrum of a function as mask,coefficient CSV.
    """
    _set_verbosity(verbose)
    with _exit_codes():
        target = prepare_output_path(output) if output else None
        f = _resolve_function(function, n, i, theta, value, table_file).table
        text = spectrum_to_csv(wht(f))
        if target is None:
            typer.echo(text, nl=False)
        else:
            write_text(target, text)
            safe_echo(f"✅ Wrote {1 << f.n} coefficients to {target}")


def _parse_n_range(text: str) -> list[int]:
    """start:stop[:step], stop inclusive."""
    parts = text.split(":")
    if len(parts) not in (2, 3) or not all(p.strip().lstrip("-").isdigit() for p in parts):
        raise ValueError(f"--n-range must look like start:stop[:step], got '{text}'")
    start, stop = int(parts[0]), int(parts[1])
    step = int(parts[2]) if len(parts) == 3 else 1
    if step <= 0:
        raise ValueError(f"--n-range step must be positive, got {step}")
    return list(range(start, stop + 1, step))


@app.command()
def sweep(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Sweep YAML file"),
    family: Optional[str] = typer.Option(None, "--family", help="Family to sweep"),
    n_values: Optional[list[int]] = typer.Option(None, "--n", help="Voter count (repeatable)"),
    n_range: Optional[str] = typer.Option(None, "--n-range", help="start:stop[:step], stop inclusive"),
    rho: Optional[list[float]] = typer.Option(None, "--rho", help="ρ value (repeatable)"),
    epsilon: Optional[list[float]] = typer.Option(None, "--epsilon", help="ε value (repeatable)"),
    engine: Optional[list[str]] = typer.Option(None, "--engine", help="Engine (repeatable)"),
    i: Optional[int] = typer.Option(None, "--i", help="Dictator voter index"),
    theta: Optional[int] = typer.Option(None, "--theta", help="Threshold θ"),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Output path (stdout if omitted)"),
    fmt: Optional[str] = typer.Option(None, "--format", help=f"Output format: {', '.join(SWEEP_FORMATS)}"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for monte_carlo cells"),
    samples: Optional[int] = typer.Option(None, "--samples", help="Samples per monte_carlo cell"),
    bound_constant: Optional[float] = typer.Option(None, "--bound-constant", help="C in the majority upper bound"),
    workers: int = typer.Option(1, "--workers", help="Cells evaluated in parallel"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable debug logging"),
):
    """
    Accuracy over an (n, ρ, engine) grid, written as CSV or JSON.
    """
    _set_verbosity(verbose)
    with _exit_codes():
        if config:
            spec = build_sweep_from_config(load_config(config))
            # Command-line flags override the file
            if output:
                spec.output_path = output
            if fmt:
                spec.output_format = fmt
            if seed is not None:
                spec.seed = seed
            if samples is not None:
                spec.samples = samples
            if bound_constant is not None:
                spec.bound_constant = bound_constant
        else:
            if family is None:
                _fail("Give --config or --family", EXIT_USAGE)
            grid = list(n_values or [])
            if n_range:
                grid.extend(_parse_n_range(n_range))
            params = {}
            if i is not None:
                params["i"] = i
            elif canonical_family(family) == "dictator":
                params["i"] = 1
            if theta is not None:
                params["theta"] = theta
            spec = SweepSpec(
                family=family,
                n_grid=grid,
                engines=list(engine or ["exact_spectral"]),
                rho_grid=list(rho) if rho else None,
                epsilon_grid=list(epsilon) if epsilon else None,
                params=params,
                name="cli_sweep",
                seed=seed,
                samples=samples or DEFAULT_SAMPLES,
                output_path=output,
                output_format=fmt or "csv",
                bound_constant=bound_constant,
            )
        if spec.output_format not in SWEEP_FORMATS:
            raise ValueError(
                f"Unknown output format '{spec.output_format}'. Available formats: {', '.join(SWEEP_FORMATS)}"
            )

        target = prepare_output_path(spec.output_path) if spec.output_path else None
        if "monte_carlo" in spec.engines:
            safe_echo(f"Seed: {spec.seed}", err=True)
        rows = run_sweep(spec, workers=workers)
        text = dump_sweep(rows, spec.output_format)

    if target is None:
        typer.echo(text, nl=False)
        return
    write_text(target, text)
    safe_echo(f"✅ Wrote {len(rows)} rows to {target}")


@app.command()
def verify(
    corpus_seed: Optional[int] = typer.Option(None, "--corpus-seed", help="Seed for the random corpus tables"),
    max_n: int = typer.Option(DEFAULT_MAX_N, "--max-n", help="Largest n in the verification corpus"),
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Suite YAML file (all checks if omitted)"),
    json_output: bool = typer.Option(False, "--json", help="Print the JSON summary"),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Write the JSON summary to a file"),
    tamper: float = typer.Option(1.0, "--debug-tamper-factor", hidden=True),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable debug logging"),
):
    """
    Run the numerical checks of every scaling law, identity and bound.

    Exits with code 3 if any check fails.
    """
    _set_verbosity(verbose)
    with _exit_codes():
        if max_n < 1:
            raise ValueError(f"--max-n must be >= 1, got {max_n}")
        target = prepare_output_path(output) if output else None
        suite = build_suite_from_config(load_config(config)) if config else default_suite()
        seed = get_settings().seed if corpus_seed is None else corpus_seed
        context = build_context(max_n=max_n, corpus_seed=seed, welfare_tamper=tamper)

    if not json_output:
        print_banner()
        typer.echo(f"Suite '{suite.name}': {len(suite.checks)} checks, max_n={max_n}, corpus seed {seed}")
        typer.echo()

    summary = suite.run(context)

    if target is not None:
        write_text(target, summary.to_json() + "\n")
    if json_output:
        typer.echo(summary.to_json())
    else:
        for result in summary.results:
            mark = "✅" if result.passed else "❌"
            safe_echo(
                f"{mark} {result.name:<42} residual {result.worst_residual:.3e} "
                f"(tolerance {result.tolerance:.0e})"
            )
            if not result.passed:
                safe_echo(f"     {result.detail}")
        typer.echo()
        status = "passed" if summary.passed else f"FAILED ({len(summary.failures)} checks)"
        safe_echo(f"Verification {status}; max residual {summary.max_residual:.3e}")

    if not summary.passed:
        raise typer.Exit(code=EXIT_VERIFICATION)


@app.command()
def audit(
    function: Optional[str] = typer.Argument(None, help="Family name or bf:v1 string"),
    n: Optional[int] = typer.Option(None, "--n", help="Number of voters for a family"),
    i: Optional[int] = typer.Option(None, "--i", help="Dictator voter index (1-based)"),
    theta: Optional[float] = typer.Option(None, "--theta", help="Threshold θ"),
    value: int = typer.Option(1, "--value", help="Output of the constant family"),
    table_file: Optional[str] = typer.Option(None, "--table-file", help="File containing a bf:v1 string"),
    rho: Optional[float] = typer.Option(None, "--rho", help="Noise parameter ρ in (0, 1)"),
    epsilon: Optional[float] = typer.Option(None, "--epsilon", help="Privacy level ε > 0"),
    exact: bool = typer.Option(False, "--exact", help="Rational arithmetic (n <= 10)"),
    json_output: bool = typer.Option(False, "--json", help="Emit the report as JSON"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable debug logging"),
):
    """
    Worst-case privacy loss of the mechanism over all neighboring profiles.
    """
    _set_verbosity(verbose)
    with _exit_codes():
        param = _resolve_rho(rho, epsilon)
        resolved = _resolve_function(function, n, i, theta, value, table_file)
        label, f = resolved.label, resolved.table
        report = run_audit(f, param, exact=exact)

    if json_output:
        record = {"function": label, "n": f.n, "rho": param.rho, **report.to_dict()}
        typer.echo(records_to_json([record]))
        return

    print_banner()
    witness = report.attained_at
    safe_echo(f"Function: {label} (n={f.n}), ρ = {param.rho!r}{' [exact]' if report.exact else ''}")
    safe_echo(f"  max log-ratio   {report.max_log_ratio!r}")
    safe_echo(f"  ε bound         {report.epsilon_bound!r}")
    safe_echo(f"  tight           {report.tight}")
    safe_echo(f"  attained at x = {list(witness.x.votes())}, voter {witness.neighbor_index}, output {witness.output_value:+g}")


if __name__ == "__main__":
    logging.basicConfig(
        level=logging.INFO,
        format="%(levelname)s: %(message)s"
    )
    app()
