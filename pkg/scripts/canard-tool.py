#!/usr/bin/env python3
"""
Canard Tool

Command-line front end of the canard-explosion toolkit:

    analyze   Hopf point, Lyapunov coefficients, lambda_c per route
    oracle    observed lambda_c* by exit-side bisection
    sweep     predicted vs observed lambda_c over a list of eps
    models    built-in model definitions

Reports go to stdout (or --out), logs to stderr.
Exit codes: 0 ok, 1 numerical failure, 2 no Hopf point in the bracket,
3 degenerate Hopf, 4 resonance or singular linear algebra, 5 oracle bracket
or undecided classification, 6 configuration or model error.
"""

import argparse
import math
import sys
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

# Add lib directory to path
lib_dir = Path(__file__).parent.parent / "lib"
sys.path.insert(0, str(lib_dir))

from returns.result import Failure

from canard import analyze_model
from fp_utils import (
    ConfigError,
    ConvergenceError,
    DegenerateHopfError,
    EvaluationError,
    ExpressionSyntaxError,
    IntegrationError,
    NoHopfError,
    OracleBracketError,
    SingularSystemError,
    UnknownIdentifierError,
    ValidationError,
    get_or_log,
    load_json,
)
from logger import LogLevel, configure_global_logging, get_logger
from model import BUILTIN_MODELS, SystemModel, get_builtin, read_model_file
from oracle import (
    GeometryFactory,
    SweepCase,
    bisect_canard,
    geometry_from_config,
    load_sweep_cases,
    orbit_samples,
    sweep_epsilon,
    write_gnuplot_data,
)
from reports import (
    build_analysis_report,
    oracle_report,
    oracle_table,
    sweep_report,
    sweep_table,
)
from settings import DEFAULTS_PATH, ToolkitSettings, load_settings
from utils import dumps_report, format_sig, measure_duration_ms

logger = get_logger("canard-tool")

PLUGIN_ROOT = Path(__file__).parent.parent
DEFAULT_SWEEPS = PLUGIN_ROOT / "config" / "sweeps.yaml"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NO_HOPF = 2
EXIT_DEGENERATE = 3
EXIT_SINGULAR = 4
EXIT_ORACLE = 5
EXIT_CONFIG = 6

# first match wins, so subclasses come before their bases
EXIT_CODES: tuple[tuple[type[Exception], int], ...] = (
    (NoHopfError, EXIT_NO_HOPF),
    (DegenerateHopfError, EXIT_DEGENERATE),
    (SingularSystemError, EXIT_SINGULAR),
    (OracleBracketError, EXIT_ORACLE),
    (ConfigError, EXIT_CONFIG),
    (ExpressionSyntaxError, EXIT_CONFIG),
    (UnknownIdentifierError, EXIT_CONFIG),
    (ValidationError, EXIT_CONFIG),
    (ValueError, EXIT_CONFIG),
    (ConvergenceError, EXIT_FAILURE),
    (IntegrationError, EXIT_FAILURE),
    (EvaluationError, EXIT_FAILURE),
)
HANDLED_ERRORS = tuple(error for error, _ in EXIT_CODES)


def exit_code_for(error: Exception) -> int:
    for error_type, code in EXIT_CODES:
        if isinstance(error, error_type):
            return code
    return EXIT_FAILURE


# ============================================================================
# Argument resolution
# ============================================================================

def parse_params(items: Sequence[str] | None) -> dict[str, float]:
    """NAME=VALUE pairs from --param."""
    params: dict[str, float] = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ConfigError("--param", f"expected NAME=VALUE, got {item!r}")
        try:
            params[name.strip()] = float(value)
        except ValueError:
            raise ConfigError("--param", f"value of {name.strip()!r} is not a number: {value!r}") from None
    return params


def resolve_model(args: argparse.Namespace) -> SystemModel:
    if args.config is not None:
        result = read_model_file(args.config)
        if isinstance(result, Failure):
            raise result.failure()
        return result.unwrap()
    if args.model is None:
        raise ConfigError("<cli>", f"give --model ({', '.join(sorted(BUILTIN_MODELS))}) or --config PATH")
    return get_builtin(args.model)


def resolve_epsilon(args: argparse.Namespace, model: SystemModel, params: Mapping[str, float]) -> float:
    if args.eps is not None:
        return float(args.eps)
    return float(params.get(model.epsilon_param, model.params[model.epsilon_param]))


def resolve_settings(args: argparse.Namespace) -> ToolkitSettings:
    """
    Defaults file plus CLI overrides. A missing default file falls back to
    built-in values; an explicit --defaults path must load.
    """
    result = load_settings(args.defaults)
    if args.defaults is None and not DEFAULTS_PATH.exists():
        settings = get_or_log(result, ToolkitSettings(), "load_settings")
    elif isinstance(result, Failure):
        raise result.failure()
    else:
        settings = result.unwrap()
    return settings.with_overrides(args.rel_tol, args.abs_tol, args.lambda_tol)


def configure_logging(args: argparse.Namespace, settings: ToolkitSettings) -> None:
    level = args.log_level or settings.logging.level
    json_format = args.log_json or settings.logging.json_format
    log_file = Path(settings.logging.log_file) if settings.logging.log_file else None
    configure_global_logging(LogLevel.from_name(level), json_format, log_file)


def resolve_geometry(
    args: argparse.Namespace, model: SystemModel, settings: ToolkitSettings
) -> GeometryFactory | None:
    """Factory from a --geometry JSON file; None selects the built-in geometry."""
    if args.geometry is None:
        return None
    result = load_json(args.geometry)
    if isinstance(result, Failure):
        raise result.failure()
    config = result.unwrap()
    if not isinstance(config, dict):
        raise ConfigError(str(args.geometry), "geometry file must hold a JSON object")
    return lambda params: geometry_from_config(config, model, float(params[model.epsilon_param]), settings.oracle)


def require_bracket(args: argparse.Namespace, command: str) -> tuple[float, float]:
    if args.bracket is None:
        raise ConfigError("<cli>", f"'{command}' needs --bracket LO HI")
    return float(args.bracket[0]), float(args.bracket[1])


def emit(text: str, out: Path | None) -> None:
    if out is None:
        print(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text + "\n", encoding="utf-8")
    logger.info("Report written", path=str(out))


def write_orbits(
    args: argparse.Namespace,
    model: SystemModel,
    epsilon: float,
    settings: ToolkitSettings,
    geometry: GeometryFactory | None,
    params: Mapping[str, float],
) -> None:
    if not args.orbit_lambdas:
        return
    orbits = {
        lam: orbit_samples(model, lam, epsilon, settings, geometry, params)
        for lam in args.orbit_lambdas
    }
    path = write_gnuplot_data(args.orbit_out, model, orbits)
    print(f"orbit data: {path}", file=sys.stderr)


# ============================================================================
# Commands
# ============================================================================

def cmd_analyze(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    model = resolve_model(args)
    params = parse_params(args.param)
    epsilon = resolve_epsilon(args, model, params)
    bracket = require_bracket(args, "analyze")
    timing: dict[str, int] = {}

    outcome, timing["analysis"] = measure_duration_ms(
        lambda: analyze_model(model, epsilon, bracket, settings, params)
    )
    oracle = None
    if args.oracle_bracket is not None:
        geometry = resolve_geometry(args, model, settings)
        oracle, timing["oracle"] = measure_duration_ms(
            lambda: bisect_canard(
                model, epsilon, tuple(args.oracle_bracket), settings=settings, geometry=geometry, params=params
            )
        )

    bound = model.bind(**{**params, model.epsilon_param: epsilon})
    report = build_analysis_report(
        outcome,
        route=args.route,
        oracle=oracle,
        timing_ms=None if args.no_timing else timing,
        params={k: v for k, v in bound.items() if k != model.bifurcation_param},
    )
    emit(report.to_table() if args.output_format == "table" else report.to_json(), args.out)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    model = resolve_model(args)
    params = parse_params(args.param)
    epsilon = resolve_epsilon(args, model, params)
    bracket = require_bracket(args, "oracle")
    geometry = resolve_geometry(args, model, settings)

    result, elapsed = measure_duration_ms(
        lambda: bisect_canard(model, epsilon, bracket, settings=settings, geometry=geometry, params=params)
    )
    write_orbits(args, model, epsilon, settings, geometry, params)
    if args.output_format == "table":
        emit(oracle_table(result), args.out)
    else:
        emit(dumps_report(oracle_report(result, None if args.no_timing else {"oracle": elapsed})), args.out)
    return EXIT_OK


def resolve_sweep_cases(args: argparse.Namespace, model: SystemModel) -> tuple[list[SweepCase], dict[str, Any]]:
    """
    Cases from the sweep file, narrowed by --eps-list; --hopf-bracket and
    --bracket override the brackets of every row (and allow eps values the
    file does not list).
    """
    cli_brackets = args.hopf_bracket is not None and args.bracket is not None
    configured: list[SweepCase] = []
    options: dict[str, Any] = {"route": None, "params": {}}
    if args.sweep_config is not None or not (args.eps_list and cli_brackets):
        path = args.sweep_config or DEFAULT_SWEEPS
        result = load_sweep_cases(path, model.name)
        if isinstance(result, Failure):
            raise result.failure()
        configured, options = result.unwrap()

    cases = configured
    if args.eps_list:
        cases = []
        for eps in args.eps_list:
            match = next((c for c in configured if math.isclose(c.epsilon, eps, rel_tol=1e-9)), None)
            if match is None and not cli_brackets:
                raise ConfigError("--eps-list", f"no sweep case for eps={eps}; add --hopf-bracket and --bracket")
            cases.append(match or SweepCase(eps, tuple(args.hopf_bracket), tuple(args.bracket)))

    return [
        SweepCase(
            epsilon=c.epsilon,
            hopf_bracket=tuple(args.hopf_bracket) if args.hopf_bracket else c.hopf_bracket,
            oracle_bracket=tuple(args.bracket) if args.bracket else c.oracle_bracket,
        )
        for c in cases
    ], options


def cmd_sweep(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    model = resolve_model(args)
    cases, options = resolve_sweep_cases(args, model)
    params = {**options["params"], **parse_params(args.param)}
    route = args.route or options["route"]
    geometry = resolve_geometry(args, model, settings)

    result, elapsed = measure_duration_ms(
        lambda: sweep_epsilon(model, cases, settings, route, params, geometry)
    )
    write_orbits(args, model, cases[0].epsilon, settings, geometry, params)

    if args.output_format == "json":
        emit(dumps_report(sweep_report(result, None if args.no_timing else {"sweep": elapsed})), args.out)
    elif args.output_format == "table":
        emit(sweep_table(result), args.out)
    else:
        emit(result.to_csv().rstrip("\n"), args.out)
        slope = result.slope
        print(f"error slope vs eps: {format_sig(slope) if slope is not None else 'n/a'}", file=sys.stderr)

    return EXIT_OK if any(row.ok for row in result.rows) else EXIT_FAILURE


def format_model(model: SystemModel) -> str:
    info = model.describe()
    lines = [f"{model.name}: {model.description}"]
    lines.extend(f"  {lhs} = {rhs}" for lhs, rhs in info["equations"].items())
    lines.append("  params: " + ", ".join(f"{k} = {v:g}" for k, v in model.params.items()))
    lines.append(f"  epsilon: {model.epsilon_param}, bifurcation parameter: {model.bifurcation_param}")
    return "\n".join(lines)


def cmd_models(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    models = [factory() for _, factory in sorted(BUILTIN_MODELS.items())]
    if args.output_format == "json":
        emit(dumps_report({"models": [m.describe() for m in models]}), args.out)
    else:
        emit("\n\n".join(format_model(m) for m in models), args.out)
    return EXIT_OK


# ============================================================================
# Parser
# ============================================================================

def _add_output_flags(parser: argparse.ArgumentParser, default: str, formats: Sequence[str]) -> None:
    group = parser.add_mutually_exclusive_group()
    for name in formats:
        group.add_argument(
            f"--{name}",
            dest="output_format",
            action="store_const",
            const=name,
            help=f"{name} output" + (" (default)" if name == default else ""),
        )
    parser.set_defaults(output_format=default)
    parser.add_argument("--out", type=Path, help="Write the report to PATH instead of stdout")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_argument_group("model")
    source.add_argument("--model", choices=sorted(BUILTIN_MODELS), help="Built-in model")
    source.add_argument("--config", type=Path, help="Model config JSON")
    source.add_argument("--param", action="append", metavar="NAME=VALUE", help="Override a model parameter")
    source.add_argument("--eps", type=float, help="Time-scale ratio (default: model value)")
    source.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"),
                        help="Hopf bracket (analyze) or oracle bracket (oracle, sweep)")

    numerics = common.add_argument_group("numerics")
    numerics.add_argument("--lambda-tol", type=float, help="Oracle bisection tolerance (default 1e-9)")
    numerics.add_argument("--rel-tol", type=float, help="Integrator relative tolerance (default 1e-12)")
    numerics.add_argument("--abs-tol", type=float, help="Integrator absolute tolerance (default 1e-14)")
    numerics.add_argument("--route", choices=["analytic_normal_form", "ku", "mc", "gh", "clw", "pe"],
                          help="Route of the headline prediction (default gh for n=2, mc otherwise)")
    numerics.add_argument("--geometry", type=Path, help="Oracle exit geometry JSON")
    numerics.add_argument("--no-timing", action="store_true", help="Omit timing (byte-stable output)")
    return common


def _logging_parser() -> argparse.ArgumentParser:
    logging_flags = argparse.ArgumentParser(add_help=False)
    logging_flags.add_argument("--defaults", type=Path, help=f"Settings YAML (default {DEFAULTS_PATH.name})")
    logging_flags.add_argument("--log-level", choices=[level.name.lower() for level in LogLevel],
                               help="Log level on stderr")
    logging_flags.add_argument("--log-json", action="store_true", help="JSON log lines")
    return logging_flags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="canard-tool",
        description="Locate canard explosions from Hopf data and check them by integration",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s analyze --model vdp --eps 0.05 --bracket -0.2 0.2
  %(prog)s analyze --model fhn --eps 0.001 --bracket 0.04 0.07 --table
  %(prog)s oracle --model vdp --eps 0.05 --bracket -0.01 -0.001
  %(prog)s sweep --model fhn --eps-list 0.01 0.005 0.001 0.0005
  %(prog)s models
        """,
    )
    common, logging_flags = _common_parser(), _logging_parser()
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", parents=[common, logging_flags], help="Hopf -> l1 -> lambda_c")
    analyze.add_argument("--oracle-bracket", type=float, nargs=2, metavar=("LO", "HI"),
                         help="Also run the oracle in this bracket")
    _add_output_flags(analyze, "json", ("json", "table"))
    analyze.set_defaults(handler=cmd_analyze)

    oracle = commands.add_parser("oracle", parents=[common, logging_flags], help="Exit-side bisection")
    _add_orbit_flags(oracle)
    _add_output_flags(oracle, "json", ("json", "table"))
    oracle.set_defaults(handler=cmd_oracle)

    sweep = commands.add_parser("sweep", parents=[common, logging_flags], help="Predicted vs observed over eps")
    sweep.add_argument("--eps-list", type=float, nargs="+", metavar="EPS", help="eps values to run")
    sweep.add_argument("--sweep-config", type=Path, help=f"Sweep YAML (default {DEFAULT_SWEEPS.name})")
    sweep.add_argument("--hopf-bracket", type=float, nargs=2, metavar=("LO", "HI"),
                       help="Hopf bracket for every row")
    _add_orbit_flags(sweep)
    _add_output_flags(sweep, "csv", ("csv", "json", "table"))
    sweep.set_defaults(handler=cmd_sweep)

    models = commands.add_parser("models", parents=[logging_flags], help="List built-in models")
    _add_output_flags(models, "table", ("table", "json"))
    models.set_defaults(handler=cmd_models, rel_tol=None, abs_tol=None, lambda_tol=None)

    return parser


def _add_orbit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--orbit-lambdas", type=float, nargs="+", metavar="LAMBDA",
                        help="Write orbit samples at these parameter values")
    parser.add_argument("--orbit-out", type=Path, default=Path("orbits.dat"),
                        help="gnuplot data file for --orbit-lambdas (default orbits.dat)")


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    handler: Callable[[argparse.Namespace, ToolkitSettings], int] = args.handler

    try:
        settings = resolve_settings(args)
        configure_logging(args, settings)
        return handler(args, settings)
    except HANDLED_ERRORS as e:
        code = exit_code_for(e)
        logger.debug("Command failed", command=args.command, error_type=type(e).__name__, exit_code=code)
        print(f"error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
