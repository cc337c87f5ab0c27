"""
Report Assembly

Machine-readable reports for the CLI commands, validated against the JSON
schemas shipped in config/schemas, plus the human-readable tables.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from canard import AnalysisOutcome, Route, default_route, parse_route
from fp_utils import Failure, ValidationError, load_json
from logger import get_logger
from oracle import OracleResult, SweepResult
from utils import dumps_report, format_sig, to_jsonable

logger = get_logger(__name__)

TOOL_NAME = "canard-tool"
TOOL_VERSION = "1.0.0"
SCHEMA_DIR = Path(__file__).parent.parent / "config" / "schemas"

SCHEMAS = {
    "analysis": "analysis_report.schema.json",
    "oracle": "oracle_result.schema.json",
    "sweep": "sweep_report.schema.json",
}


@lru_cache(maxsize=None)
def load_schema(kind: str) -> dict[str, Any]:
    """
    Parsed schema for a report kind, cached.

    Raises:
        ValidationError: unknown report kind
        ConfigError: the schema file is missing or not valid JSON
    """
    try:
        name = SCHEMAS[kind]
    except KeyError:
        raise ValidationError("schema", f"unknown report kind '{kind}'") from None
    result = load_json(SCHEMA_DIR / name)
    if isinstance(result, Failure):
        # no fallback schema
        raise result.failure()
    return result.unwrap()  # type: ignore[no-any-return]


def validate_report(data: Mapping[str, Any], kind: str) -> None:
    """
    Check a JSON-ready report against its published schema.

    Raises:
        ValidationError: the report does not match the schema
    """
    try:
        jsonschema.validate(instance=data, schema=load_schema(kind))
    except jsonschema.ValidationError as e:
        location = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ValidationError(f"{kind}_report", f"{location}: {e.message}") from None
    logger.debug("Report matches schema", kind=kind)


@dataclass(frozen=True, eq=False)
class AnalysisReport:
    """hopf -> lyapunov -> canard results for one model and eps."""
    outcome: AnalysisOutcome
    route: Route
    oracle: OracleResult | None = None
    timing_ms: Mapping[str, int] | None = None
    version: str = TOOL_VERSION
    params: Mapping[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        outcome = self.outcome
        hopf = outcome.hopf
        data: dict[str, Any] = {
            "tool": {"name": TOOL_NAME, "version": self.version},
            "model": outcome.model.name,
            "dimension": outcome.model.dimension,
            "epsilon": outcome.epsilon,
            "params": dict(self.params),
            "lambda_H": hopf.lambda_H,
            "omega0": hopf.omega0,
            "hopf": hopf.to_dict(),
            "lyapunov": outcome.report.to_dict(),
            "route": self.route.value,
            "predictions": {p.route.value: p.to_dict() for p in outcome.predictions},
            "lambda_c": outcome.prediction(self.route).lambda_c,
        }
        if outcome.coeffs is not None:
            data["normal_form"] = outcome.coeffs.to_dict()
        if outcome.canard_point is not None:
            data["canard_point"] = outcome.canard_point.to_dict()
        if self.oracle is not None:
            data["oracle"] = self.oracle.to_dict()
            data["abs_err"] = abs(data["lambda_c"] - self.oracle.lambda_c)
        if self.timing_ms is not None:
            data["timing_ms"] = dict(self.timing_ms)
        return to_jsonable(data)

    def to_json(self) -> str:
        data = self.to_dict()
        validate_report(data, "analysis")
        return dumps_report(data)

    def to_table(self) -> str:
        outcome = self.outcome
        report = outcome.report
        lines = [
            f"model      {outcome.model.name} (n={outcome.model.dimension})",
            f"epsilon    {format_sig(outcome.epsilon)}",
            f"lambda_H   {format_sig(outcome.hopf.lambda_H)}",
            f"omega0     {format_sig(outcome.hopf.omega0)}",
            f"criticality {report.criticality.value}",
            "",
            f"{'convention':<12}{'l1':>14}{'K':>14}",
        ]
        for name, value in report.conventions().items():
            lines.append(f"{name:<12}{format_sig(value):>14}{format_sig(report.k_estimates.get(name)):>14}")
        lines.append("")
        lines.append(f"{'route':<22}{'K':>14}{'lambda_c':>14}")
        for prediction in outcome.predictions:
            marker = " *" if prediction.route is self.route else ""
            lines.append(
                f"{prediction.route.value:<22}{format_sig(prediction.K):>14}"
                f"{format_sig(prediction.lambda_c):>14}{marker}"
            )
        if outcome.canard_point is not None:
            cp = outcome.canard_point
            lines.append("")
            lines.append(f"fold point {cp.is_fold}, canard point {cp.is_canard_point}")
        if self.oracle is not None:
            lines.append("")
            lines.extend(oracle_table(self.oracle).splitlines())
        if self.timing_ms is not None:
            lines.append("")
            lines.append("timing_ms  " + ", ".join(f"{k}={v}" for k, v in self.timing_ms.items()))
        return "\n".join(lines)


def build_analysis_report(
    outcome: AnalysisOutcome,
    route: str | Route | None = None,
    oracle: OracleResult | None = None,
    timing_ms: Mapping[str, int] | None = None,
    params: Mapping[str, float] | None = None,
) -> AnalysisReport:
    """Planar-only routes are absent for n > 2; asking for one raises ValidationError."""
    chosen = default_route(outcome.model.dimension) if route is None else parse_route(route)
    outcome.prediction(chosen)
    return AnalysisReport(
        outcome=outcome,
        route=chosen,
        oracle=oracle,
        timing_ms=timing_ms,
        params=dict(params or {}),
    )


def oracle_report(result: OracleResult, timing_ms: Mapping[str, int] | None = None) -> dict[str, Any]:
    data = {"tool": {"name": TOOL_NAME, "version": TOOL_VERSION}, **result.to_dict()}
    if timing_ms is not None:
        data["timing_ms"] = dict(timing_ms)
    data = to_jsonable(data)
    validate_report(data, "oracle")
    return data


def oracle_table(result: OracleResult) -> str:
    lo, hi = result.bracket
    return "\n".join([
        f"oracle     lambda_c* = {format_sig(result.lambda_c)}",
        f"bracket    [{format_sig(lo, 10)}, {format_sig(hi, 10)}]",
        f"below/above {result.orientation[0].value}/{result.orientation[1].value}",
        f"classified {len(result.trace)} times, {result.stats.steps} steps",
    ])


def sweep_report(result: SweepResult, timing_ms: Mapping[str, int] | None = None) -> dict[str, Any]:
    data = {"tool": {"name": TOOL_NAME, "version": TOOL_VERSION}, **result.to_dict()}
    if timing_ms is not None:
        data["timing_ms"] = dict(timing_ms)
    data = to_jsonable(data)
    validate_report(data, "sweep")
    return data


def sweep_table(result: SweepResult) -> str:
    header = f"{'epsilon':>10}{'lambda_H':>14}{'K':>12}{'predicted':>14}{'observed':>14}{'abs_err':>12}"
    lines = [f"model {result.model}, route {result.route.value}", header]
    for row in result.rows:
        if not row.ok:
            lines.append(f"{format_sig(row.epsilon):>10}  failed: {row.error}")
            continue
        lines.append(
            f"{format_sig(row.epsilon):>10}{format_sig(row.lambda_H):>14}{format_sig(row.K_route):>12}"
            f"{format_sig(row.lambda_c_pred):>14}{format_sig(row.lambda_c_obs):>14}{format_sig(row.abs_err):>12}"
        )
    slope = result.slope
    lines.append(f"error slope vs eps: {format_sig(slope) if slope is not None else 'n/a (fewer than two rows)'}")
    return "\n".join(lines)
