"""
Tests for report assembly and schema validation (lib/reports.py)
"""

import json
import sys
from pathlib import Path

import pytest

# Add lib directory to path
lib_dir = Path(__file__).parent.parent / "lib"
sys.path.insert(0, str(lib_dir))

from canard import Route, analyze_model
from fp_utils import ConfigError, ValidationError
from oracle import IntegrationStats, OracleResult, Side, SweepResult, SweepRow, TraceEntry
from reports import (
    build_analysis_report,
    load_schema,
    oracle_report,
    oracle_table,
    sweep_report,
    sweep_table,
    validate_report,
)


@pytest.fixture(scope="module")
def vdp_outcome():
    from model import builtin_vdp

    return analyze_model(builtin_vdp(), 0.05, (-0.2, 0.2))


@pytest.fixture
def oracle_result() -> OracleResult:
    return OracleResult(
        model="vdp",
        epsilon=0.05,
        bracket=(-0.0065100005, -0.0065099995),
        lambda_c=-0.00651,
        lambda_tol=1e-9,
        orientation=(Side.RIGHT, Side.LEFT),
        trace=(TraceEntry(-0.0125, Side.RIGHT), TraceEntry(-0.00125, Side.LEFT)),
        stats=IntegrationStats(steps=1200, rhs_evals=14000, integrations=2),
        iterations=24,
    )


class TestSchemas:
    """Shipped schemas load and reject bad reports."""

    @pytest.mark.unit
    @pytest.mark.parametrize("kind", ["analysis", "oracle", "sweep"])
    def test_schemas_load(self, kind):
        assert load_schema(kind)["type"] == "object"

    @pytest.mark.unit
    def test_unknown_kind(self):
        with pytest.raises(ValidationError, match="unknown report kind"):
            load_schema("health")

    @pytest.mark.unit
    def test_missing_schema_file(self, monkeypatch):
        import reports

        monkeypatch.setitem(reports.SCHEMAS, "missing", "missing.schema.json")
        try:
            with pytest.raises(ConfigError, match="File not found"):
                load_schema("missing")
        finally:
            load_schema.cache_clear()

    @pytest.mark.unit
    def test_violation_names_location(self, oracle_result):
        data = oracle_report(oracle_result)
        data["trace"][0]["side"] = "undecided"
        with pytest.raises(ValidationError, match="trace/0/side"):
            validate_report(data, "oracle")


class TestAnalysisReport:
    """Analyze-command reports."""

    @pytest.mark.unit
    def test_vdp_json_validates(self, vdp_outcome):
        data = json.loads(build_analysis_report(vdp_outcome).to_json())
        assert data["tool"]["name"] == "canard-tool"
        assert data["route"] == "gh"
        assert set(data["predictions"]) == {"ku", "mc", "gh", "clw", "pe", "analytic_normal_form"}
        assert data["lambda_c"] == pytest.approx(-0.00625, abs=1e-6)
        assert data["hopf"]["eigenvalue"]["re"] == pytest.approx(0.0, abs=1e-10)
        assert data["canard_point"]["is_canard_point"] is True

    @pytest.mark.unit
    def test_route_selection(self, vdp_outcome):
        report = build_analysis_report(vdp_outcome, route="mc")
        assert report.to_dict()["lambda_c"] == vdp_outcome.prediction(Route.MC).lambda_c

    @pytest.mark.unit
    def test_oracle_and_timing_attached(self, vdp_outcome, oracle_result):
        data = build_analysis_report(vdp_outcome, oracle=oracle_result, timing_ms={"hopf": 3}).to_dict()
        validate_report(data, "analysis")
        assert data["abs_err"] == pytest.approx(abs(data["lambda_c"] + 0.00651))
        assert data["timing_ms"] == {"hopf": 3}

    @pytest.mark.unit
    def test_table_marks_route(self, vdp_outcome):
        table = build_analysis_report(vdp_outcome).to_table()
        marked = [line for line in table.splitlines() if line.endswith(" *")]
        assert len(marked) == 1 and marked[0].startswith("gh ")
        assert "fold point True, canard point True" in table

    @pytest.mark.unit
    def test_fhn_report(self, fhn_model):
        outcome = analyze_model(fhn_model, 0.001, (0.04, 0.07))
        data = json.loads(build_analysis_report(outcome).to_json())
        assert data["route"] == "mc"
        assert "l1_gh" not in data["lyapunov"]
        with pytest.raises(ValidationError, match="not applicable"):
            build_analysis_report(outcome, route="gh")


class TestOracleAndSweepReports:
    """Oracle and sweep outputs."""

    @pytest.mark.unit
    def test_oracle_report(self, oracle_result):
        data = oracle_report(oracle_result, timing_ms={"oracle": 1500})
        assert data["orientation"] == {"below": "right", "above": "left"}
        assert data["stats"]["integrations"] == 2

    @pytest.mark.unit
    def test_oracle_table(self, oracle_result):
        table = oracle_table(oracle_result)
        assert "lambda_c* = -0.00651" in table
        assert "below/above right/left" in table

    @pytest.mark.unit
    def test_sweep_report_with_failed_row(self):
        result = SweepResult(
            model="vdp",
            route=Route.GH,
            rows=(
                SweepRow(epsilon=0.05, route="gh", lambda_H=0.0, omega0=0.2236, l1_mc=0.476,
                         K_route=0.125, lambda_c_pred=-0.00625, lambda_c_obs=-0.00651, abs_err=2.6e-4),
                SweepRow(epsilon=0.02, route="gh", error="OracleBracketError: both ends classify left"),
            ),
        )
        data = sweep_report(result)
        assert data["failed_rows"] == 1
        assert data["slope"] is None
        table = sweep_table(result)
        assert "failed: OracleBracketError" in table
        assert "n/a (fewer than two rows)" in table
