"""
Tests for the canard-tool command line (scripts/canard-tool.py)

main(argv) is called in-process; reports are read back from stdout or
from --out files.
"""

import importlib.util
import json
import logging
import sys
from pathlib import Path

import pytest

# Add lib directory to path
lib_dir = Path(__file__).parent.parent / "lib"
sys.path.insert(0, str(lib_dir))

scripts_dir = Path(__file__).parent.parent / "scripts"
spec = importlib.util.spec_from_file_location("canard_tool", scripts_dir / "canard-tool.py")
canard_tool = importlib.util.module_from_spec(spec)
spec.loader.exec_module(canard_tool)

from fp_utils import (
    ConfigError,
    ConvergenceError,
    DegenerateHopfError,
    NoHopfError,
    OracleBracketError,
    ResonanceError,
    StepBudgetError,
)


@pytest.fixture(autouse=True)
def restore_root_logging():
    """main() reconfigures the root logger onto the captured stderr."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def drift_files(tmp_path: Path) -> dict[str, Path]:
    """Linear model whose exit side is the sign of lambda, plus its exit geometry."""
    model = tmp_path / "drift.json"
    model.write_text(json.dumps({
        "name": "drift",
        "states": ["x", "y"],
        "params": {"lambda": 0.0, "eps": 1.0},
        "epsilon_param": "eps",
        "bifurcation_param": "lambda",
        "equations": ["x + lambda", "-2*y"],
    }), encoding="utf-8")
    geometry = tmp_path / "geometry.json"
    geometry.write_text(json.dumps({
        "seed": {"x": 0.0, "y": 0.0},
        "sections": [
            {"name": "right", "state": "x", "value": 1.0, "direction": "increasing", "side": "right"},
            {"name": "left", "state": "x", "value": -1.0, "direction": "decreasing", "side": "left"},
        ],
        "settle_time": 0.0,
    }), encoding="utf-8")
    return {"model": model, "geometry": geometry}


class TestExitCodes:
    """Error type -> process exit code."""

    @pytest.mark.unit
    @pytest.mark.parametrize("error,code", [
        (NoHopfError((0.0, 1.0), "no sign change"), 2),
        (DegenerateHopfError(1e-12, 1e-8), 3),
        (ResonanceError(1.0, 2j, 0.0), 4),
        (OracleBracketError((0.0, 1.0), "both ends classify left"), 5),
        (ConfigError("x", "broken"), 6),
        (ValueError("bad bracket"), 6),
        (ConvergenceError("find_equilibrium", "stalled", iterations=3), 1),
        (StepBudgetError("budget", 1.0), 1),
        (RuntimeError("unexpected"), 1),
    ])
    def test_mapping(self, error, code):
        assert canard_tool.exit_code_for(error) == code


class TestParams:
    """--param parsing."""

    @pytest.mark.unit
    def test_pairs(self):
        assert canard_tool.parse_params(["s=1.2", " eps = 0.01"]) == {"s": 1.2, "eps": 0.01}
        assert canard_tool.parse_params(None) == {}

    @pytest.mark.unit
    @pytest.mark.parametrize("item", ["s", "=1.0", "s=fast"])
    def test_invalid(self, item):
        with pytest.raises(ConfigError):
            canard_tool.parse_params([item])


class TestModelsCommand:
    """Built-in model listing."""

    @pytest.mark.unit
    def test_table(self, capsys):
        assert canard_tool.main(["models"]) == 0
        out = capsys.readouterr().out
        assert "vdp: " in out and "fhn: " in out
        assert "x' = x^2 + x^3/3 - y" in out

    @pytest.mark.unit
    def test_json(self, capsys):
        assert canard_tool.main(["models", "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert [m["name"] for m in data["models"]] == ["fhn", "vdp"]


class TestAnalyzeCommand:
    """Hopf -> l1 -> lambda_c from the command line."""

    @pytest.mark.unit
    def test_vdp_json(self, capsys):
        code = canard_tool.main(["analyze", "--model", "vdp", "--eps", "0.05", "--bracket", "-0.2", "0.2",
                                 "--no-timing"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["route"] == "gh"
        assert data["lambda_c"] == pytest.approx(-0.00625, abs=1e-6)
        assert data["params"]["eps"] == 0.05
        assert "timing_ms" not in data

    @pytest.mark.unit
    def test_vdp_table_with_route(self, capsys):
        code = canard_tool.main(["analyze", "--model", "vdp", "--eps", "0.05", "--bracket", "-0.2", "0.2",
                                 "--route", "mc", "--table"])
        assert code == 0
        marked = [line for line in capsys.readouterr().out.splitlines() if line.endswith(" *")]
        assert len(marked) == 1 and marked[0].startswith("mc ")

    @pytest.mark.unit
    def test_out_file(self, tmp_path, capsys):
        out = tmp_path / "reports" / "vdp.json"
        code = canard_tool.main(["analyze", "--model", "vdp", "--bracket", "-0.2", "0.2", "--out", str(out)])
        assert code == 0
        assert capsys.readouterr().out == ""
        assert json.loads(out.read_text())["model"] == "vdp"

    @pytest.mark.unit
    def test_no_hopf_exit_code(self, capsys):
        code = canard_tool.main(["analyze", "--model", "vdp", "--eps", "0.05", "--bracket", "0.05", "0.2"])
        assert code == 2
        assert "error: " in capsys.readouterr().err

    @pytest.mark.unit
    def test_bad_param(self, capsys):
        code = canard_tool.main(["analyze", "--model", "vdp", "--bracket", "-0.2", "0.2", "--param", "eps"])
        assert code == 6
        assert "NAME=VALUE" in capsys.readouterr().err

    @pytest.mark.unit
    def test_missing_bracket(self, capsys):
        assert canard_tool.main(["analyze", "--model", "vdp"]) == 6
        assert "--bracket" in capsys.readouterr().err

    @pytest.mark.unit
    def test_missing_model_file(self, tmp_path, capsys):
        code = canard_tool.main(["analyze", "--config", str(tmp_path / "absent.json"), "--bracket", "0", "1"])
        assert code == 6
        assert "File not found" in capsys.readouterr().err

    @pytest.mark.unit
    def test_model_required(self, capsys):
        assert canard_tool.main(["analyze", "--bracket", "-0.2", "0.2"]) == 6

    @pytest.mark.unit
    def test_unknown_builtin_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            canard_tool.main(["analyze", "--model", "lorenz"])

    @pytest.mark.unit
    def test_bad_defaults_file(self, tmp_path, capsys):
        defaults = tmp_path / "defaults.yaml"
        defaults.write_text("hopf:\n  bogus: 1\n", encoding="utf-8")
        code = canard_tool.main(["models", "--defaults", str(defaults)])
        assert code == 6
        assert "unknown keys" in capsys.readouterr().err


class TestOracleCommand:
    """Exit-side bisection on a model with a known threshold."""

    @pytest.mark.unit
    def test_drift_json(self, drift_files, capsys):
        code = canard_tool.main([
            "oracle", "--config", str(drift_files["model"]), "--geometry", str(drift_files["geometry"]),
            "--bracket", "-0.3", "0.7", "--lambda-tol", "1e-6", "--rel-tol", "1e-10", "--abs-tol", "1e-12",
        ])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["lambda_c"] == pytest.approx(0.0, abs=1e-6)
        assert data["orientation"] == {"below": "left", "above": "right"}
        assert "oracle" in data["timing_ms"]

    @pytest.mark.unit
    def test_same_side_bracket(self, drift_files, capsys):
        code = canard_tool.main([
            "oracle", "--config", str(drift_files["model"]), "--geometry", str(drift_files["geometry"]),
            "--bracket", "0.1", "0.7",
        ])
        assert code == 5
        assert "classify right" in capsys.readouterr().err

    @pytest.mark.unit
    def test_orbit_file(self, drift_files, tmp_path, capsys):
        orbits = tmp_path / "orbits.dat"
        code = canard_tool.main([
            "oracle", "--config", str(drift_files["model"]), "--geometry", str(drift_files["geometry"]),
            "--bracket", "-0.3", "0.7", "--lambda-tol", "1e-4", "--table",
            "--orbit-lambdas", "-0.1", "0.1", "--orbit-out", str(orbits),
        ])
        assert code == 0
        captured = capsys.readouterr()
        assert "below/above left/right" in captured.out
        assert f"orbit data: {orbits}" in captured.err
        assert len(orbits.read_text().strip().split("\n\n\n")) == 2


class TestSweepCommand:
    """Row failures are reported, not raised."""

    @pytest.mark.unit
    def test_all_rows_failed(self, drift_files, capsys):
        code = canard_tool.main([
            "sweep", "--config", str(drift_files["model"]), "--geometry", str(drift_files["geometry"]),
            "--eps-list", "1.0", "0.5", "--hopf-bracket", "-0.5", "0.5", "--bracket", "-0.3", "0.7",
            "--route", "mc",
        ])
        assert code == 1
        captured = capsys.readouterr()
        lines = captured.out.splitlines()
        assert lines[0].startswith("epsilon,lambda_H")
        assert len(lines) == 3
        assert all("NoHopfError" in line for line in lines[1:])
        assert "error slope vs eps: n/a" in captured.err

    @pytest.mark.unit
    def test_eps_not_in_sweep_file(self, capsys):
        code = canard_tool.main(["sweep", "--model", "vdp", "--eps-list", "0.3"])
        assert code == 6
        assert "no sweep case for eps=0.3" in capsys.readouterr().err
