"""
Tests for canard constants and predictions (lib/canard.py)
"""

import math
import sys
from pathlib import Path

import pytest

# Add lib directory to path
lib_dir = Path(__file__).parent.parent / "lib"
sys.path.insert(0, str(lib_dir))

from canard import (
    GATED_ROUTES,
    NormalFormCoeffs,
    Route,
    analytic_predictions,
    analyze_model,
    check_canard_point,
    default_route,
    k_from_l1,
    matcont_lambda_c,
    normal_form_constants,
    parse_route,
    predict_lambda_c,
    route_spread,
)
from fp_utils import ValidationError
from model import vdp_critical_manifold_y


class TestKFromL1:
    """Conversions from each l1 convention to K."""

    @pytest.mark.unit
    def test_matcont_example(self):
        """l1_mc = 0.4762, eps = 0.05, w0 = 0.2236 gives K close to 0.119."""
        K = k_from_l1("mc", 0.4762, 0.05, 0.2236)
        assert K == pytest.approx(0.4762 * math.sqrt(0.05) / (4.0 * 0.2236))
        assert K == pytest.approx(0.1191, abs=1e-3)

    @pytest.mark.unit
    def test_kuznetsov(self):
        assert k_from_l1(Route.KU, 2.0, 0.04) == pytest.approx(0.1)

    @pytest.mark.unit
    @pytest.mark.parametrize("route", ["gh", "clw"])
    def test_planar_routes_are_identity(self, route):
        assert k_from_l1(route, 0.125, 0.01) == 0.125

    @pytest.mark.unit
    def test_pe(self):
        assert k_from_l1("pe", 3.0 * math.pi, 0.01, 0.5) == pytest.approx(32.0)

    @pytest.mark.unit
    def test_omega_required(self):
        with pytest.raises(ValidationError, match="omega0"):
            k_from_l1("mc", 0.5, 0.05)

    @pytest.mark.unit
    def test_analytic_route_rejected(self):
        with pytest.raises(ValidationError):
            k_from_l1(Route.ANALYTIC_NORMAL_FORM, 0.5, 0.05, 1.0)

    @pytest.mark.unit
    def test_epsilon_validated(self):
        with pytest.raises(ValueError):
            k_from_l1("gh", 0.125, 0.0)


class TestRoutes:
    """Route names and defaults."""

    @pytest.mark.unit
    def test_parse(self):
        assert parse_route("analytic_normal_form") is Route.ANALYTIC_NORMAL_FORM
        assert parse_route(Route.KU) is Route.KU

    @pytest.mark.unit
    def test_unknown_route(self):
        with pytest.raises(ValidationError, match="unknown route"):
            parse_route("fast")

    @pytest.mark.unit
    def test_default_route(self):
        assert default_route(2) is Route.GH
        assert default_route(3) is Route.MC

    @pytest.mark.unit
    def test_pe_not_gated(self):
        assert Route.PE not in GATED_ROUTES


class TestPredictions:
    """lambda_c = lambda_H - K eps."""

    @pytest.mark.unit
    def test_predict_lambda_c(self):
        prediction = predict_lambda_c(0.0, 0.125, 0.05)
        assert prediction.lambda_c == pytest.approx(-0.00625)
        assert prediction.route is Route.GH
        assert prediction.to_dict()["error_order"] == "O(eps^(3/2))"

    @pytest.mark.unit
    def test_matcont_form_agrees(self):
        """The eps^(3/2) form equals the mc route through predict_lambda_c."""
        K = k_from_l1("mc", 0.4762, 0.05, 0.2236)
        assert matcont_lambda_c(0.01, 0.4762, 0.2236, 0.05) == pytest.approx(
            predict_lambda_c(0.01, K, 0.05, "mc").lambda_c, rel=1e-12
        )

    @pytest.mark.unit
    def test_route_spread(self):
        predictions = [
            predict_lambda_c(0.0, 0.12, 0.05, "gh"),
            predict_lambda_c(0.0, 0.13, 0.05, "mc"),
            predict_lambda_c(0.0, 0.50, 0.05, "pe"),
        ]
        assert route_spread(predictions) == pytest.approx(0.01)
        assert route_spread(predictions[:1]) == 0.0


class TestNormalForm:
    """Analytic route from h1..h6."""

    @pytest.mark.unit
    def test_vdp_constants(self, vdp_model):
        coeffs = normal_form_constants(vdp_model.h_evaluators())
        assert coeffs.a3 == pytest.approx(1.0 / 3.0, abs=1e-9)
        assert coeffs.K == pytest.approx(0.125, abs=1e-8)

    @pytest.mark.unit
    def test_exact_vdp_prediction(self):
        lambda_H, lambda_c = analytic_predictions(NormalFormCoeffs(0.0, 0.0, 1.0 / 3.0, 0.0, 0.0), 0.05)
        assert lambda_H == 0.0
        assert lambda_c == -0.125 * 0.05

    @pytest.mark.unit
    def test_prediction_identity(self):
        """lambda_c = lambda_H - K eps for any constants."""
        coeffs = NormalFormCoeffs(0.3, -0.2, 0.7, 0.1, -0.4)
        lambda_H, lambda_c = analytic_predictions(coeffs, 0.02)
        assert lambda_c == pytest.approx(lambda_H - coeffs.K * 0.02, abs=1e-15)
        assert coeffs.A == pytest.approx(0.2 + 2.1 - 0.2 + 0.8)

    @pytest.mark.unit
    def test_six_evaluators_required(self):
        with pytest.raises(ValidationError):
            normal_form_constants([lambda x, y, lam, eps: 0.0] * 5)


class TestCanardPointConditions:
    """Fold and canard-point conditions on planar models."""

    @pytest.mark.unit
    def test_vdp_origin_is_canard_point(self, vdp_model):
        report = check_canard_point(vdp_model, (0.0, 0.0), 0.0)
        assert report.is_fold
        assert report.is_canard_point
        assert report.to_dict()["is_canard_point"] is True

    @pytest.mark.unit
    def test_regular_point_is_not_a_fold(self, vdp_model):
        x = 0.5
        report = check_canard_point(vdp_model, (x, vdp_critical_manifold_y(x)), 0.0)
        assert not report.is_fold
        assert not report.is_canard_point

    @pytest.mark.unit
    def test_generic_fold(self, vdp_model):
        """At lambda != 0 the origin stays a fold but g no longer vanishes."""
        report = check_canard_point(vdp_model, (0.0, 0.0), 0.1)
        assert report.is_fold
        assert not report.is_canard_point

    @pytest.mark.unit
    def test_planar_only(self, fhn_model):
        with pytest.raises(ValidationError):
            check_canard_point(fhn_model, (0.0, 0.0), 0.0)


class TestAnalyzeModel:
    """The Hopf -> Lyapunov -> prediction chain."""

    @pytest.mark.unit
    def test_vdp(self, vdp_model):
        outcome = analyze_model(vdp_model, 0.05, (-0.2, 0.2))
        assert abs(outcome.hopf.lambda_H) <= 1e-8
        assert outcome.prediction("mc").lambda_c == pytest.approx(-0.0060, abs=3e-4)
        assert outcome.prediction(Route.ANALYTIC_NORMAL_FORM).lambda_c == pytest.approx(-0.00625, abs=1e-9)
        assert outcome.default_prediction.route is Route.GH
        assert outcome.default_prediction.lambda_c == pytest.approx(-0.00625, abs=1e-6)
        assert outcome.canard_point is not None and outcome.canard_point.is_fold

    @pytest.mark.unit
    def test_k_estimates_attached(self, vdp_model):
        outcome = analyze_model(vdp_model, 0.05, (-0.2, 0.2))
        estimates = outcome.report.k_estimates
        assert set(estimates) == {"ku", "mc", "clw", "gh", "pe"}
        for route in ("ku", "mc", "gh", "clw"):
            assert 0.10 <= estimates[route] <= 0.15

    @pytest.mark.unit
    def test_fhn_has_no_planar_route(self, fhn_model):
        outcome = analyze_model(fhn_model, 0.001, (0.04, 0.07))
        assert outcome.default_prediction.route is Route.MC
        assert outcome.canard_point is None
        with pytest.raises(ValidationError, match="not applicable"):
            outcome.prediction("gh")
