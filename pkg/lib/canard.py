"""
Canard Predictions

Converts Lyapunov coefficients into the canard constant K and the
maximal-canard prediction lambda_c = lambda_H - K * eps. Also provides the
analytic route from normal-form h-evaluators, a fold/canard-point
condition checker for planar models and `analyze_model`, which chains the
Hopf, Lyapunov and prediction stages.
"""

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from fp_utils import ValidationError
from hopf import HopfPoint, locate_hopf
from logger import get_logger
from lyapunov import LyapunovReport, analyze_lyapunov
from model import SystemModel
from settings import ToolkitSettings
from type_safety import validate_epsilon

logger = get_logger(__name__)

ERROR_ORDER = "O(eps^(3/2))"
DEFAULT_FD_STEP = float(np.finfo(float).eps) ** (1.0 / 3.0)
SECOND_FD_STEP = float(np.finfo(float).eps) ** (1.0 / 4.0)

HEvaluator = Callable[[float, float, float, float], float]


class Route(Enum):
    ANALYTIC_NORMAL_FORM = "analytic_normal_form"
    KU = "ku"
    MC = "mc"
    GH = "gh"
    CLW = "clw"
    PE = "pe"


# routes compared for concordance; pe is informational only
GATED_ROUTES = (Route.KU, Route.MC, Route.GH, Route.CLW)


def default_route(dimension: int) -> Route:
    """gh for planar systems, mc otherwise."""
    return Route.GH if dimension == 2 else Route.MC


def parse_route(value: str | Route) -> Route:
    if isinstance(value, Route):
        return value
    try:
        return Route(value)
    except ValueError:
        raise ValidationError(
            "route", f"unknown route {value!r}; expected one of {', '.join(r.value for r in Route)}"
        ) from None


def k_from_l1(convention: str | Route, l1: float, epsilon: float, omega0: float | None = None) -> float:
    """
    Canard constant K from l1 in a given convention.

        ku: l1 sqrt(eps) / 4        mc: l1 sqrt(eps) / (4 w0)
        gh, clw: l1                 pe: l1 64 w0 / (3 pi)
    """
    route = parse_route(convention)
    validate_epsilon(epsilon)
    if route in (Route.MC, Route.PE) and (omega0 is None or not omega0 > 0.0):
        raise ValidationError("k_from_l1", f"route '{route.value}' needs omega0 > 0")
    if route is Route.KU:
        return l1 * math.sqrt(epsilon) / 4.0
    if route is Route.MC:
        return l1 * math.sqrt(epsilon) / (4.0 * omega0)  # type: ignore[operator]
    if route in (Route.GH, Route.CLW):
        return l1
    if route is Route.PE:
        return l1 * 64.0 * omega0 / (3.0 * math.pi)  # type: ignore[operator]
    raise ValidationError("k_from_l1", "the analytic route takes K from normal-form coefficients")


@dataclass(frozen=True)
class CanardPrediction:
    lambda_H: float
    K: float
    epsilon: float
    lambda_c: float
    route: Route
    error_order: str = ERROR_ORDER

    def to_dict(self) -> dict[str, Any]:
        return {
            "route": self.route.value,
            "lambda_H": self.lambda_H,
            "K": self.K,
            "epsilon": self.epsilon,
            "lambda_c": self.lambda_c,
            "error_order": self.error_order,
        }


def predict_lambda_c(lambda_H: float, K: float, epsilon: float, route: str | Route = Route.GH) -> CanardPrediction:
    validate_epsilon(epsilon)
    return CanardPrediction(
        lambda_H=lambda_H, K=K, epsilon=epsilon, lambda_c=lambda_H - K * epsilon, route=parse_route(route)
    )


def matcont_lambda_c(lambda_H: float, l1_mc: float, omega0: float, epsilon: float) -> float:
    """lambda_H - (l1_mc / (4 w0)) eps^(3/2)."""
    validate_epsilon(epsilon)
    return lambda_H - l1_mc / (4.0 * omega0) * epsilon ** 1.5


def k_estimates(report: LyapunovReport, epsilon: float) -> dict[str, float]:
    """K from every applicable convention of a report."""
    estimates = {}
    for name, value in report.conventions().items():
        if name == "g":
            continue
        estimates[name] = k_from_l1(name, value, epsilon, report.omega0)
    return estimates


def attach_k_estimates(report: LyapunovReport, epsilon: float) -> LyapunovReport:
    return report.with_k_estimates(k_estimates(report, epsilon))


# ============================================================================
# Normal-form route
# ============================================================================

@dataclass(frozen=True)
class NormalFormCoeffs:
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    A: float = field(init=False)
    K: float = field(init=False)

    def __post_init__(self) -> None:
        A = -self.a2 + 3.0 * self.a3 - 2.0 * self.a4 - 2.0 * self.a5
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "K", A / 8.0)

    def to_dict(self) -> dict[str, float]:
        return {"a1": self.a1, "a2": self.a2, "a3": self.a3, "a4": self.a4, "a5": self.a5, "A": self.A, "K": self.K}


def normal_form_constants(h_evaluators: Sequence[HEvaluator], fd_step: float | None = None) -> NormalFormCoeffs:
    """
    a_i from x-partials of h1..h6 at the origin by central differences.

    a1 = (h3)_x, a2 = (h1)_x, a3 = (h2)_x, a4 = (h4)_x, a5 = (h6)_x.
    """
    if len(h_evaluators) != 6:
        raise ValidationError("normal_form_constants", f"six h-evaluators required, got {len(h_evaluators)}")
    step = DEFAULT_FD_STEP if fd_step is None else fd_step

    def dx(h: HEvaluator) -> float:
        return (h(step, 0.0, 0.0, 0.0) - h(-step, 0.0, 0.0, 0.0)) / (2.0 * step)

    h1, h2, h3, h4, _h5, h6 = h_evaluators
    coeffs = NormalFormCoeffs(a1=dx(h3), a2=dx(h1), a3=dx(h2), a4=dx(h4), a5=dx(h6))
    logger.debug("Normal-form constants", **coeffs.to_dict())
    return coeffs


def analytic_predictions(coeffs: NormalFormCoeffs, epsilon: float) -> tuple[float, float]:
    """Leading-order (lambda_H, lambda_c) from the normal-form constants."""
    validate_epsilon(epsilon)
    lambda_H = -(coeffs.a1 + coeffs.a5) * epsilon / 2.0
    lambda_c = -((coeffs.a1 + coeffs.a5) / 2.0 + coeffs.A / 8.0) * epsilon
    return lambda_H, lambda_c


def predict_all_routes(
    hopf: HopfPoint,
    report: LyapunovReport,
    epsilon: float,
    coeffs: NormalFormCoeffs | None = None,
) -> list[CanardPrediction]:
    """One prediction per applicable route; the analytic route when coeffs are given."""
    predictions = [
        predict_lambda_c(hopf.lambda_H, K, epsilon, route)
        for route, K in k_estimates(report, epsilon).items()
    ]
    if coeffs is not None:
        lambda_H, _ = analytic_predictions(coeffs, epsilon)
        predictions.append(predict_lambda_c(lambda_H, coeffs.K, epsilon, Route.ANALYTIC_NORMAL_FORM))
    return predictions


def route_spread(predictions: Sequence[CanardPrediction]) -> float:
    """Largest pairwise |K_i - K_j| among the gated routes present."""
    values = [p.K for p in predictions if p.route in GATED_ROUTES]
    if len(values) < 2:
        return 0.0
    return max(abs(a - b) for a, b in itertools.combinations(values, 2))


# ============================================================================
# Fold / canard-point conditions
# ============================================================================

@dataclass(frozen=True)
class ConditionCheck:
    name: str
    value: float
    expectation: str   # "zero" | "nonzero"
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "value": self.value, "expectation": self.expectation, "passed": self.passed}


@dataclass(frozen=True)
class CanardPointReport:
    point: tuple[float, float]
    lam: float
    checks: tuple[ConditionCheck, ...]

    def _passed(self, names: Sequence[str]) -> bool:
        by_name = {c.name: c for c in self.checks}
        return all(by_name[n].passed for n in names)

    @property
    def is_fold(self) -> bool:
        return self._passed(("f", "f_x", "f_xx", "f_y"))

    @property
    def is_canard_point(self) -> bool:
        return self.is_fold and self._passed(("g", "g_x", "g_lambda"))

    def to_dict(self) -> dict[str, Any]:
        return {
            "point": list(self.point),
            "lambda": self.lam,
            "checks": [c.to_dict() for c in self.checks],
            "is_fold": self.is_fold,
            "is_canard_point": self.is_canard_point,
        }


def check_canard_point(
    model: SystemModel,
    point: Sequence[float],
    lam: float,
    fd_steps: tuple[float, float] | None = None,
    params: Mapping[str, float] | None = None,
    zero_tol: float = 1e-6,
) -> CanardPointReport:
    """
    Fold conditions on the fast component f and canard conditions on the
    slow component g = F_2 / eps at a point of a planar (x fast, y slow) model.
    """
    if model.dimension != 2:
        raise ValidationError("check_canard_point", f"planar model required, got n={model.dimension}")
    h1, h2 = fd_steps or (DEFAULT_FD_STEP, SECOND_FD_STEP)
    base = dict(params) if params is not None else dict(model.params)
    epsilon = base[model.epsilon_param]
    x0, y0 = float(point[0]), float(point[1])

    def F(x: float, y: float, lam_value: float) -> np.ndarray:
        return model.evaluate([x, y], model.bind_lambda(lam_value, params=base))

    def f(x: float, y: float, lam_value: float = lam) -> float:
        return float(F(x, y, lam_value)[0])

    def g(x: float, y: float, lam_value: float = lam) -> float:
        return float(F(x, y, lam_value)[1]) / epsilon

    values = {
        "f": f(x0, y0),
        "f_x": (f(x0 + h1, y0) - f(x0 - h1, y0)) / (2.0 * h1),
        "f_xx": (f(x0 + h2, y0) - 2.0 * f(x0, y0) + f(x0 - h2, y0)) / (h2 * h2),
        "f_y": (f(x0, y0 + h1) - f(x0, y0 - h1)) / (2.0 * h1),
        "g": g(x0, y0),
        "g_x": (g(x0 + h1, y0) - g(x0 - h1, y0)) / (2.0 * h1),
        "g_lambda": (g(x0, y0, lam + h1) - g(x0, y0, lam - h1)) / (2.0 * h1),
    }
    expectations = {
        "f": "zero", "f_x": "zero", "f_xx": "nonzero", "f_y": "nonzero",
        "g": "zero", "g_x": "nonzero", "g_lambda": "nonzero",
    }
    checks = tuple(
        ConditionCheck(
            name=name,
            value=value,
            expectation=expectations[name],
            passed=(abs(value) <= zero_tol) if expectations[name] == "zero" else (abs(value) > zero_tol),
        )
        for name, value in values.items()
    )
    return CanardPointReport(point=(x0, y0), lam=lam, checks=checks)


# ============================================================================
# Pipeline: hopf -> lyapunov -> canard
# ============================================================================

@dataclass(frozen=True, eq=False)
class AnalysisOutcome:
    """Everything the analysis stages produce for one (model, eps)."""
    model: SystemModel
    epsilon: float
    hopf: HopfPoint
    report: LyapunovReport
    predictions: tuple[CanardPrediction, ...]
    coeffs: NormalFormCoeffs | None = None
    canard_point: CanardPointReport | None = None

    def prediction(self, route: str | Route) -> CanardPrediction:
        wanted = parse_route(route)
        for prediction in self.predictions:
            if prediction.route is wanted:
                return prediction
        available = ", ".join(p.route.value for p in self.predictions)
        raise ValidationError(
            "route", f"route '{wanted.value}' not applicable to '{self.model.name}' (available: {available})"
        )

    @property
    def default_prediction(self) -> CanardPrediction:
        return self.prediction(default_route(self.model.dimension))


def analyze_model(
    model: SystemModel,
    epsilon: float,
    bracket: tuple[float, float],
    settings: ToolkitSettings | None = None,
    params: Mapping[str, float] | None = None,
    guess: Sequence[float] | None = None,
) -> AnalysisOutcome:
    """
    Run locate_hopf, analyze_lyapunov and the canard predictions at one eps.

    Raises whatever the stages raise (NoHopfError, DegenerateHopfError,
    ResonanceError, SingularSystemError, ConvergenceError).
    """
    cfg = settings or ToolkitSettings()
    validate_epsilon(epsilon)
    overrides = dict(params or {})
    overrides[model.epsilon_param] = epsilon
    base = model.bind(**overrides)

    with logger.context(model=model.name, epsilon=epsilon):
        hopf = locate_hopf(model, bracket, cfg.hopf.hopf_tol, cfg.hopf, params=base, guess=guess)
        report = attach_k_estimates(analyze_lyapunov(hopf, model, cfg), epsilon)
        hopf = hopf.with_criticality(report.criticality)

        coeffs = None
        evaluators = model.h_evaluators()
        if evaluators is not None:
            coeffs = normal_form_constants(evaluators)

        canard_point = None
        if model.dimension == 2:
            canard_point = check_canard_point(model, hopf.equilibrium.state, hopf.lambda_H, params=base)

        predictions = tuple(predict_all_routes(hopf, report, epsilon, coeffs))
        logger.info(
            "Canard predictions",
            lambda_H=hopf.lambda_H,
            spread=route_spread(predictions),
            **{f"lambda_c_{p.route.value}": p.lambda_c for p in predictions},
        )
    return AnalysisOutcome(
        model=model,
        epsilon=epsilon,
        hopf=hopf,
        report=report,
        predictions=predictions,
        coeffs=coeffs,
        canard_point=canard_point,
    )
