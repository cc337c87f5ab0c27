"""
Canard Explosion Oracle

Integrates the full system with scipy's adaptive Dormand-Prince 8(5,3)
stepper, labels each trajectory by the exit section it crosses once it has
passed the fold region, and bisects the bifurcation parameter on that label.
The flip point of the label is the observed explosion value lambda_c*.

The sweep runs hopf -> lyapunov -> canard -> oracle per eps row through an
asyncio orchestrator and compares the predicted and observed values.
"""

import asyncio
import csv
import dataclasses
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from returns.pipeline import flow
from returns.pointfree import bind
from returns.result import Failure, Result, Success
from scipy.integrate import DOP853
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from canard import Route, analyze_model, default_route, parse_route
from fp_utils import (
    BlowUpError,
    ConfigError,
    ConvergenceError,
    DegenerateHopfError,
    EvaluationError,
    IntegrationError,
    NoHopfError,
    OracleBracketError,
    SingularSystemError,
    StepBudgetError,
    StepUnderflowError,
    ValidationError,
    load_config,
)
from logger import LogLevel, get_logger, log_execution
from model import (
    SystemModel,
    critical_manifold_y,
    fhn_fold_points,
    vdp_critical_manifold_y,
)
from settings import IntegratorSettings, OracleSettings, SweepSettings, ToolkitSettings
from type_safety import validate_bracket, validate_epsilon

logger = get_logger(__name__)

EVENT_XTOL = 1e-12
GEOMETRY_SOURCE = "<geometry>"


# ============================================================================
# Geometry
# ============================================================================

class Side(Enum):
    LEFT = "left"
    RIGHT = "right"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class Section:
    """
    Hyperplane z[coordinate] = value crossed in a given direction.

    direction +1 triggers on increasing crossings, -1 on decreasing ones.
    Exit sections carry the side they stand for; a settle guard has none.
    """
    name: str
    coordinate: int
    value: float
    direction: int
    side: Side | None = None

    def __post_init__(self) -> None:
        if self.direction not in (1, -1):
            raise ConfigError(GEOMETRY_SOURCE, f"section '{self.name}': direction must be +1 or -1")
        if not math.isfinite(self.value):
            raise ConfigError(GEOMETRY_SOURCE, f"section '{self.name}': value must be finite")
        if self.side is Side.UNDECIDED:
            raise ConfigError(GEOMETRY_SOURCE, f"section '{self.name}': side must be left or right")

    def signed(self, state: np.ndarray) -> float:
        """Negative before the crossing, non-negative after it."""
        return self.direction * (float(state[self.coordinate]) - self.value)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "coordinate": self.coordinate,
            "value": self.value,
            "direction": self.direction,
            "side": self.side.value if self.side else None,
        }


@dataclass(frozen=True, eq=False)
class ExitGeometry:
    """Seed point, exit sections and stopping rules of one classification."""
    seed: np.ndarray
    sections: tuple[Section, ...]
    settle_time: float
    settle_guard: Section | None = None
    capture_tol: float | None = None
    capture_side: Side | None = None
    time_direction: int = 1

    def __post_init__(self) -> None:
        seed = np.asarray(self.seed, dtype=float)
        object.__setattr__(self, "seed", seed)
        if seed.ndim != 1 or not np.all(np.isfinite(seed)):
            raise ConfigError(GEOMETRY_SOURCE, "seed must be a finite state vector")
        sides = {s.side for s in self.sections}
        if None in sides:
            raise ConfigError(GEOMETRY_SOURCE, "every exit section needs a side")
        if sides != {Side.LEFT, Side.RIGHT}:
            named = ", ".join(f"{s.name}={s.side.value}" for s in self.sections if s.side)
            raise ConfigError(GEOMETRY_SOURCE, f"exit sections must cover both sides, got {named or 'none'}")
        for section in (*self.sections, *((self.settle_guard,) if self.settle_guard else ())):
            if not 0 <= section.coordinate < seed.size:
                raise ConfigError(GEOMETRY_SOURCE, f"section '{section.name}': coordinate out of range")
        if not self.settle_time >= 0.0:
            raise ConfigError(GEOMETRY_SOURCE, "settle_time must be >= 0")
        if self.time_direction not in (1, -1):
            raise ConfigError(GEOMETRY_SOURCE, "time_direction must be +1 or -1")
        if self.capture_tol is not None:
            if not self.capture_tol > 0.0:
                raise ConfigError(GEOMETRY_SOURCE, "capture_tol must be > 0")
            if self.capture_side not in (Side.LEFT, Side.RIGHT):
                raise ConfigError(GEOMETRY_SOURCE, "capture_tol needs capture_side left or right")

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed.tolist(),
            "sections": [s.to_dict() for s in self.sections],
            "settle_time": self.settle_time,
            "settle_guard": self.settle_guard.to_dict() if self.settle_guard else None,
            "capture_tol": self.capture_tol,
            "capture_side": self.capture_side.value if self.capture_side else None,
            "time_direction": self.time_direction,
        }


GeometryFactory = Callable[[Mapping[str, float]], ExitGeometry]


def vdp_geometry(epsilon: float, settings: OracleSettings | None = None) -> ExitGeometry:
    """
    Seed on the attracting branch at x = seed_x, exits at x = right_x
    (increasing, escape past the repelling branch) and x = -left_factor*sqrt(eps)
    (decreasing, turn back). A trajectory captured by the stable equilibrium
    counts as turned back.
    """
    validate_epsilon(epsilon)
    cfg = settings or OracleSettings()
    g = cfg.vdp
    root_eps = math.sqrt(epsilon)
    return ExitGeometry(
        seed=np.array([g.seed_x, vdp_critical_manifold_y(g.seed_x)]),
        sections=(
            Section("right", 0, g.right_x, 1, Side.RIGHT),
            Section("left", 0, -g.left_factor * root_eps, -1, Side.LEFT),
        ),
        settle_time=cfg.settle_factor / root_eps,
        settle_guard=Section("settle_guard", 0, g.settle_guard_x, 1),
        capture_tol=cfg.capture_factor * epsilon ** 2,
        capture_side=Side.LEFT,
        time_direction=1,
    )


def fhn_geometry(epsilon: float, current: float, settings: OracleSettings | None = None) -> ExitGeometry:
    """
    FHN runs in reversed time, where the middle sheet of the cubic
    critical manifold attracts and the slow drift carries x1 down towards the
    lower fold x1-. Escape past the fold onto the outer sheet is Left, a
    turn back through x1- + offset is Right.
    """
    validate_epsilon(epsilon)
    cfg = settings or OracleSettings()
    g = cfg.fhn
    x_minus, x_plus = fhn_fold_points()
    x1 = x_minus + g.seed_fraction * (x_plus - x_minus)
    offset = min(max(g.turnback_factor * math.sqrt(epsilon), g.turnback_min), g.turnback_max)
    return ExitGeometry(
        seed=np.array([x1, 0.0, critical_manifold_y(x1, current)]),
        sections=(
            Section("escape", 0, x_minus - g.escape_offset, -1, Side.LEFT),
            Section("turn_back", 0, x_minus + offset, 1, Side.RIGHT),
        ),
        settle_time=cfg.settle_factor / math.sqrt(epsilon),
        capture_tol=cfg.capture_factor * epsilon ** 2,
        capture_side=Side.RIGHT,
        time_direction=-1,
    )


def default_geometry(
    model: SystemModel, params: Mapping[str, float], settings: OracleSettings | None = None
) -> ExitGeometry:
    """Built-in geometry for the shipped vdp and fhn models."""
    epsilon = float(params[model.epsilon_param])
    if model.name == "vdp":
        return vdp_geometry(epsilon, settings)
    if model.name == "fhn":
        return fhn_geometry(epsilon, float(params[model.bifurcation_param]), settings)
    raise ConfigError(GEOMETRY_SOURCE, f"no built-in exit geometry for model '{model.name}'; pass a geometry file")


def _parse_direction(value: Any, where: str) -> int:
    aliases = {"increasing": 1, "decreasing": -1, "forward": 1, "reverse": -1, 1: 1, -1: -1}
    if value not in aliases:
        raise ConfigError(GEOMETRY_SOURCE, f"{where}: unknown direction {value!r}")
    return aliases[value]


def _parse_side(value: Any, where: str) -> Side:
    try:
        side = Side(value)
    except ValueError:
        raise ConfigError(GEOMETRY_SOURCE, f"{where}: side must be 'left' or 'right', got {value!r}") from None
    if side is Side.UNDECIDED:
        raise ConfigError(GEOMETRY_SOURCE, f"{where}: side must be 'left' or 'right'")
    return side


def _parse_section(data: Mapping[str, Any], model: SystemModel, exit_section: bool) -> Section:
    name = str(data.get("name", "section"))
    state = data.get("state")
    if state not in model.states:
        raise ConfigError(GEOMETRY_SOURCE, f"section '{name}': unknown state {state!r}")
    try:
        value = float(data["value"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError(GEOMETRY_SOURCE, f"section '{name}': numeric 'value' required") from None
    return Section(
        name=name,
        coordinate=model.states.index(state),
        value=value,
        direction=_parse_direction(data.get("direction"), f"section '{name}'"),
        side=_parse_side(data.get("side"), f"section '{name}'") if exit_section else None,
    )


def geometry_from_config(
    config: Mapping[str, Any],
    model: SystemModel,
    epsilon: float,
    settings: OracleSettings | None = None,
) -> ExitGeometry:
    """
    Exit geometry from a plain mapping (the --geometry JSON file).

        {"seed": {"x": -1.0, "y": 0.667},
         "sections": [{"name": "right", "state": "x", "value": 1.0,
                       "direction": "increasing", "side": "right"}, ...],
         "settle_guard": {...}, "settle_time": 40.0,
         "capture_tol": 1e-6, "capture_side": "left", "time_direction": "reverse"}

    settle_time and capture_tol default to the oracle settings scaled by eps.
    """
    cfg = settings or OracleSettings()
    seed_data = config.get("seed")
    if isinstance(seed_data, Mapping):
        missing = [s for s in model.states if s not in seed_data]
        if missing:
            raise ConfigError(GEOMETRY_SOURCE, f"seed misses states: {', '.join(missing)}")
        seed = [float(seed_data[s]) for s in model.states]
    elif isinstance(seed_data, Sequence) and len(seed_data) == model.dimension:
        seed = [float(v) for v in seed_data]
    else:
        raise ConfigError(GEOMETRY_SOURCE, f"seed must give all {model.dimension} states")

    sections = tuple(_parse_section(s, model, exit_section=True) for s in config.get("sections", ()))
    guard_data = config.get("settle_guard")
    capture_side = config.get("capture_side")
    return ExitGeometry(
        seed=np.array(seed),
        sections=sections,
        settle_time=float(config.get("settle_time", cfg.settle_factor / math.sqrt(epsilon))),
        settle_guard=_parse_section(guard_data, model, exit_section=False) if guard_data else None,
        capture_tol=float(config.get("capture_tol", cfg.capture_factor * epsilon ** 2)) if capture_side else None,
        capture_side=_parse_side(capture_side, "capture_side") if capture_side else None,
        time_direction=_parse_direction(config.get("time_direction", 1), "time_direction"),
    )


# ============================================================================
# Integration
# ============================================================================

class TrajectoryStatus(Enum):
    EVENT = "event"
    CAPTURED = "captured"
    TIME_LIMIT = "time_limit"


@dataclass(frozen=True, eq=False)
class EventHit:
    section: Section
    t: float
    state: np.ndarray


@dataclass
class IntegrationStats:
    steps: int = 0
    rhs_evals: int = 0
    integrations: int = 0

    def add(self, other: 'IntegrationStats') -> None:
        self.steps += other.steps
        self.rhs_evals += other.rhs_evals
        self.integrations += other.integrations

    def to_dict(self) -> dict[str, int]:
        return {"steps": self.steps, "rhs_evals": self.rhs_evals, "integrations": self.integrations}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Outcome of one integration; times/states hold accepted steps when recorded."""
    status: TrajectoryStatus
    final_t: float
    final_state: np.ndarray
    hits: tuple[EventHit, ...]
    stats: IntegrationStats
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    states: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    @property
    def first_hit(self) -> EventHit | None:
        return self.hits[0] if self.hits else None


def _refine_crossing(section: Section, interpolant: Callable[[float], np.ndarray], t_old: float, t_new: float) -> EventHit:
    def g(t: float) -> float:
        return section.signed(interpolant(t))

    g_old, g_new = g(t_old), g(t_new)
    if g_old >= 0.0:
        t_hit = t_old
    elif g_new <= 0.0:
        t_hit = t_new
    else:
        t_hit = float(brentq(g, t_old, t_new, xtol=EVENT_XTOL))
    return EventHit(section=section, t=t_hit, state=np.asarray(interpolant(t_hit), dtype=float))


def _step_hermite(
    field_fn: Callable[[float, np.ndarray], np.ndarray],
    t_old: float,
    z_old: np.ndarray,
    t_new: float,
    z_new: np.ndarray,
) -> Callable[[float], np.ndarray]:
    spline = CubicHermiteSpline(
        [t_old, t_new], np.vstack([z_old, z_new]), np.vstack([field_fn(t_old, z_old), field_fn(t_new, z_new)]),
    )
    return lambda t: np.asarray(spline(t), dtype=float)


def integrate(
    model: SystemModel,
    state0: Sequence[float],
    params: Mapping[str, float],
    t_end: float,
    settings: IntegratorSettings | None = None,
    sections: Sequence[Section] = (),
    direction: int = 1,
    capture_tol: float | None = None,
    record: bool = False,
    t0: float = 0.0,
    step_budget: int | None = None,
) -> Trajectory:
    """
    Integrate z' = direction * F(z) from t0 to at most t_end.

    Stops at the first section crossing, when ||F(z)|| < capture_tol, or at
    t_end. Crossings are refined with brentq on the step's dense output, or
    with settings.dense_output off on the cubic Hermite interpolant of the
    step endpoints and their slopes.

    Step control is scipy's DOP853 controller (elementary error-per-step
    control with a safety factor), not a PI controller; rel_tol and abs_tol
    apply componentwise.

    Raises:
        StepUnderflowError: the stepper cannot meet the tolerances
        StepBudgetError: more than step_budget accepted steps
        BlowUpError: max |z_i| exceeds settings.blow_up
    """
    cfg = settings or IntegratorSettings()
    z0 = np.asarray(state0, dtype=float)
    if z0.shape != (model.dimension,) or not np.all(np.isfinite(z0)):
        raise ValidationError("integrate", f"initial state must be {model.dimension} finite values")
    if not t_end > t0:
        raise ValidationError("integrate", f"t_end {t_end!r} must exceed t0 {t0!r}")
    budget = cfg.max_steps if step_budget is None else step_budget

    field_fn = model.vector_field(params, direction)
    solver = DOP853(
        field_fn, t0, z0, t_end,
        max_step=cfg.max_step, rtol=cfg.rel_tol, atol=cfg.abs_tol,
    )
    times, states = ([t0], [z0.copy()]) if record else ([], [])
    previous = [s.signed(z0) for s in sections]
    z_old = z0.copy()
    status = TrajectoryStatus.TIME_LIMIT
    hit: EventHit | None = None
    steps = 0

    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise StepUnderflowError(message or "step size underflow", float(solver.t))
        steps += 1
        z = solver.y
        if not np.all(np.isfinite(z)) or float(np.max(np.abs(z))) > cfg.blow_up:
            raise BlowUpError(f"state exceeded {cfg.blow_up:.1e}", float(solver.t))
        if record:
            times.append(float(solver.t))
            states.append(z.copy())

        current = [s.signed(z) for s in sections]
        crossed = [i for i, (a, b) in enumerate(zip(previous, current)) if a < 0.0 <= b]
        if crossed:
            interpolant = (
                solver.dense_output() if cfg.dense_output
                else _step_hermite(field_fn, float(solver.t_old), z_old, float(solver.t), z)
            )
            hit = min(
                (_refine_crossing(sections[i], interpolant, solver.t_old, solver.t) for i in crossed),
                key=lambda h: h.t,
            )
            status = TrajectoryStatus.EVENT
            break
        previous = current
        z_old = z.copy()

        if capture_tol is not None and float(np.linalg.norm(model.evaluate(z, params))) < capture_tol:
            status = TrajectoryStatus.CAPTURED
            break
        if steps >= budget and solver.status == "running":
            raise StepBudgetError(f"{budget} accepted steps without a decision", float(solver.t))

    stats = IntegrationStats(steps=steps, rhs_evals=int(solver.nfev), integrations=1)
    final_t, final_state = (hit.t, hit.state) if hit else (float(solver.t), np.array(solver.y, dtype=float))
    return Trajectory(
        status=status,
        final_t=final_t,
        final_state=final_state,
        hits=(hit,) if hit else (),
        stats=stats,
        times=np.array(times),
        states=np.array(states) if record else np.empty((0, model.dimension)),
    )


# ============================================================================
# Exit classification
# ============================================================================

@dataclass(frozen=True, eq=False)
class ExitOutcome:
    side: Side
    reason: str
    settle: Trajectory
    main: Trajectory | None
    stats: IntegrationStats

    def samples(self) -> tuple[np.ndarray, np.ndarray]:
        """Recorded (times, states) of both phases, concatenated."""
        if self.main is None or self.main.times.size == 0:
            return self.settle.times, self.settle.states
        if self.settle.times.size == 0:
            return self.main.times, self.main.states
        # the main phase starts where the settle phase ended
        return (
            np.concatenate([self.settle.times, self.main.times[1:]]),
            np.vstack([self.settle.states, self.main.states[1:]]),
        )


def run_exit(
    model: SystemModel,
    params: Mapping[str, float],
    settings: ToolkitSettings | None,
    geometry: ExitGeometry,
    record: bool = False,
) -> ExitOutcome:
    """
    Settle from the seed, then integrate until an exit section, capture or
    the time limit. Exit sections are watched during the settle phase too.
    """
    cfg = settings or ToolkitSettings()
    integrator = cfg.integrator
    if geometry.seed.size != model.dimension:
        raise ConfigError(GEOMETRY_SOURCE, f"seed has {geometry.seed.size} states, model has {model.dimension}")
    epsilon = float(params[model.epsilon_param])
    stats = IntegrationStats()

    try:
        settle_sections = (*geometry.sections, *((geometry.settle_guard,) if geometry.settle_guard else ()))
        settle = _settle(model, params, integrator, geometry, settle_sections, record)
        stats.add(settle.stats)
        hit = settle.first_hit
        if hit is not None and hit.section.side is not None:
            return ExitOutcome(hit.section.side, f"{hit.section.name} during settle", settle, None, stats)

        main = integrate(
            model, settle.final_state, params, settle.final_t + integrator.time_limit(epsilon), integrator,
            sections=geometry.sections, direction=geometry.time_direction,
            capture_tol=geometry.capture_tol, record=record, t0=settle.final_t,
            step_budget=max(1, integrator.max_steps - settle.stats.steps),
        )
    except StepBudgetError as e:
        logger.warning("Step budget exhausted, classification undecided", t=e.t)
        return ExitOutcome(Side.UNDECIDED, str(e), _empty_trajectory(geometry), None, stats)
    stats.add(main.stats)

    if main.status is TrajectoryStatus.EVENT and main.first_hit is not None:
        section = main.first_hit.section
        return ExitOutcome(section.side or Side.UNDECIDED, section.name, settle, main, stats)
    if main.status is TrajectoryStatus.CAPTURED and geometry.capture_side is not None:
        return ExitOutcome(geometry.capture_side, "captured", settle, main, stats)
    return ExitOutcome(Side.UNDECIDED, "no section reached before the time limit", settle, main, stats)


def _settle(
    model: SystemModel,
    params: Mapping[str, float],
    integrator: IntegratorSettings,
    geometry: ExitGeometry,
    sections: Sequence[Section],
    record: bool,
) -> Trajectory:
    if geometry.settle_time == 0.0:
        return _empty_trajectory(geometry)
    return integrate(
        model, geometry.seed, params, geometry.settle_time, integrator,
        sections=sections, direction=geometry.time_direction, record=record,
    )


def _empty_trajectory(geometry: ExitGeometry) -> Trajectory:
    return Trajectory(
        status=TrajectoryStatus.TIME_LIMIT,
        final_t=0.0,
        final_state=geometry.seed.copy(),
        hits=(),
        stats=IntegrationStats(),
        states=np.empty((0, geometry.seed.size)),
    )


def classify_exit(
    model: SystemModel,
    params: Mapping[str, float],
    settings: ToolkitSettings | None,
    geometry: ExitGeometry,
) -> Side:
    """Left, Right, or Undecided when no decision is reached within budget."""
    return run_exit(model, params, settings, geometry).side


# ============================================================================
# Bisection
# ============================================================================

@dataclass(frozen=True)
class TraceEntry:
    lam: float
    side: Side

    def to_dict(self) -> dict[str, Any]:
        return {"lambda": self.lam, "side": self.side.value}


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Observed explosion value: the midpoint of a bracket whose ends classify differently."""
    model: str
    epsilon: float
    bracket: tuple[float, float]
    lambda_c: float
    lambda_tol: float
    orientation: tuple[Side, Side]
    trace: tuple[TraceEntry, ...]
    stats: IntegrationStats
    iterations: int

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "epsilon": self.epsilon,
            "bracket": list(self.bracket),
            "lambda_c": self.lambda_c,
            "lambda_tol": self.lambda_tol,
            "orientation": {"below": self.orientation[0].value, "above": self.orientation[1].value},
            "iterations": self.iterations,
            "trace": [entry.to_dict() for entry in self.trace],
            "stats": self.stats.to_dict(),
        }


def check_monotone(trace: Sequence[TraceEntry], bracket: tuple[float, float]) -> None:
    """At most one side change along the trace sorted by lambda."""
    ordered = sorted(trace, key=lambda e: e.lam)
    flips = [
        (a.lam, b.lam) for a, b in zip(ordered, ordered[1:]) if a.side is not b.side
    ]
    if len(flips) > 1:
        where = ", ".join(f"[{lo:.9g}, {hi:.9g}]" for lo, hi in flips)
        raise OracleBracketError(bracket, f"classification is not monotone in lambda; flips in {where}")


@log_execution(level=LogLevel.DEBUG)
def bisect_canard(
    model: SystemModel,
    epsilon: float,
    bracket: tuple[float, float],
    lambda_tol: float | None = None,
    settings: ToolkitSettings | None = None,
    geometry: GeometryFactory | None = None,
    params: Mapping[str, float] | None = None,
) -> OracleResult:
    """
    Bisect the exit-side flip inside bracket down to lambda_tol.

    The side at the lower end fixes the orientation; interior probes check
    monotonicity before bisection starts.

    Raises:
        OracleBracketError: ends classify alike, an Undecided label, or a
            non-monotone trace
        ConvergenceError: bisection cap reached above lambda_tol
    """
    cfg = settings or ToolkitSettings()
    validate_epsilon(epsilon)
    lo, hi = validate_bracket(*bracket)
    tol = cfg.oracle.lambda_tol if lambda_tol is None else lambda_tol
    overrides = dict(params or {})
    overrides[model.epsilon_param] = epsilon
    base = model.bind(**overrides)
    factory = geometry or (lambda p: default_geometry(model, p, cfg.oracle))

    stats = IntegrationStats()
    trace: list[TraceEntry] = []

    def classify(lam: float) -> Side:
        bound = model.bind_lambda(lam, params=base)
        outcome = run_exit(model, bound, cfg, factory(bound))
        stats.add(outcome.stats)
        trace.append(TraceEntry(lam, outcome.side))
        logger.debug("Exit classified", lam=lam, side=outcome.side.value, reason=outcome.reason,
                     steps=outcome.stats.steps)
        if outcome.side is Side.UNDECIDED:
            raise OracleBracketError((lo, hi), f"undecided classification at lambda={lam!r}: {outcome.reason}")
        return outcome.side

    with logger.context(model=model.name, epsilon=epsilon):
        side_lo, side_hi = classify(lo), classify(hi)
        if side_lo is side_hi:
            raise OracleBracketError((lo, hi), f"both ends classify {side_lo.value}")
        logger.info("Oracle orientation", below=side_lo.value, above=side_hi.value)

        a, b = lo, hi
        probes = np.linspace(lo, hi, cfg.oracle.interior_probes + 2)[1:-1]
        for lam in probes:
            if classify(float(lam)) is side_lo:
                a = max(a, float(lam))
            else:
                b = min(b, float(lam))
        check_monotone(trace, (lo, hi))

        iterations = 0
        while b - a > tol:
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            if iterations >= cfg.oracle.max_bisections:
                raise ConvergenceError("bisect_canard", f"bracket width {b - a:.3e} above {tol:.1e}", iterations)
            if classify(mid) is side_lo:
                a = mid
            else:
                b = mid
            iterations += 1

    result = OracleResult(
        model=model.name,
        epsilon=epsilon,
        bracket=(a, b),
        lambda_c=0.5 * (a + b),
        lambda_tol=tol,
        orientation=(side_lo, side_hi),
        trace=tuple(trace),
        stats=stats,
        iterations=iterations,
    )
    logger.info("Canard explosion located", model=model.name, epsilon=epsilon,
                lambda_c=result.lambda_c, width=result.width, steps=stats.steps)
    return result


# ============================================================================
# Orbit data for plots
# ============================================================================

def orbit_samples(
    model: SystemModel,
    lam: float,
    epsilon: float,
    settings: ToolkitSettings | None = None,
    geometry: GeometryFactory | None = None,
    params: Mapping[str, float] | None = None,
) -> tuple[Side, np.ndarray, np.ndarray]:
    """Side plus recorded (times, states) of the classification run at lam."""
    cfg = settings or ToolkitSettings()
    overrides = dict(params or {})
    overrides[model.epsilon_param] = epsilon
    bound = model.bind_lambda(lam, params=model.bind(**overrides))
    factory = geometry or (lambda p: default_geometry(model, p, cfg.oracle))
    outcome = run_exit(model, bound, cfg, factory(bound), record=True)
    times, states = outcome.samples()
    return outcome.side, times, states


def write_gnuplot_data(
    path: Path,
    model: SystemModel,
    orbits: Mapping[float, tuple[Side, np.ndarray, np.ndarray]],
) -> Path:
    """
    One gnuplot data block per lambda, separated by two blank lines so
    `plot ... index i` selects an orbit. Columns: t, then the model states.
    """
    lines = [f"# model {model.name}; columns: t {' '.join(model.states)}"]
    for index, (lam, (side, times, states)) in enumerate(sorted(orbits.items())):
        if index:
            lines.extend(["", ""])
        lines.append(f"# lambda = {lam!r} side = {side.value}")
        for t, z in zip(times, states):
            lines.append(" ".join(repr(float(v)) for v in (t, *z)))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Orbit data written", path=str(path), orbits=len(orbits))
    return path


# ============================================================================
# Epsilon sweep
# ============================================================================

CSV_COLUMNS = (
    "epsilon", "lambda_H", "omega0", "l1_mc", "K_route",
    "lambda_c_pred", "lambda_c_obs", "abs_err", "error",
)

# failures recorded per row instead of aborting the sweep
ROW_ERRORS = (
    NoHopfError, DegenerateHopfError, SingularSystemError, ConvergenceError,
    OracleBracketError, IntegrationError, EvaluationError, ValidationError, ConfigError,
)


@dataclass(frozen=True)
class SweepCase:
    epsilon: float
    hopf_bracket: tuple[float, float]
    oracle_bracket: tuple[float, float]

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> 'SweepCase':
        try:
            case = cls(
                epsilon=float(data["epsilon"]),
                hopf_bracket=tuple(float(v) for v in data["hopf_bracket"]),  # type: ignore[arg-type]
                oracle_bracket=tuple(float(v) for v in data["oracle_bracket"]),  # type: ignore[arg-type]
            )
            validate_epsilon(case.epsilon)
            validate_bracket(*case.hopf_bracket)
            validate_bracket(*case.oracle_bracket)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError("<sweep>", f"invalid sweep case {data!r}: {e}") from None
        return case


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    route: str = ""
    lambda_H: float | None = None
    omega0: float | None = None
    l1_mc: float | None = None
    K_route: float | None = None
    lambda_c_pred: float | None = None
    lambda_c_obs: float | None = None
    abs_err: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict[str, Any]:
        data = {name: getattr(self, name) for name in CSV_COLUMNS}
        data["route"] = self.route
        return data

    def csv_row(self) -> dict[str, str]:
        return {name: "" if getattr(self, name) is None else str(getattr(self, name)) for name in CSV_COLUMNS}


@dataclass(frozen=True)
class SweepResult:
    model: str
    route: Route
    rows: tuple[SweepRow, ...]

    @property
    def slope(self) -> float | None:
        """Fitted d log|err| / d log eps over successful rows; None below two distinct eps."""
        points = [
            (r.epsilon, r.abs_err) for r in self.rows
            if r.ok and r.abs_err is not None and r.abs_err > 0.0 and math.isfinite(r.abs_err)
        ]
        if len({eps for eps, _ in points}) < 2:
            return None
        eps, err = np.log(np.array(points)).T
        return float(np.polyfit(eps, err, 1)[0])

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row.csv_row())
        return buffer.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "route": self.route.value,
            "rows": [row.to_dict() for row in self.rows],
            "slope": self.slope,
            "failed_rows": sum(1 for r in self.rows if not r.ok),
        }


def run_sweep_row(
    model: SystemModel,
    case: SweepCase,
    settings: ToolkitSettings,
    route: Route,
    params: Mapping[str, float] | None = None,
    geometry: GeometryFactory | None = None,
) -> SweepRow:
    """Full pipeline at one eps; failures land in the row's error field."""
    row = SweepRow(epsilon=case.epsilon, route=route.value)
    with logger.context(model=model.name, epsilon=case.epsilon):
        try:
            outcome = analyze_model(model, case.epsilon, case.hopf_bracket, settings, params)
            prediction = outcome.prediction(route)
            row = SweepRow(
                epsilon=case.epsilon,
                route=route.value,
                lambda_H=outcome.hopf.lambda_H,
                omega0=outcome.hopf.omega0,
                l1_mc=outcome.report.l1_mc,
                K_route=prediction.K,
                lambda_c_pred=prediction.lambda_c,
            )
            observed = bisect_canard(
                model, case.epsilon, case.oracle_bracket, settings=settings, geometry=geometry, params=params
            )
        except ROW_ERRORS as e:
            logger.warning("Sweep row failed", error_type=type(e).__name__, error=str(e))
            return dataclasses.replace(row, error=f"{type(e).__name__}: {e}")
    return dataclasses.replace(
        row,
        lambda_c_obs=observed.lambda_c,
        abs_err=abs(prediction.lambda_c - observed.lambda_c),
    )


class SweepOrchestrator:
    """Runs sweep rows in worker threads (parallel) or one after another."""

    def __init__(self, parallel: bool = True, max_workers: int = 4, timeout_seconds: float = 1800.0):
        self.parallel = parallel
        self.max_workers = max_workers
        self.timeout_seconds = timeout_seconds

    @classmethod
    def from_settings(cls, settings: SweepSettings) -> 'SweepOrchestrator':
        return cls(settings.parallel, settings.max_workers, settings.timeout_seconds)

    async def execute(self, cases: Sequence[SweepCase], runner: Callable[[SweepCase], SweepRow]) -> list[SweepRow]:
        logger.debug("Starting sweep", rows=len(cases), parallel=self.parallel, max_workers=self.max_workers)
        if not cases:
            return []
        if self.parallel and len(cases) > 1:
            return await self._execute_parallel(cases, runner)
        return self._execute_sequential(cases, runner)

    async def _execute_parallel(
        self, cases: Sequence[SweepCase], runner: Callable[[SweepCase], SweepRow]
    ) -> list[SweepRow]:
        loop = asyncio.get_running_loop()
        executor = ThreadPoolExecutor(max_workers=self.max_workers, thread_name_prefix="sweep")

        async def run_row(case: SweepCase) -> SweepRow:
            return await loop.run_in_executor(executor, runner, case)

        try:
            results: Sequence[SweepRow | BaseException] = await asyncio.wait_for(
                asyncio.gather(*(run_row(c) for c in cases), return_exceptions=True),
                timeout=self.timeout_seconds,
            )
        except asyncio.TimeoutError:
            logger.error("Sweep timeout exceeded", timeout_seconds=self.timeout_seconds, rows=len(cases))
            results = [TimeoutError(f"sweep timeout of {self.timeout_seconds:g}s exceeded") for _ in cases]
        finally:
            executor.shutdown(wait=False, cancel_futures=True)

        rows: list[SweepRow] = []
        for case, result in zip(cases, results):
            if isinstance(result, BaseException):
                logger.error("Exception during sweep row", epsilon=case.epsilon, error=str(result))
                rows.append(SweepRow(epsilon=case.epsilon, error=f"{type(result).__name__}: {result}"))
            else:
                rows.append(result)
        logger.info("Parallel sweep complete", rows=len(rows), failed=sum(1 for r in rows if not r.ok))
        return rows

    def _execute_sequential(
        self, cases: Sequence[SweepCase], runner: Callable[[SweepCase], SweepRow]
    ) -> list[SweepRow]:
        rows = []
        for case in cases:
            try:
                rows.append(runner(case))
            except Exception as e:
                logger.error("Exception during sweep row", epsilon=case.epsilon, error=str(e))
                rows.append(SweepRow(epsilon=case.epsilon, error=f"{type(e).__name__}: {e}"))
        return rows


async def sweep_epsilon_async(
    model: SystemModel,
    cases: Sequence[SweepCase],
    settings: ToolkitSettings | None = None,
    route: str | Route | None = None,
    params: Mapping[str, float] | None = None,
    geometry: GeometryFactory | None = None,
) -> SweepResult:
    cfg = settings or ToolkitSettings()
    chosen = default_route(model.dimension) if route is None else parse_route(route)
    orchestrator = SweepOrchestrator.from_settings(cfg.sweep)
    rows = await orchestrator.execute(
        cases, lambda case: run_sweep_row(model, case, cfg, chosen, params, geometry)
    )
    return SweepResult(model=model.name, route=chosen, rows=tuple(rows))


@log_execution(level=LogLevel.DEBUG)
def sweep_epsilon(
    model: SystemModel,
    cases: Sequence[SweepCase],
    settings: ToolkitSettings | None = None,
    route: str | Route | None = None,
    params: Mapping[str, float] | None = None,
    geometry: GeometryFactory | None = None,
) -> SweepResult:
    """
    Predicted against observed lambda_c for every eps row.

    Row failures are recorded in the row and the sweep continues. The
    default route is gh for planar models and mc otherwise.
    """
    result = asyncio.run(sweep_epsilon_async(model, cases, settings, route, params, geometry))
    logger.info("Sweep finished", model=model.name, rows=len(result.rows), slope=result.slope)
    return result


def sweep_cases_from_mapping(data: Mapping[str, Any], model_name: str) -> tuple[list[SweepCase], dict[str, Any]]:
    """Cases and options (route, params) of one model entry of a sweep file."""
    entry = data.get(model_name)
    if not isinstance(entry, Mapping):
        raise ConfigError("<sweep>", f"no sweep entry for model '{model_name}'")
    cases = [SweepCase.from_mapping(c) for c in entry.get("cases", ())]
    if not cases:
        raise ConfigError("<sweep>", f"sweep entry '{model_name}' has no cases")
    options = {"route": entry.get("route"), "params": dict(entry.get("params") or {})}
    return cases, options


def load_sweep_cases(path: Path, model_name: str) -> Result[tuple[list[SweepCase], dict[str, Any]], ConfigError]:
    """Read the sweep YAML; every failure becomes a ConfigError."""
    def parse(data: dict[str, Any]) -> Result[tuple[list[SweepCase], dict[str, Any]], ConfigError]:
        try:
            return Success(sweep_cases_from_mapping(data, model_name))
        except ConfigError as e:
            return Failure(ConfigError(path=str(path), reason=e.reason))

    return flow(load_config(path), bind(parse))
