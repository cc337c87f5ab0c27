"""
Toolkit Settings

Frozen dataclass tree holding every numerical default of the pipeline.
Built from config/defaults.yaml; any section or key missing from the file
falls back to the values declared here.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from returns.result import Failure, Result, Success

from fp_utils import ConfigError, load_config
from logger import get_logger
from type_safety import validate_tolerance

logger = get_logger(__name__)

DEFAULTS_PATH = Path(__file__).parent.parent / "config" / "defaults.yaml"


@dataclass(frozen=True)
class HopfSettings:
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    hopf_tol: float = 1e-10
    max_bisections: int = 200
    eigen_residual: float = 1e-10
    # Relative FD step for Jacobians; None selects machine-eps ** (1/3)
    fd_step: float | None = None
    secant: bool = True

    def __post_init__(self) -> None:
        validate_tolerance(self.newton_tol, "hopf.newton_tol")
        validate_tolerance(self.hopf_tol, "hopf.hopf_tol")
        validate_tolerance(self.eigen_residual, "hopf.eigen_residual")
        if self.newton_max_iter < 1 or self.max_bisections < 1:
            raise ValueError("hopf iteration caps must be >= 1")
        if self.fd_step is not None:
            validate_tolerance(self.fd_step, "hopf.fd_step")


@dataclass(frozen=True)
class MultilinearSettings:
    step_b: float | None = None
    step_c: float | None = None
    richardson: bool = False
    equilibrium_tol: float = 1e-10

    def __post_init__(self) -> None:
        for name in ("step_b", "step_c"):
            value = getattr(self, name)
            if value is not None:
                validate_tolerance(value, f"multilinear.{name}")
        validate_tolerance(self.equilibrium_tol, "multilinear.equilibrium_tol")


@dataclass(frozen=True)
class LyapunovSettings:
    degeneracy_threshold: float = 1e-8
    resonance_guard: float = 1e-6
    rotation_tol: float = 1e-8

    def __post_init__(self) -> None:
        validate_tolerance(self.degeneracy_threshold, "lyapunov.degeneracy_threshold")
        validate_tolerance(self.resonance_guard, "lyapunov.resonance_guard")
        validate_tolerance(self.rotation_tol, "lyapunov.rotation_tol")


@dataclass(frozen=True)
class IntegratorSettings:
    """Adaptive integrator controls (tolerances, budgets, bounds)."""
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_step: float = math.inf
    # None means "derive from epsilon" (t_max_factor / epsilon)
    max_time: float | None = None
    t_max_factor: float = 400.0
    max_steps: int = 10_000_000
    blow_up: float = 1e6
    dense_output: bool = True

    def __post_init__(self) -> None:
        validate_tolerance(self.rel_tol, "integrator.rel_tol", floor=1e-15)
        validate_tolerance(self.abs_tol, "integrator.abs_tol")
        if not self.max_step > 0:
            raise ValueError(f"integrator.max_step must be > 0, got {self.max_step!r}")
        if self.max_time is not None:
            validate_tolerance(self.max_time, "integrator.max_time")
        if self.max_steps < 1:
            raise ValueError("integrator.max_steps must be >= 1")
        validate_tolerance(self.blow_up, "integrator.blow_up")

    def time_limit(self, epsilon: float) -> float:
        if self.max_time is not None:
            return self.max_time
        return self.t_max_factor / epsilon


@dataclass(frozen=True)
class VdpGeometrySettings:
    seed_x: float = -1.0
    settle_guard_x: float = -0.9
    right_x: float = 1.0
    # left section sits at -left_factor * sqrt(eps)
    left_factor: float = 0.5


@dataclass(frozen=True)
class FhnGeometrySettings:
    seed_fraction: float = 0.85
    escape_offset: float = 0.4
    turnback_factor: float = 0.5
    turnback_min: float = 0.005
    turnback_max: float = 0.1


@dataclass(frozen=True)
class OracleSettings:
    lambda_tol: float = 1e-9
    max_bisections: int = 200
    interior_probes: int = 2
    settle_factor: float = 10.0
    capture_factor: float = 1e-3
    vdp: VdpGeometrySettings = field(default_factory=VdpGeometrySettings)
    fhn: FhnGeometrySettings = field(default_factory=FhnGeometrySettings)

    def __post_init__(self) -> None:
        validate_tolerance(self.lambda_tol, "oracle.lambda_tol")
        validate_tolerance(self.settle_factor, "oracle.settle_factor")
        validate_tolerance(self.capture_factor, "oracle.capture_factor")
        if self.interior_probes < 0 or self.max_bisections < 1:
            raise ValueError("oracle.interior_probes must be >= 0 and max_bisections >= 1")


@dataclass(frozen=True)
class SweepSettings:
    parallel: bool = True
    max_workers: int = 4
    timeout_seconds: float = 1800.0

    def __post_init__(self) -> None:
        if self.max_workers < 1:
            raise ValueError("sweep.max_workers must be >= 1")


@dataclass(frozen=True)
class LoggingSettings:
    level: str = "warning"
    json_format: bool = False
    log_file: str | None = None


@dataclass(frozen=True)
class ToolkitSettings:
    hopf: HopfSettings = field(default_factory=HopfSettings)
    multilinear: MultilinearSettings = field(default_factory=MultilinearSettings)
    lyapunov: LyapunovSettings = field(default_factory=LyapunovSettings)
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    oracle: OracleSettings = field(default_factory=OracleSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    logging: LoggingSettings = field(default_factory=LoggingSettings)

    def with_overrides(
        self,
        rel_tol: float | None = None,
        abs_tol: float | None = None,
        lambda_tol: float | None = None,
    ) -> 'ToolkitSettings':
        """Return a copy with CLI-level overrides applied."""
        integrator = self.integrator
        if rel_tol is not None:
            integrator = dataclasses.replace(integrator, rel_tol=rel_tol)
        if abs_tol is not None:
            integrator = dataclasses.replace(integrator, abs_tol=abs_tol)
        oracle = self.oracle
        if lambda_tol is not None:
            oracle = dataclasses.replace(oracle, lambda_tol=lambda_tol)
        return dataclasses.replace(self, integrator=integrator, oracle=oracle)


def _build(cls: type, data: Any, where: str) -> Any:
    """Instantiate a settings dataclass from a mapping, recursing into nested sections."""
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ValueError(f"section '{where}' must be a mapping")

    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ValueError(f"unknown keys in '{where}': {', '.join(unknown)}")

    kwargs: dict[str, Any] = {}
    for name, value in data.items():
        default = getattr(cls(), name) if name in known else None
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}")
        elif isinstance(default, float) and isinstance(value, (int, float)) and not isinstance(value, bool):
            kwargs[name] = float(value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


def settings_from_mapping(data: dict[str, Any], source: str = "<mapping>") -> Result[ToolkitSettings, ConfigError]:
    """Build ToolkitSettings from a parsed mapping."""
    try:
        return Success(_build(ToolkitSettings, data, "settings"))
    except (TypeError, ValueError) as e:
        return Failure(ConfigError(path=source, reason=str(e)))


def load_settings(path: Path | None = None) -> Result[ToolkitSettings, ConfigError]:
    """
    Load settings from YAML.

    Returns:
        Success[ToolkitSettings]; Failure[ConfigError] when the file is
        missing, unparsable or holds invalid values.
    """
    config_path = path or DEFAULTS_PATH
    return load_config(config_path).bind(
        lambda data: settings_from_mapping(data, str(config_path))
    )
