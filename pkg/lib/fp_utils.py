"""
Errors and Result Utilities

Typed exceptions raised by the numerical kernels, plus Result-returning
wrappers (returns library) for everything that touches the file system.

Kernels raise; loaders return Result. The CLI is the only place where
exceptions are turned into exit codes.
"""

import json
from pathlib import Path
from typing import Any, TypeVar

from returns.result import Failure, Result, Success, safe

from logger import get_logger

logger = get_logger(__name__)

T = TypeVar('T')
E = TypeVar('E')


# ============================================================================
# Configuration / input errors
# ============================================================================

class ConfigError(Exception):
    """Configuration or model file error."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"Config error at {path}: {reason}")


class ValidationError(Exception):
    """A value or structure failed a precondition."""

    def __init__(self, check_name: str, reason: str):
        self.check_name = check_name
        self.reason = reason
        super().__init__(f"Validation failed '{check_name}': {reason}")


class ExpressionSyntaxError(Exception):
    """Expression text could not be parsed."""

    def __init__(self, text: str, offset: int, reason: str):
        self.text = text
        self.offset = offset
        self.reason = reason
        super().__init__(f"Syntax error at byte {offset} in {text!r}: {reason}")


class UnknownIdentifierError(Exception):
    """Expression references an identifier the model does not declare."""

    def __init__(self, identifier: str, context: str):
        self.identifier = identifier
        self.context = context
        super().__init__(f"Unknown identifier '{identifier}' in {context}")


class EvaluationError(Exception):
    """Arithmetic failure while evaluating a right-hand side."""

    def __init__(self, expression: str, reason: str):
        self.expression = expression
        self.reason = reason
        super().__init__(f"Evaluation failed for {expression!r}: {reason}")


# ============================================================================
# Numerical errors
# ============================================================================

class ConvergenceError(Exception):
    """Iteration did not converge within its cap."""

    def __init__(self, operation: str, reason: str, iterations: int = 0):
        self.operation = operation
        self.reason = reason
        self.iterations = iterations
        super().__init__(
            f"{operation} did not converge after {iterations} iterations: {reason}"
        )


class SingularSystemError(Exception):
    """Linear system or transform is singular to working precision."""

    def __init__(self, operation: str, reason: str):
        self.operation = operation
        self.reason = reason
        super().__init__(f"Singular system in {operation}: {reason}")


class ResonanceError(SingularSystemError):
    """2iω0 is (numerically) an eigenvalue of the Jacobian."""

    def __init__(self, omega0: float, eigenvalue: complex, distance: float):
        self.omega0 = omega0
        self.eigenvalue = eigenvalue
        self.distance = distance
        super().__init__(
            "l1_kuznetsov",
            f"2i*omega0 = {2j * omega0} is within {distance:.3e} of eigenvalue {eigenvalue}"
        )


class NoHopfError(Exception):
    """No Hopf bifurcation could be located in the bracket."""

    def __init__(self, bracket: tuple[float, float], reason: str):
        self.bracket = bracket
        self.reason = reason
        super().__init__(f"No Hopf point in [{bracket[0]}, {bracket[1]}]: {reason}")


class DegenerateHopfError(Exception):
    """First Lyapunov coefficient too close to zero to classify."""

    def __init__(self, l1: float, threshold: float):
        self.l1 = l1
        self.threshold = threshold
        super().__init__(f"Degenerate Hopf: |l1| = {abs(l1):.3e} <= {threshold:.1e}")


class IntegrationError(Exception):
    """Base class for integrator failures."""

    def __init__(self, reason: str, t: float):
        self.reason = reason
        self.t = t
        super().__init__(f"Integration failed at t={t:.6g}: {reason}")


class StepUnderflowError(IntegrationError):
    """Step size collapsed (stiffness signal)."""


class StepBudgetError(IntegrationError):
    """Accepted-step budget exhausted."""


class BlowUpError(IntegrationError):
    """State left the configured bound or became non-finite."""


class OracleBracketError(Exception):
    """Oracle bracket is unusable (equal sides, undecided, non-monotone)."""

    def __init__(self, bracket: tuple[float, float], reason: str):
        self.bracket = bracket
        self.reason = reason
        super().__init__(f"Oracle bracket [{bracket[0]}, {bracket[1]}]: {reason}")


# ============================================================================
# Result-wrapped file operations
# ============================================================================

@safe
def _read_yaml_file(path: Path) -> dict[str, Any]:
    """Read a YAML file; empty files yield an empty dict."""
    import yaml
    with open(path) as f:
        result = yaml.safe_load(f)
        return result if result is not None else {}


@safe
def _read_json_file(path: Path) -> Any:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _wrap_read(
    path: Path,
    raw: Result[Any, Exception],
    kind: str
) -> Result[Any, ConfigError]:
    if isinstance(raw, Failure):
        exc = raw.failure()
        logger.error(
            f"Failed to load {kind}: {path}",
            config_path=str(path),
            error=str(exc)
        )
        return Failure(ConfigError(path=str(path), reason=f"Invalid {kind}: {exc}"))
    return raw


def load_config(config_path: Path) -> Result[dict[str, Any], ConfigError]:
    """
    Load a YAML configuration file.

    Returns:
        Success[dict] with the parsed mapping,
        Failure[ConfigError] if missing, unreadable or not a mapping.
    """
    logger.debug(f"Loading config from {config_path}", config_path=str(config_path))

    if not config_path.exists():
        logger.warning(f"Config file not found: {config_path}", config_path=str(config_path))
        return Failure(ConfigError(path=str(config_path), reason="File not found"))

    result = _wrap_read(config_path, _read_yaml_file(config_path), "YAML")
    if isinstance(result, Success) and not isinstance(result.unwrap(), dict):
        return Failure(ConfigError(path=str(config_path), reason="Top level must be a mapping"))
    return result


def load_json(path: Path) -> Result[Any, ConfigError]:
    """Load a JSON document with the same error contract as load_config."""
    if not path.exists():
        return Failure(ConfigError(path=str(path), reason="File not found"))
    return _wrap_read(path, _read_json_file(path), "JSON")


def get_or_log(
    result: Result[T, E],
    default: T,
    operation_name: str
) -> T:
    """Unwrap a Result or fall back to a default, logging the failure."""
    if isinstance(result, Success):
        return result.unwrap()  # type: ignore[no-any-return]

    logger.warning(
        f"{operation_name} failed, using default",
        operation=operation_name,
        error=str(result.failure())
    )
    return default


__all__ = [
    "ConfigError", "ValidationError", "ExpressionSyntaxError",
    "UnknownIdentifierError", "EvaluationError", "ConvergenceError",
    "SingularSystemError", "ResonanceError", "NoHopfError",
    "DegenerateHopfError", "IntegrationError", "StepUnderflowError",
    "StepBudgetError", "BlowUpError", "OracleBracketError",
    "Result", "Success", "Failure", "safe",
    "load_config", "load_json", "get_or_log",
]
