"""
Shared Utility Functions

Timing, number formatting and JSON helpers used across modules.
"""

import json
import math
from time import perf_counter
from typing import Any, Callable, TypeVar

import numpy as np

T = TypeVar('T')


def measure_duration_ms(func: Callable[[], T]) -> tuple[T, int]:
    """
    Measure function duration in milliseconds.

    Args:
        func: A callable that takes no arguments

    Returns:
        A tuple of (result, duration_ms)
    """
    start = perf_counter()
    result = func()
    end = perf_counter()
    duration_ms = int((end - start) * 1000)
    return result, duration_ms


def format_sig(value: float | None, digits: int = 6) -> str:
    """Round to significant digits for human-readable tables."""
    if value is None:
        return "-"
    if not math.isfinite(value):
        return str(value)
    return f"{value:.{digits}g}"


def complex_to_json(value: complex) -> dict[str, float]:
    return {"re": float(value.real), "im": float(value.imag)}


def to_jsonable(value: Any) -> Any:
    """
    Convert numpy scalars/arrays, complex numbers and tuples to JSON types.

    Non-finite floats become None so the output stays valid JSON.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return complex_to_json(complex(value))
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return f if math.isfinite(f) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dumps_report(data: dict[str, Any]) -> str:
    """Serialize a report deterministically (sorted keys, indent=2)."""
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True)
