"""
Type Safety Module

NewType wrappers for validated numerical inputs.
Validation happens once at the boundary (CLI, settings, config loader);
kernels accept the NewType and trust it.
"""

import math
from typing import NewType


Epsilon = NewType('Epsilon', float)
"""Singular-perturbation parameter, strictly positive and finite."""

Tolerance = NewType('Tolerance', float)
"""Positive finite tolerance."""

Bracket = NewType('Bracket', tuple)
"""Ordered (lo, hi) parameter interval with finite ends."""


def validate_epsilon(value: float) -> Epsilon:
    """
    Validate an epsilon value.

    Args:
        value: Candidate epsilon

    Returns:
        Validated Epsilon

    Raises:
        ValueError: If value is not a finite positive number
    """
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"Invalid epsilon: {value!r}. Must be finite and > 0")
    return Epsilon(float(value))


def validate_tolerance(value: float, field_name: str = "tolerance", floor: float = 0.0) -> Tolerance:
    """
    Validate a tolerance.

    Args:
        value: Candidate tolerance
        field_name: Field name for error messages
        floor: Smallest admissible value (inclusive), e.g. 1e-15 for rtol

    Raises:
        ValueError: If value is non-finite, non-positive or below floor
    """
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{field_name} must be finite and > 0, got {value!r}")
    if value < floor:
        raise ValueError(f"{field_name} must be >= {floor:g}, got {value!r}")
    return Tolerance(float(value))


def validate_bracket(lo: float, hi: float, allow_degenerate: bool = False) -> Bracket:
    """
    Validate an ordered parameter bracket.

    Args:
        lo: Lower end
        hi: Upper end
        allow_degenerate: Accept lo == hi (single-point continuation)

    Raises:
        ValueError: If an end is non-finite or the order is wrong
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"Bracket ends must be finite, got [{lo!r}, {hi!r}]")
    if hi < lo or (hi == lo and not allow_degenerate):
        raise ValueError(f"Bracket must satisfy lo < hi, got [{lo!r}, {hi!r}]")
    return Bracket((float(lo), float(hi)))


__all__ = [
    "Epsilon", "Tolerance", "Bracket",
    "validate_epsilon", "validate_tolerance", "validate_bracket",
]
