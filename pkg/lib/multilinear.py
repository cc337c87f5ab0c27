"""
Multilinear Forms

Second and third derivative forms B(u, v), C(u, v, w) of a vector field at
an expansion point, from directional finite differences and polarization.
Complex arguments are expanded over real and imaginary parts.
"""

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from fp_utils import EvaluationError, ValidationError
from logger import get_logger
from model import SystemModel
from settings import MultilinearSettings

logger = get_logger(__name__)

MACHINE_EPS = float(np.finfo(float).eps)
DEFAULT_STEP_B = MACHINE_EPS ** (1.0 / 4.0)
DEFAULT_STEP_C = MACHINE_EPS ** (1.0 / 5.0)

VectorFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ExpansionPoint:
    """A vector function together with the point z* it is expanded about."""
    func: VectorFunction
    state: np.ndarray
    model: SystemModel | None = None
    params: Mapping[str, float] | None = None

    @property
    def dimension(self) -> int:
        return int(self.state.size)

    @classmethod
    def at_equilibrium(
        cls,
        model: SystemModel,
        state: Sequence[float],
        params: Mapping[str, float],
        tol: float = 1e-10,
    ) -> 'ExpansionPoint':
        """
        Expansion point of a model right-hand side.

        Raises:
            ValidationError: ||F(z*)|| > tol, i.e. z* is not an equilibrium
        """
        z = np.asarray(state, dtype=float)
        residual = float(np.linalg.norm(model.evaluate(z, params)))
        if residual > tol:
            raise ValidationError(
                "expansion_point",
                f"state is not an equilibrium of '{model.name}': ||F|| = {residual:.3e} > {tol:.1e}",
            )
        return cls(func=lambda w: model.evaluate(w, params), state=z, model=model, params=params)

    @classmethod
    def from_function(cls, func: VectorFunction, state: Sequence[float]) -> 'ExpansionPoint':
        return cls(func=func, state=np.asarray(state, dtype=float))

    def evaluate(self, w: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(w), dtype=float)


def _scaled_step(base: float, point: ExpansionPoint) -> float:
    return base * max(1.0, float(np.linalg.norm(point.state)))


def _second_difference(point: ExpansionPoint, direction: np.ndarray, h: float) -> np.ndarray:
    z = point.state
    return (point.evaluate(z + h * direction) - 2.0 * point.evaluate(z) + point.evaluate(z - h * direction)) / (h * h)


def _third_difference(point: ExpansionPoint, direction: np.ndarray, h: float) -> np.ndarray:
    z = point.state
    return (
        point.evaluate(z + 2.0 * h * direction)
        - 2.0 * point.evaluate(z + h * direction)
        + 2.0 * point.evaluate(z - h * direction)
        - point.evaluate(z - 2.0 * h * direction)
    ) / (2.0 * h ** 3)


def _directional(
    stencil: Callable[[ExpansionPoint, np.ndarray, float], np.ndarray],
    point: ExpansionPoint,
    direction: np.ndarray,
    h: float,
    richardson: bool,
) -> np.ndarray:
    coarse = stencil(point, direction, h)
    if not richardson:
        return coarse
    fine = stencil(point, direction, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def _split(vector: Sequence[complex]) -> tuple[np.ndarray, np.ndarray | None]:
    arr = np.asarray(vector)
    if np.iscomplexobj(arr):
        imag = arr.imag.astype(float)
        return arr.real.astype(float), (imag if np.any(imag != 0.0) else None)
    return arr.astype(float), None


def _check_result(values: np.ndarray, operation: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise EvaluationError(operation, "non-finite finite-difference result")
    return values


def _bilinear_real(point: ExpansionPoint, u: np.ndarray, v: np.ndarray, h: float, richardson: bool) -> np.ndarray:
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return np.zeros(point.dimension)
    uh, vh = u / nu, v / nv
    plus = _directional(_second_difference, point, uh + vh, h, richardson)
    minus = _directional(_second_difference, point, uh - vh, h, richardson)
    return 0.25 * (plus - minus) * (nu * nv)


def _trilinear_real(
    point: ExpansionPoint, u: np.ndarray, v: np.ndarray, w: np.ndarray, h: float, richardson: bool
) -> np.ndarray:
    norms = [float(np.linalg.norm(a)) for a in (u, v, w)]
    if min(norms) == 0.0:
        return np.zeros(point.dimension)
    uh, vh, wh = u / norms[0], v / norms[1], w / norms[2]
    total = np.zeros(point.dimension)
    for sv, sw in itertools.product((1.0, -1.0), repeat=2):
        total += sv * sw * _directional(_third_difference, point, uh + sv * vh + sw * wh, h, richardson)
    return total / 24.0 * (norms[0] * norms[1] * norms[2])


def _expand_complex(args: Sequence[Sequence[complex]], real_form: Callable[..., np.ndarray]) -> np.ndarray:
    """Evaluate a real multilinear form on complex arguments by multilinearity."""
    split = [_split(a) for a in args]
    if all(imag is None for _, imag in split):
        return real_form(*(re for re, _ in split))

    total = np.zeros_like(split[0][0], dtype=complex)
    options = [[(re, 1.0 + 0j)] + ([(im, 1j)] if im is not None else []) for re, im in split]
    for combo in itertools.product(*options):
        factor = complex(np.prod([c for _, c in combo]))
        total = total + factor * real_form(*(vec for vec, _ in combo))
    return total


def bilinear_B(
    at: ExpansionPoint,
    u: Sequence[complex],
    v: Sequence[complex],
    h: float | None = None,
    richardson: bool = False,
) -> np.ndarray:
    """
    B(u, v) = sum_jk d2F/dz_j dz_k u_j v_k at z*.

    Uses B(u,v) = 1/4 [D2_{u+v} - D2_{u-v}] with symmetric second
    differences; the linear part of F cancels.
    """
    step = _scaled_step(DEFAULT_STEP_B, at) if h is None else h
    result = _expand_complex((u, v), lambda a, b: _bilinear_real(at, a, b, step, richardson))
    return _check_result(result, "bilinear_B")


def trilinear_C(
    at: ExpansionPoint,
    u: Sequence[complex],
    v: Sequence[complex],
    w: Sequence[complex],
    h: float | None = None,
    richardson: bool = False,
) -> np.ndarray:
    """C(u, v, w) from the four-term polarization of directional third differences."""
    step = _scaled_step(DEFAULT_STEP_C, at) if h is None else h
    result = _expand_complex((u, v, w), lambda a, b, c: _trilinear_real(at, a, b, c, step, richardson))
    return _check_result(result, "trilinear_C")


class MultilinearForms:
    """
    B and C bound to one expansion point and one set of step settings.

    Usage:
        forms = MultilinearForms(point, settings.multilinear)
        g20 = np.vdot(p, forms.B(q, q))
    """

    def __init__(self, point: ExpansionPoint, settings: MultilinearSettings | None = None):
        self.point = point
        self.settings = settings or MultilinearSettings()
        self.step_b = self.settings.step_b or _scaled_step(DEFAULT_STEP_B, point)
        self.step_c = self.settings.step_c or _scaled_step(DEFAULT_STEP_C, point)

    @property
    def dimension(self) -> int:
        return self.point.dimension

    def B(self, u: Sequence[complex], v: Sequence[complex]) -> np.ndarray:
        return bilinear_B(self.point, u, v, self.step_b, self.settings.richardson)

    def C(self, u: Sequence[complex], v: Sequence[complex], w: Sequence[complex]) -> np.ndarray:
        return trilinear_C(self.point, u, v, w, self.step_c, self.settings.richardson)

    def basis(self, i: int) -> np.ndarray:
        e = np.zeros(self.dimension)
        e[i] = 1.0
        return e

    def second_partial(self, i: int, j: int) -> np.ndarray:
        """All components of d2F/dz_i dz_j at z*."""
        return self.B(self.basis(i), self.basis(j)).real

    def third_partial(self, i: int, j: int, k: int) -> np.ndarray:
        return self.C(self.basis(i), self.basis(j), self.basis(k)).real
