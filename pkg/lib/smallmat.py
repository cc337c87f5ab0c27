"""
Small Dense Linear Algebra

Jacobians (analytic or central finite differences), eigenpairs of small real
matrices, and the shifted complex solves needed by the Lyapunov formulas.
All functions are pure and operate on numpy arrays.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from fp_utils import ConvergenceError, SingularSystemError, ValidationError
from logger import get_logger
from model import SystemModel

logger = get_logger(__name__)

MAX_DIMENSION = 16
MACHINE_EPS = float(np.finfo(float).eps)
DEFAULT_FD_STEP = MACHINE_EPS ** (1.0 / 3.0)
SOLVE_RESIDUAL_TOL = 1e-12


class SchemeKind(Enum):
    ANALYTIC = "analytic"
    CENTRAL_FD = "central_fd"


@dataclass(frozen=True)
class JacobianScheme:
    kind: SchemeKind
    h: float = DEFAULT_FD_STEP

    @classmethod
    def analytic(cls) -> 'JacobianScheme':
        return cls(SchemeKind.ANALYTIC)

    @classmethod
    def central_fd(cls, h: float | None = None) -> 'JacobianScheme':
        return cls(SchemeKind.CENTRAL_FD, DEFAULT_FD_STEP if h is None else h)


def default_scheme(model: SystemModel, fd_step: float | None = None) -> JacobianScheme:
    """Analytic when the model declares a Jacobian, central FD otherwise."""
    if model.has_jacobian:
        return JacobianScheme.analytic()
    return JacobianScheme.central_fd(fd_step)


def fd_jacobian(
    func: Callable[[np.ndarray], np.ndarray],
    state: Sequence[float],
    h: float = DEFAULT_FD_STEP,
) -> np.ndarray:
    """
    Central-difference Jacobian of an arbitrary vector function.

    Column j uses the step h * max(1, |state_j|).
    """
    z = np.asarray(state, dtype=float)
    f0 = np.asarray(func(z), dtype=float)
    jac = np.empty((f0.size, z.size))
    for j in range(z.size):
        step = h * max(1.0, abs(z[j]))
        forward = z.copy()
        backward = z.copy()
        forward[j] += step
        backward[j] -= step
        # actual step after rounding of z +- step
        width = forward[j] - backward[j]
        jac[:, j] = (np.asarray(func(forward)) - np.asarray(func(backward))) / width
    return jac


def jacobian(
    model: SystemModel,
    state: Sequence[float],
    params: Mapping[str, float] | None = None,
    scheme: JacobianScheme | None = None,
) -> np.ndarray:
    """
    Jacobian of the model right-hand side at a state.

    Evaluation failures (EvaluationError) propagate unchanged.
    """
    if len(state) != model.dimension:
        raise ValidationError("jacobian", f"state has {len(state)} components, model has {model.dimension}")
    bound = model.params if params is None else params
    chosen = scheme or default_scheme(model)
    if chosen.kind is SchemeKind.ANALYTIC:
        return model.jacobian_analytic(state, bound)
    return fd_jacobian(lambda z: model.evaluate(z, bound), state, chosen.h)


# ============================================================================
# Eigen-decomposition
# ============================================================================

@dataclass(frozen=True, eq=False)
class EigenPair:
    value: complex
    vector: np.ndarray

    @property
    def is_real(self) -> bool:
        return self.value.imag == 0.0


def _check_matrix(M: np.ndarray, operation: str) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(operation, f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_DIMENSION:
        raise ValidationError(operation, f"dimension {A.shape[0]} exceeds {MAX_DIMENSION}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(operation, "matrix has non-finite entries")
    return A


def eigen_small(M: np.ndarray, residual_tol: float = 1e-10) -> list[EigenPair]:
    """
    All eigenpairs of a small real matrix.

    Sorted by descending real part, then descending imaginary part. Vectors
    have unit 2-norm; the member of a complex pair with negative imaginary
    part carries the conjugate of its partner's vector.

    Raises:
        ConvergenceError: LAPACK did not converge, or a residual
            ||M v - mu v|| exceeds residual_tol * ||M||
    """
    A = _check_matrix(M, "eigen_small")
    try:
        values, vectors = np.linalg.eig(A)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError("eigen_small", str(e)) from None

    order = sorted(range(len(values)), key=lambda k: (-values[k].real, -values[k].imag))
    pairs = [EigenPair(complex(values[k]), vectors[:, k].astype(complex)) for k in order]
    pairs = _conjugate_consistent(pairs)

    scale = max(float(np.linalg.norm(A, 2)), np.finfo(float).tiny)
    for pair in pairs:
        residual = float(np.linalg.norm(A @ pair.vector - pair.value * pair.vector))
        if residual > residual_tol * scale:
            raise ConvergenceError(
                "eigen_small",
                f"residual {residual:.3e} for eigenvalue {pair.value} exceeds {residual_tol:.1e}*||M||",
            )
    return pairs


def _conjugate_consistent(pairs: list[EigenPair]) -> list[EigenPair]:
    result = list(pairs)
    used: set[int] = set()
    for i, pair in enumerate(result):
        if i in used or pair.value.imag <= 0.0:
            continue
        target = np.conj(pair.value)
        candidates = [
            j for j, other in enumerate(result)
            if j != i and j not in used and other.value.imag < 0.0
        ]
        if not candidates:
            continue
        j = min(candidates, key=lambda k: abs(result[k].value - target))
        result[j] = EigenPair(complex(target), np.conj(pair.vector))
        used.update({i, j})
    return result


def eigenvalues(M: np.ndarray) -> np.ndarray:
    """Eigenvalues only, same ordering as eigen_small."""
    return np.array([p.value for p in eigen_small(M)])


# ============================================================================
# Linear solves
# ============================================================================

def solve_complex_shifted(
    M: np.ndarray,
    shift: complex,
    rhs: Sequence[complex],
    residual_tol: float = SOLVE_RESIDUAL_TOL,
) -> np.ndarray:
    """
    Solve (shift*I - M) x = rhs.

    With shift = 0 this returns -M^{-1} rhs.

    Raises:
        SingularSystemError: the shifted matrix is singular to working
            precision, or the residual contract cannot be met
    """
    A = _check_matrix(M, "solve_complex_shifted")
    b = np.asarray(rhs, dtype=complex)
    shifted = shift * np.eye(A.shape[0], dtype=complex) - A

    if np.linalg.cond(shifted) * MACHINE_EPS >= 1.0:
        raise SingularSystemError("solve_complex_shifted", f"shift {shift} makes the system singular")
    try:
        x = np.linalg.solve(shifted, b)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError("solve_complex_shifted", str(e)) from None

    bound = residual_tol * float(np.linalg.norm(b))
    residual = float(np.linalg.norm(shifted @ x - b))
    if residual > bound:
        # one step of iterative refinement
        x = x + np.linalg.solve(shifted, b - shifted @ x)
        residual = float(np.linalg.norm(shifted @ x - b))
    if residual > bound:
        raise SingularSystemError(
            "solve_complex_shifted",
            f"residual {residual:.3e} exceeds {residual_tol:.1e}*||rhs|| (ill-conditioned shift {shift})",
        )
    return x
