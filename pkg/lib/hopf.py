"""
Equilibria and Hopf Points

Damped Newton for equilibria, natural-parameter continuation with
eigenvalue tracking, and Hopf localization in the bifurcation parameter.

The Hopf search brackets a sign change of the test function
    psi(lambda) = prod_{i<j} (mu_i + mu_j)
over the Jacobian spectrum, which vanishes when a complex pair crosses the
imaginary axis; the crossing pair is then checked to be genuinely complex.
"""

import dataclasses
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from fp_utils import (
    ConvergenceError,
    EvaluationError,
    NoHopfError,
    SingularSystemError,
    ValidationError,
)
from logger import LogLevel, get_logger, log_execution
from model import SystemModel
from settings import HopfSettings
from smallmat import JacobianScheme, default_scheme, eigen_small, jacobian
from type_safety import validate_bracket

logger = get_logger(__name__)

MIN_DAMPING = 2.0 ** -12
# imaginary parts below this are treated as a real eigenvalue
REAL_EIGENVALUE_TOL = 1e-12


class Criticality(Enum):
    SUPER = "super"
    SUB = "sub"


@dataclass(frozen=True, eq=False)
class Equilibrium:
    state: np.ndarray
    params: Mapping[str, float]
    residual: float
    jacobian: np.ndarray
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "state": self.state.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
        }


@dataclass(frozen=True, eq=False)
class BranchPoint:
    lam: float
    equilibrium: Equilibrium
    eigenvalues: np.ndarray


@dataclass(frozen=True, eq=False)
class HopfPoint:
    """Hopf bifurcation point with gauge-fixed eigenvectors q, p."""
    lambda_H: float
    equilibrium: Equilibrium
    omega0: float
    q: np.ndarray
    p: np.ndarray
    eigenvalue: complex
    transversality: float | None = None
    bracket: tuple[float, float] | None = None
    iterations: int = 0
    criticality: Criticality | None = None
    eigenvalues: np.ndarray = field(default_factory=lambda: np.array([], dtype=complex))

    @property
    def jacobian(self) -> np.ndarray:
        return self.equilibrium.jacobian

    @property
    def dimension(self) -> int:
        return int(self.q.size)

    def with_criticality(self, criticality: Criticality) -> 'HopfPoint':
        return dataclasses.replace(self, criticality=criticality)

    def with_eigenvectors(self, q: np.ndarray, p: np.ndarray) -> 'HopfPoint':
        """Same point with a different (q, p) gauge."""
        return dataclasses.replace(self, q=np.asarray(q, dtype=complex), p=np.asarray(p, dtype=complex))

    def to_dict(self) -> dict:
        return {
            "lambda_H": self.lambda_H,
            "omega0": self.omega0,
            "equilibrium": self.equilibrium.state.tolist(),
            "eigenvalue": self.eigenvalue,
            "eigenvalues": list(self.eigenvalues),
            "q": list(self.q),
            "p": list(self.p),
            "transversality": self.transversality,
            "bracket": list(self.bracket) if self.bracket else None,
            "iterations": self.iterations,
            "criticality": self.criticality.value if self.criticality else None,
        }


# ============================================================================
# Equilibria
# ============================================================================

def find_equilibrium(
    model: SystemModel,
    params: Mapping[str, float],
    guess: Sequence[float],
    settings: HopfSettings | None = None,
    scheme: JacobianScheme | None = None,
) -> Equilibrium:
    """
    Damped Newton iteration for F(z; params) = 0.

    Raises:
        ConvergenceError: no convergence within newton_max_iter, or the
            damped step cannot reduce the residual
        SingularSystemError: singular Jacobian during iteration
    """
    cfg = settings or HopfSettings()
    chosen = scheme or default_scheme(model, cfg.fd_step)
    z = np.asarray(guess, dtype=float)
    if z.size != model.dimension or not np.all(np.isfinite(z)):
        raise ValidationError("find_equilibrium", f"guess must be {model.dimension} finite values")

    residual_vec = model.evaluate(z, params)
    residual = float(np.linalg.norm(residual_vec))

    for iteration in range(cfg.newton_max_iter + 1):
        if residual <= cfg.newton_tol:
            J = jacobian(model, z, params, chosen)
            logger.debug("Newton converged", iterations=iteration, residual=residual)
            return Equilibrium(z, params, residual, J, iteration)
        if iteration == cfg.newton_max_iter:
            break

        J = jacobian(model, z, params, chosen)
        try:
            if np.linalg.cond(J) * np.finfo(float).eps >= 1.0:
                raise np.linalg.LinAlgError("Jacobian is numerically singular")
            step = np.linalg.solve(J, -residual_vec)
        except np.linalg.LinAlgError as e:
            raise SingularSystemError("find_equilibrium", f"{e} at z={z.tolist()}") from None

        damping = 1.0
        while True:
            trial = z + damping * step
            try:
                trial_vec = model.evaluate(trial, params)
                trial_residual = float(np.linalg.norm(trial_vec))
            except EvaluationError:
                trial_residual = float("inf")
            if trial_residual < residual:
                break
            damping /= 2.0
            if damping < MIN_DAMPING:
                raise ConvergenceError(
                    "find_equilibrium",
                    f"damped Newton stalled at residual {residual:.3e}",
                    iteration + 1,
                )
        z, residual_vec, residual = trial, trial_vec, trial_residual

    raise ConvergenceError(
        "find_equilibrium", f"residual {residual:.3e} above {cfg.newton_tol:.1e}", cfg.newton_max_iter
    )


def track_eigenvalues(previous: Sequence[complex], current: Sequence[complex]) -> np.ndarray:
    """Reorder `current` so entry k continues `previous[k]` (minimal total distance)."""
    prev = np.asarray(previous, dtype=complex)
    cur = np.asarray(current, dtype=complex)
    if prev.size != cur.size:
        raise ValidationError("track_eigenvalues", "spectra differ in size")
    cost = np.abs(prev[:, None] - cur[None, :])
    _, cols = linear_sum_assignment(cost)
    return cur[cols]


def _spectrum(J: np.ndarray, settings: HopfSettings) -> np.ndarray:
    return np.array([pair.value for pair in eigen_small(J, settings.eigen_residual)])


def continue_equilibrium(
    model: SystemModel,
    lambda_range: tuple[float, float],
    steps: int,
    guess: Sequence[float] | None = None,
    params: Mapping[str, float] | None = None,
    settings: HopfSettings | None = None,
) -> list[BranchPoint]:
    """
    Natural-parameter continuation of an equilibrium branch.

    Each step reuses the previous equilibrium as Newton guess; eigenvalues
    are reordered to follow the previous step.

    Raises:
        ConvergenceError / SingularSystemError: naming the failing lambda
    """
    lo, hi = validate_bracket(*lambda_range, allow_degenerate=True)
    cfg = settings or HopfSettings()
    base = dict(params) if params is not None else dict(model.params)
    count = 1 if lo == hi else max(int(steps), 1) + 1
    lambdas = np.linspace(lo, hi, count)

    z = np.zeros(model.dimension) if guess is None else np.asarray(guess, dtype=float)
    branch: list[BranchPoint] = []
    previous: np.ndarray | None = None
    for lam in lambdas:
        bound = model.bind_lambda(float(lam), params=base)
        try:
            eq = find_equilibrium(model, bound, z, cfg)
        except (ConvergenceError, SingularSystemError) as e:
            raise ConvergenceError(
                "continue_equilibrium", f"Newton failed at {model.bifurcation_param}={lam:.10g}: {e}"
            ) from e
        spectrum = _spectrum(eq.jacobian, cfg)
        if previous is not None:
            spectrum = track_eigenvalues(previous, spectrum)
        branch.append(BranchPoint(float(lam), eq, spectrum))
        previous = spectrum
        z = eq.state
    return branch


# ============================================================================
# Hopf localization
# ============================================================================

def hopf_test_function(spectrum: Sequence[complex]) -> float:
    """prod_{i<j} (mu_i + mu_j); real for real matrices, zero at a Hopf point."""
    values = np.asarray(spectrum, dtype=complex)
    product = complex(1.0)
    for a, b in itertools.combinations(values, 2):
        product *= a + b
    return float(product.real)


def _crossing_pair(spectrum: Sequence[complex]) -> tuple[complex, complex]:
    values = list(np.asarray(spectrum, dtype=complex))
    return min(itertools.combinations(values, 2), key=lambda ab: abs(ab[0] + ab[1]))


def _complex_pair_real_part(spectrum: Sequence[complex]) -> float | None:
    """Real part of the complex pair closest to the imaginary axis, if any."""
    complex_values = [mu for mu in spectrum if mu.imag > REAL_EIGENVALUE_TOL]
    if not complex_values:
        return None
    return float(min(complex_values, key=lambda mu: abs(mu.real)).real)


class _BranchCache:
    """Equilibria along lambda, seeded from the nearest solved lambda."""

    def __init__(self, model: SystemModel, base: Mapping[str, float], settings: HopfSettings, guess: np.ndarray):
        self.model = model
        self.base = dict(base)
        self.settings = settings
        self.solved: dict[float, tuple[Equilibrium, np.ndarray]] = {}
        self.initial_guess = guess

    def at(self, lam: float) -> tuple[Equilibrium, np.ndarray]:
        if lam in self.solved:
            return self.solved[lam]
        if self.solved:
            nearest = min(self.solved, key=lambda k: abs(k - lam))
            guess = self.solved[nearest][0].state
        else:
            guess = self.initial_guess
        eq = find_equilibrium(self.model, self.model.bind_lambda(lam, params=self.base), guess, self.settings)
        entry = (eq, _spectrum(eq.jacobian, self.settings))
        self.solved[lam] = entry
        return entry


@log_execution(level=LogLevel.DEBUG)
def locate_hopf(
    model: SystemModel,
    lambda_bracket: tuple[float, float],
    tol: float | None = None,
    settings: HopfSettings | None = None,
    params: Mapping[str, float] | None = None,
    guess: Sequence[float] | None = None,
) -> HopfPoint:
    """
    Locate lambda_H in a bracket.

    The root is taken on the bialternate test function psi = prod_{i<j}
    (mu_i + mu_j) rather than on max Re mu of the complex pair. psi is real
    and smooth in lambda and vanishes exactly when some mu_i + mu_j = 0, which
    for a complex pair means Re mu = 0; its sign flips with Re mu when the
    pair crosses transversally. max Re mu is only piecewise smooth (the
    maximizing eigenvalue can switch). After the root is found the pair is
    checked to be complex with |Re mu| <= tol, which rules out the neutral
    saddle roots psi shares.

    Returns:
        HopfPoint with |Re mu(lambda_H)| <= tol, omega0 = Im mu > 0 and
        normalized q, p

    Raises:
        NoHopfError: no sign change of the Hopf test function, or the
            crossing eigenvalues are real (fold / neutral saddle)
    """
    lo, hi = validate_bracket(*lambda_bracket)
    cfg = settings or HopfSettings()
    hopf_tol = cfg.hopf_tol if tol is None else tol
    base = dict(params) if params is not None else dict(model.params)
    start = np.zeros(model.dimension) if guess is None else np.asarray(guess, dtype=float)
    cache = _BranchCache(model, base, cfg, start)

    (eq_lo, spec_lo), (eq_hi, spec_hi) = cache.at(lo), cache.at(hi)
    det_lo = float(np.prod(spec_lo).real)
    det_hi = float(np.prod(spec_hi).real)
    if det_lo * det_hi < 0.0:
        raise NoHopfError((lo, hi), "a real eigenvalue crosses zero in the bracket (fold, not Hopf)")

    psi_lo, psi_hi = hopf_test_function(spec_lo), hopf_test_function(spec_hi)
    logger.debug("Hopf bracket", lo=lo, hi=hi, psi_lo=psi_lo, psi_hi=psi_hi)
    if psi_lo == 0.0 or psi_hi == 0.0:
        lam = lo if psi_lo == 0.0 else hi
        iterations = 0
    elif psi_lo * psi_hi > 0.0:
        raise NoHopfError((lo, hi), "Hopf test function does not change sign")
    else:
        lam, iterations = _bracket_root(cache, lo, hi, hopf_tol, cfg)

    eq, spectrum = cache.at(lam)
    a, b = _crossing_pair(spectrum)
    if abs(a.imag) <= REAL_EIGENVALUE_TOL or abs(b.imag) <= REAL_EIGENVALUE_TOL:
        raise NoHopfError((lo, hi), f"crossing eigenvalues {a}, {b} are real (not a Hopf pair)")
    mu = a if a.imag > 0 else b
    if abs(mu.real) > hopf_tol:
        raise ConvergenceError(
            "locate_hopf", f"|Re mu| = {abs(mu.real):.3e} above hopf_tol {hopf_tol:.1e}", iterations
        )

    omega0 = float(mu.imag)
    q, p = hopf_eigenvectors(eq.jacobian, omega0, cfg.eigen_residual)
    transversality = _transversality(cache, lam, lo, hi)

    logger.info(
        "Hopf point located",
        model=model.name,
        lambda_H=lam,
        omega0=omega0,
        iterations=iterations,
        transversality=transversality,
    )
    return HopfPoint(
        lambda_H=lam,
        equilibrium=eq,
        omega0=omega0,
        q=q,
        p=p,
        eigenvalue=complex(mu),
        transversality=transversality,
        bracket=(lo, hi),
        iterations=iterations,
        eigenvalues=spectrum,
    )


def _pair_real_part(cache: _BranchCache, lam: float) -> float:
    _, spectrum = cache.at(lam)
    a, b = _crossing_pair(spectrum)
    return float((a + b).real / 2.0)


def _bracket_root(
    cache: _BranchCache, lo: float, hi: float, tol: float, cfg: HopfSettings
) -> tuple[float, int]:
    """Root of psi in [lo, hi]: Brent (bisection + secant) or plain bisection."""
    def psi(lam: float) -> float:
        return hopf_test_function(cache.at(lam)[1])

    if cfg.secant:
        xtol = 4.0 * np.finfo(float).eps * max(1.0, abs(lo), abs(hi))
        lam, info = brentq(psi, lo, hi, xtol=xtol, rtol=4.0 * np.finfo(float).eps,
                           maxiter=cfg.max_bisections, full_output=True, disp=False)
        if not info.converged:
            raise ConvergenceError("locate_hopf", info.flag, info.iterations)
        return float(lam), int(info.iterations)

    a, b = lo, hi
    fa = psi(a)
    for iteration in range(1, cfg.max_bisections + 1):
        mid = 0.5 * (a + b)
        fm = psi(mid)
        if fm == 0.0 or abs(_pair_real_part(cache, mid)) <= tol or mid in (a, b):
            return mid, iteration
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
    raise ConvergenceError("locate_hopf", "bisection cap reached", cfg.max_bisections)


def _transversality(cache: _BranchCache, lam: float, lo: float, hi: float) -> float | None:
    """d Re(mu)/d lambda by central differences inside the bracket."""
    delta = min(1e-6 * max(1.0, abs(lam)), 0.25 * (hi - lo))
    try:
        left = _complex_pair_real_part(cache.at(lam - delta)[1])
        right = _complex_pair_real_part(cache.at(lam + delta)[1])
    except (ConvergenceError, SingularSystemError):
        return None
    if left is None or right is None:
        return None
    return (right - left) / (2.0 * delta)


# ============================================================================
# Eigenvectors
# ============================================================================

def hopf_eigenvectors(J: np.ndarray, omega0: float, residual_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """
    Right/left eigenvectors at a Hopf point.

    q: J q = i omega0 q, unit norm (conj(q).q = 1), largest-modulus
       component real and positive.
    p: J^T p = -i omega0 p, scaled so that conj(p).q = 1.

    Raises:
        ValidationError: i omega0 is not an eigenvalue of J
        SingularSystemError: left and right eigenvectors are (nearly)
            orthogonal, i.e. the eigenvalue is defective
    """
    J = np.asarray(J, dtype=float)
    target = 1j * omega0
    right = min(eigen_small(J, residual_tol), key=lambda pair: abs(pair.value - target))
    left = min(eigen_small(J.T, residual_tol), key=lambda pair: abs(pair.value + target))

    scale = max(1.0, float(np.linalg.norm(J, 2)))
    if abs(right.value - target) > 1e-6 * scale:
        raise ValidationError(
            "hopf_eigenvectors", f"i*omega0 = {target} is not an eigenvalue (nearest {right.value})"
        )

    q = right.vector / np.linalg.norm(right.vector)
    k = int(np.argmax(np.abs(q)))
    q = q * (np.conj(q[k]) / abs(q[k]))
    q[k] = abs(q[k])

    overlap = np.vdot(left.vector, q)
    if abs(overlap) < 1e-10:
        raise SingularSystemError("hopf_eigenvectors", "defective eigenvalue: conj(p).q vanishes")
    p = left.vector / np.conj(overlap)
    return q, p


__all__ = [
    "Criticality", "Equilibrium", "BranchPoint", "HopfPoint",
    "find_equilibrium", "continue_equilibrium", "track_eigenvalues",
    "hopf_test_function", "locate_hopf", "hopf_eigenvectors",
]
