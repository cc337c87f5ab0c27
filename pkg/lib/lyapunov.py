"""
First Lyapunov Coefficient

l1 in the conventions in common use:
    ku   eigenvector formula, any dimension
    mc   omega0 * ku (MatCont scaling)
    g    planar g20/g11/g21 form of ku (n = 2)
    clw  untransformed planar formula (n = 2)
    gh   planar formula after Jordanizing the linear part (n = 2)
    pe   alternative planar formula on the Jordanized system (n = 2)

Every partial derivative comes from multilinear B/C evaluations on basis
vectors; there are no separate FD stencils here.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from fp_utils import (
    DegenerateHopfError,
    ResonanceError,
    SingularSystemError,
    ValidationError,
)
from hopf import Criticality, HopfPoint
from logger import LogLevel, get_logger, log_execution
from model import SystemModel
from multilinear import ExpansionPoint, MultilinearForms
from settings import LyapunovSettings, MultilinearSettings, ToolkitSettings
from smallmat import eigen_small, solve_complex_shifted

logger = get_logger(__name__)

VectorFunction = Callable[[np.ndarray], np.ndarray]


# ============================================================================
# Planar containers
# ============================================================================

@dataclass(frozen=True, eq=False)
class PlanarSystemAtHopf:
    """z' = M z + (f, g)(z) about the equilibrium; `remainder` is (f, g)."""
    M: np.ndarray
    remainder: VectorFunction
    omega0: float
    swapped: bool = False
    multilinear: MultilinearSettings = field(default_factory=MultilinearSettings)

    @property
    def m11(self) -> float:
        return float(self.M[0, 0])

    @property
    def m12(self) -> float:
        return float(self.M[0, 1])

    @property
    def m21(self) -> float:
        return float(self.M[1, 0])

    @property
    def m22(self) -> float:
        return float(self.M[1, 1])

    def forms(self) -> MultilinearForms:
        return MultilinearForms(ExpansionPoint.from_function(self.remainder, np.zeros(2)), self.multilinear)


@dataclass(frozen=True, eq=False)
class JordanizedPlanar:
    """(u, v)' = [[0, -w], [w, 0]] (u, v) + (f*, g*)(u, v) with (x, y) = N (u, v)."""
    N: np.ndarray
    remainder: VectorFunction
    omega0: float
    rotation_residual: float
    multilinear: MultilinearSettings = field(default_factory=MultilinearSettings)

    def forms(self) -> MultilinearForms:
        return MultilinearForms(ExpansionPoint.from_function(self.remainder, np.zeros(2)), self.multilinear)


@dataclass(frozen=True)
class PlanarPartials:
    """Second and third partials of a planar remainder (f, g) at the origin."""
    fxx: float
    fxy: float
    fyy: float
    fxxx: float
    fxxy: float
    fxyy: float
    fyyy: float
    gxx: float
    gxy: float
    gyy: float
    gxxx: float
    gxxy: float
    gxyy: float
    gyyy: float

    @classmethod
    def from_forms(cls, forms: MultilinearForms) -> 'PlanarPartials':
        if forms.dimension != 2:
            raise ValidationError("planar_partials", f"expected a planar system, got n={forms.dimension}")
        xx, xy, yy = forms.second_partial(0, 0), forms.second_partial(0, 1), forms.second_partial(1, 1)
        xxx, xxy = forms.third_partial(0, 0, 0), forms.third_partial(0, 0, 1)
        xyy, yyy = forms.third_partial(0, 1, 1), forms.third_partial(1, 1, 1)
        return cls(
            fxx=xx[0], fxy=xy[0], fyy=yy[0], fxxx=xxx[0], fxxy=xxy[0], fxyy=xyy[0], fyyy=yyy[0],
            gxx=xx[1], gxy=xy[1], gyy=yy[1], gxxx=xxx[1], gxxy=xxy[1], gxyy=xyy[1], gyyy=yyy[1],
        )


@dataclass(frozen=True)
class LyapunovReport:
    omega0: float
    l1_ku: float
    l1_mc: float
    criticality: Criticality
    l1_planar_g: float | None = None
    l1_clw: float | None = None
    l1_gh: float | None = None
    l1_pe: float | None = None
    g20: complex | None = None
    g11: complex | None = None
    g21: complex | None = None
    jordan_scale: float | None = None
    clw_swapped: bool | None = None
    rotation_residual: float | None = None
    k_estimates: Mapping[str, float] = field(default_factory=dict)

    @property
    def is_planar(self) -> bool:
        return self.l1_gh is not None

    def conventions(self) -> dict[str, float]:
        """Applicable l1 values keyed by convention name."""
        values = {
            "ku": self.l1_ku, "mc": self.l1_mc, "g": self.l1_planar_g,
            "clw": self.l1_clw, "gh": self.l1_gh, "pe": self.l1_pe,
        }
        return {k: v for k, v in values.items() if v is not None}

    def with_k_estimates(self, estimates: Mapping[str, float]) -> 'LyapunovReport':
        return dataclasses.replace(self, k_estimates=dict(estimates))

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "omega0": self.omega0,
            "l1_ku": self.l1_ku,
            "l1_mc": self.l1_mc,
            "criticality": self.criticality.value,
            "k_estimates": dict(self.k_estimates),
        }
        for key in ("l1_planar_g", "l1_clw", "l1_gh", "l1_pe", "g20", "g11", "g21",
                    "jordan_scale", "clw_swapped", "rotation_residual"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        ratios = convention_ratios(self)
        if ratios:
            data["convention_ratios"] = ratios
        return data


# ============================================================================
# Dimension-general coefficient
# ============================================================================

def _check_resonance(J: np.ndarray, omega0: float, guard: float) -> None:
    target = 2j * omega0
    spectrum = [pair.value for pair in eigen_small(J)]
    nearest = min(spectrum, key=lambda mu: abs(target - mu))
    distance = abs(target - nearest)
    if distance < guard:
        raise ResonanceError(omega0, nearest, distance)


def l1_kuznetsov(
    hopf: HopfPoint,
    forms: MultilinearForms,
    settings: LyapunovSettings | None = None,
) -> float:
    """
    (1 / 2 w0) Re[ p.C(q,q,qb) - 2 p.B(q, J^-1 B(q,qb)) + p.B(qb, (2i w0 - J)^-1 B(q,q)) ]

    Raises:
        ResonanceError: 2i*omega0 lies within the resonance guard of spec(J)
    """
    cfg = settings or LyapunovSettings()
    J, omega0 = hopf.jacobian, hopf.omega0
    q, p = hopf.q, hopf.p
    qb = np.conj(q)
    _check_resonance(J, omega0, cfg.resonance_guard)

    # shift 0 gives -J^-1 b, so the minus sign of the middle term flips
    try:
        neg_inv_b11 = solve_complex_shifted(J, 0.0, forms.B(q, qb))
        resolvent_b20 = solve_complex_shifted(J, 2j * omega0, forms.B(q, q))
    except SingularSystemError as e:
        raise SingularSystemError("l1_kuznetsov", e.reason) from e

    cubic = np.vdot(p, forms.C(q, q, qb))
    mixed = 2.0 * np.vdot(p, forms.B(q, neg_inv_b11))
    second = np.vdot(p, forms.B(qb, resolvent_b20))
    return float((cubic + mixed + second).real / (2.0 * omega0))


def l1_matcont(hopf: HopfPoint, forms: MultilinearForms, settings: LyapunovSettings | None = None) -> float:
    return hopf.omega0 * l1_kuznetsov(hopf, forms, settings)


def g_coefficients(hopf: HopfPoint, forms: MultilinearForms) -> tuple[complex, complex, complex]:
    """(g20, g11, g21) = (p.B(q,q), p.B(q,qb), p.C(q,q,qb)) for a planar system."""
    if hopf.dimension != 2:
        raise ValidationError("g_coefficients", f"planar system required, got n={hopf.dimension}")
    q, p = hopf.q, hopf.p
    qb = np.conj(q)
    g20 = complex(np.vdot(p, forms.B(q, q)))
    g11 = complex(np.vdot(p, forms.B(q, qb)))
    g21 = complex(np.vdot(p, forms.C(q, q, qb)))
    return g20, g11, g21


def l1_planar_g(g20: complex, g11: complex, g21: complex, omega0: float) -> float:
    return float((1j * g20 * g11 + omega0 * g21).real / (2.0 * omega0 ** 2))


# ============================================================================
# Planar conventions
# ============================================================================

def planar_system(
    hopf: HopfPoint,
    model: SystemModel,
    params: Mapping[str, float] | None = None,
    settings: ToolkitSettings | None = None,
) -> PlanarSystemAtHopf:
    """Split the planar RHS at the Hopf equilibrium into M z + (f, g)(z)."""
    if model.dimension != 2:
        raise ValidationError("planar_system", f"planar model required, got n={model.dimension}")
    cfg = settings or ToolkitSettings()
    bound = hopf.equilibrium.params if params is None else params
    z_star = hopf.equilibrium.state
    M = np.array(hopf.jacobian, dtype=float)

    trace, det = float(np.trace(M)), float(np.linalg.det(M))
    scale = max(1.0, float(np.linalg.norm(M)))
    tol = cfg.lyapunov.rotation_tol * scale
    if abs(trace) > tol or abs(det - hopf.omega0 ** 2) > tol * max(1.0, hopf.omega0 ** 2):
        raise ValidationError(
            "planar_system", f"trace {trace:.3e} / det {det:.6g} inconsistent with omega0={hopf.omega0:.6g}"
        )

    def remainder(w: np.ndarray) -> np.ndarray:
        return model.evaluate(z_star + w, bound) - M @ w

    return PlanarSystemAtHopf(M=M, remainder=remainder, omega0=hopf.omega0, multilinear=cfg.multilinear)


def clw_orientation(planar: PlanarSystemAtHopf) -> PlanarSystemAtHopf:
    """Order the coordinates so that m12 > 0 (swap x and y otherwise)."""
    if planar.m12 > 0.0:
        return planar
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    original = planar.remainder

    def remainder(w: np.ndarray) -> np.ndarray:
        return swap @ original(swap @ w)

    return dataclasses.replace(planar, M=swap @ planar.M @ swap, remainder=remainder, swapped=not planar.swapped)


def l1_clw(planar: PlanarSystemAtHopf) -> float:
    """Untransformed planar formula evaluated with the partials of (f, g) at 0."""
    d = PlanarPartials.from_forms(planar.forms())
    w2 = planar.omega0 ** 2
    m12, m21, m22 = planar.m12, planar.m21, planar.m22

    cubic = w2 * ((d.fxxx + d.gxxy) + 2.0 * m22 * (d.fxxy + d.gxyy) - m21 * (d.fxyy + d.gyyy))
    quad_12 = -m12 * m22 * (d.fxx ** 2 - d.fxx * d.gxy - d.fxy * d.gxx - d.gxx * d.gyy - 2.0 * d.gxy)
    quad_21 = -m21 * m22 * (d.gyy ** 2 - d.gyy * d.fxy - d.gxy * d.fyy - d.fxx * d.fyy - 2.0 * d.fxy ** 2)
    cross = m12 ** 2 * (d.fxx * d.gxx + d.gxx * d.gxy) - m21 ** 2 * (d.fyy * d.gyy + d.fxy * d.fyy)
    tail = -(w2 + 3.0 * m22 ** 2) * (d.fxx * d.fxy - d.gxy * d.gyy)
    return float(m12 / (16.0 * w2 ** 2) * (cubic + quad_12 + quad_21 + cross + tail))


def jordan_gauge(q: np.ndarray) -> tuple[np.ndarray, float]:
    """
    Rescale q so its dominant component has modulus 1/2.

    Returns (q / scale, scale) with scale = 2 |q_k|. With this gauge the
    transform N maps the dominant coordinate with unit scale.
    """
    q = np.asarray(q, dtype=complex)
    k = int(np.argmax(np.abs(q)))
    scale = 2.0 * float(abs(q[k]))
    if scale == 0.0:
        raise SingularSystemError("jordan_gauge", "zero eigenvector")
    return q / scale, scale


def jordan_transform_planar(
    M: np.ndarray,
    q: np.ndarray,
    omega0: float | None = None,
    remainder: VectorFunction | None = None,
    settings: ToolkitSettings | None = None,
) -> JordanizedPlanar:
    """
    N = [[2 Re q1, -2 Im q1], [2 Re q2, -2 Im q2]] and f* = N^-1 (f, g)(N u).

    Raises:
        SingularSystemError: N is singular (degenerate q)
        ValidationError: N^-1 M N is not the rotation block
    """
    cfg = settings or ToolkitSettings()
    M = np.asarray(M, dtype=float)
    q = np.asarray(q, dtype=complex)
    if M.shape != (2, 2) or q.size != 2:
        raise ValidationError("jordan_transform_planar", "planar M and q required")
    w = math.sqrt(max(float(np.linalg.det(M)), 0.0)) if omega0 is None else omega0

    N = np.array([[2.0 * q[0].real, -2.0 * q[0].imag], [2.0 * q[1].real, -2.0 * q[1].imag]])
    det_n = float(np.linalg.det(N))
    if abs(det_n) <= 1e-12 * max(1.0, float(np.linalg.norm(N)) ** 2):
        raise SingularSystemError("jordan_transform_planar", "transform N is singular (Im q vanishes)")
    N_inv = np.linalg.inv(N)

    rotation = np.array([[0.0, -w], [w, 0.0]])
    residual = float(np.max(np.abs(N_inv @ M @ N - rotation)))
    tol = cfg.lyapunov.rotation_tol * max(1.0, float(np.linalg.norm(M)))
    if residual > tol:
        raise ValidationError(
            "jordan_transform_planar", f"N^-1 M N differs from the rotation block by {residual:.3e}"
        )

    base = remainder if remainder is not None else (lambda z: np.zeros(2))

    def transformed(u: np.ndarray) -> np.ndarray:
        return N_inv @ base(N @ u)

    return JordanizedPlanar(N=N, remainder=transformed, omega0=w, rotation_residual=residual,
                            multilinear=cfg.multilinear)


def l1_gh(jordanized: JordanizedPlanar) -> float:
    d = PlanarPartials.from_forms(jordanized.forms())
    w = jordanized.omega0
    cubic = d.fxxx + d.fxyy + d.gxxy + d.gyyy
    quad = d.fxy * (d.fxx + d.fyy) - d.gxy * (d.gxx + d.gyy) - d.fxx * d.gxx + d.fyy * d.gyy
    return float(cubic / 16.0 + quad / (16.0 * w))


def l1_pe(jordanized: JordanizedPlanar) -> float:
    d = PlanarPartials.from_forms(jordanized.forms())
    w = jordanized.omega0
    quad = (d.fxy * d.fyy + d.fyy * d.gyy - d.fxx * d.gxx
            - d.gxy * d.gxx - d.gxy * d.gyy + d.fxy * d.fxx)
    cubic = d.gyyy + d.fxxx + d.fxyy + d.gxxy
    return float(3.0 * math.pi / (4.0 * w ** 2) * (quad + w * cubic))


def classify_criticality(l1: float, threshold: float = 1e-8) -> Criticality:
    """Negative l1 is supercritical, positive subcritical; |l1| <= threshold is degenerate."""
    if not math.isfinite(l1) or abs(l1) <= threshold:
        raise DegenerateHopfError(l1, threshold)
    return Criticality.SUPER if l1 < 0.0 else Criticality.SUB


def convention_ratios(report: LyapunovReport) -> dict[str, float]:
    """Measured ratios of each convention to l1_gh (planar reports only)."""
    if report.l1_gh is None or report.l1_gh == 0.0:
        return {}
    ratios = {"ku/gh": report.l1_ku / report.l1_gh, "mc/gh": report.l1_mc / report.l1_gh}
    if report.l1_clw is not None:
        ratios["clw/gh"] = report.l1_clw / report.l1_gh
    if report.l1_pe is not None:
        ratios["pe/gh"] = report.l1_pe / report.l1_gh
    return ratios


def _check_sign_concordance(values: Mapping[str, float], threshold: float) -> None:
    signs = {name: math.copysign(1.0, v) for name, v in values.items() if abs(v) > threshold}
    if len(set(signs.values())) > 1:
        logger.warning("Lyapunov conventions disagree in sign", **{f"l1_{k}": values[k] for k in signs})


@log_execution(level=LogLevel.DEBUG)
def analyze_lyapunov(
    hopf: HopfPoint,
    model: SystemModel,
    settings: ToolkitSettings | None = None,
) -> LyapunovReport:
    """
    Every applicable convention in one pass.

    Raises:
        ResonanceError, SingularSystemError, DegenerateHopfError
    """
    cfg = settings or ToolkitSettings()
    params = hopf.equilibrium.params
    point = ExpansionPoint.at_equilibrium(model, hopf.equilibrium.state, params, cfg.multilinear.equilibrium_tol)
    forms = MultilinearForms(point, cfg.multilinear)

    ku = l1_kuznetsov(hopf, forms, cfg.lyapunov)
    mc = hopf.omega0 * ku
    criticality = classify_criticality(ku, cfg.lyapunov.degeneracy_threshold)
    report = LyapunovReport(omega0=hopf.omega0, l1_ku=ku, l1_mc=mc, criticality=criticality)

    if model.dimension == 2:
        g20, g11, g21 = g_coefficients(hopf, forms)
        planar = planar_system(hopf, model, params, cfg)
        oriented = clw_orientation(planar)
        q_gauge, scale = jordan_gauge(hopf.q)
        jordanized = jordan_transform_planar(planar.M, q_gauge, hopf.omega0, planar.remainder, cfg)
        gh = l1_gh(jordanized)
        pe = l1_pe(jordanized)
        report = dataclasses.replace(
            report,
            l1_planar_g=l1_planar_g(g20, g11, g21, hopf.omega0),
            l1_clw=l1_clw(oriented),
            l1_gh=gh,
            l1_pe=pe,
            g20=g20, g11=g11, g21=g21,
            jordan_scale=scale,
            clw_swapped=oriented.swapped,
            rotation_residual=jordanized.rotation_residual,
        )
        if gh != 0.0:
            logger.info(
                "Pe/GH ratio measured",
                ratio=pe / gh,
                implied_ratio=3.0 * math.pi / (64.0 * hopf.omega0),
            )

    _check_sign_concordance(report.conventions(), cfg.lyapunov.degeneracy_threshold)
    logger.info("Lyapunov coefficients", model=model.name, criticality=criticality.value,
                **{f"l1_{k}": v for k, v in report.conventions().items()})
    return report
