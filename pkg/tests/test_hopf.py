"""
Tests for equilibria, continuation and Hopf localization (lib/hopf.py)
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add lib directory to path
lib_dir = Path(__file__).parent.parent / "lib"
sys.path.insert(0, str(lib_dir))

from fp_utils import ConvergenceError, NoHopfError, SingularSystemError, ValidationError
from hopf import (
    continue_equilibrium,
    find_equilibrium,
    hopf_eigenvectors,
    hopf_test_function,
    locate_hopf,
    track_eigenvalues,
)
from model import model_from_mapping
from settings import HopfSettings
from smallmat import eigenvalues


class TestFindEquilibrium:
    """Damped Newton on F(z) = 0."""

    @pytest.mark.unit
    def test_vdp_equilibrium_sits_on_critical_manifold(self, vdp_model):
        """x* = lambda, y* = lambda^2 + lambda^3/3."""
        lam = 0.1
        eq = find_equilibrium(vdp_model, vdp_model.bind_lambda(lam), [0.5, 0.5])
        np.testing.assert_allclose(eq.state, [lam, lam ** 2 + lam ** 3 / 3], atol=1e-10)
        assert eq.residual <= 1e-12

    @pytest.mark.unit
    def test_converged_guess_takes_no_iterations(self, vdp_model):
        eq = find_equilibrium(vdp_model, vdp_model.bind(), [0.0, 0.0])
        assert eq.iterations == 0

    @pytest.mark.unit
    def test_iteration_cap(self, vdp_model):
        settings = HopfSettings(newton_max_iter=1)
        with pytest.raises(ConvergenceError):
            find_equilibrium(vdp_model, vdp_model.bind_lambda(0.3), [-1.5, 2.0], settings)

    @pytest.mark.unit
    def test_singular_jacobian(self):
        model = model_from_mapping({
            "name": "degenerate",
            "states": ["x", "y"],
            "params": {"lambda": 0.0, "eps": 1.0},
            "epsilon_param": "eps",
            "bifurcation_param": "lambda",
            "equations": ["x + y - 1", "2*x + 2*y - 2 + lambda"],
        })
        with pytest.raises(SingularSystemError):
            find_equilibrium(model, model.bind_lambda(0.5), [0.0, 0.0])

    @pytest.mark.unit
    def test_guess_validated(self, vdp_model):
        with pytest.raises(ValidationError):
            find_equilibrium(vdp_model, vdp_model.bind(), [math.nan, 0.0])


class TestContinuation:
    """Natural-parameter continuation with eigenvalue tracking."""

    @pytest.mark.unit
    def test_branch_follows_lambda(self, vdp_model):
        branch = continue_equilibrium(vdp_model, (-0.1, 0.1), steps=8, params=vdp_model.bind(eps=0.05))
        assert len(branch) == 9
        for point in branch:
            assert point.equilibrium.state[0] == pytest.approx(point.lam, abs=1e-10)

    @pytest.mark.unit
    def test_degenerate_range_gives_one_point(self, vdp_model):
        assert len(continue_equilibrium(vdp_model, (0.0, 0.0), steps=10)) == 1

    @pytest.mark.unit
    def test_tracking_keeps_continuity(self):
        previous = [1.0 + 1.0j, 1.0 - 1.0j, -2.0]
        current = [-2.1, 1.1 - 0.9j, 1.1 + 0.9j]
        tracked = track_eigenvalues(previous, current)
        np.testing.assert_array_equal(tracked, [1.1 + 0.9j, 1.1 - 0.9j, -2.1])


class TestHopfTestFunction:
    """psi = prod_{i<j} (mu_i + mu_j)."""

    @pytest.mark.unit
    def test_planar_value_is_trace(self):
        assert hopf_test_function([0.3 + 1j, 0.3 - 1j]) == pytest.approx(0.6)

    @pytest.mark.unit
    def test_vanishes_on_imaginary_pair(self):
        assert hopf_test_function([2j, -2j, -1.0]) == pytest.approx(0.0, abs=1e-15)


class TestLocateHopf:
    """Hopf localization in a lambda bracket."""

    @pytest.mark.unit
    def test_vdp_hopf_point(self, vdp_model):
        """lambda_H = 0 and omega0 = sqrt(eps) at eps = 0.05."""
        hopf = locate_hopf(vdp_model, (-0.2, 0.2), params=vdp_model.bind(eps=0.05))
        assert abs(hopf.lambda_H) <= 1e-8
        assert hopf.omega0 == pytest.approx(0.223607, abs=1e-4)
        assert hopf.omega0 == pytest.approx(math.sqrt(0.05), rel=1e-10)
        assert abs(hopf.eigenvalue.real) <= 1e-10

    @pytest.mark.unit
    def test_vdp_transversality(self, vdp_model):
        """d Re(mu)/d lambda = 1 + lambda at the vdP Hopf point."""
        hopf = locate_hopf(vdp_model, (-0.2, 0.2), params=vdp_model.bind(eps=0.05))
        assert hopf.transversality == pytest.approx(1.0, rel=1e-4)

    @pytest.mark.unit
    def test_plain_bisection(self, vdp_model):
        settings = HopfSettings(secant=False)
        hopf = locate_hopf(vdp_model, (-0.2, 0.3), settings=settings, params=vdp_model.bind(eps=0.05))
        assert abs(hopf.lambda_H) <= 1e-8
        assert hopf.iterations > 0

    @pytest.mark.unit
    def test_eigenvector_normalization(self, vdp_model):
        hopf = locate_hopf(vdp_model, (-0.2, 0.2), params=vdp_model.bind(eps=0.05))
        J = hopf.jacobian
        np.testing.assert_allclose(J @ hopf.q, 1j * hopf.omega0 * hopf.q, atol=1e-10)
        np.testing.assert_allclose(J.T @ hopf.p, -1j * hopf.omega0 * hopf.p, atol=1e-10)
        assert np.vdot(hopf.q, hopf.q) == pytest.approx(1.0)
        assert np.vdot(hopf.p, hopf.q) == pytest.approx(1.0)

    @pytest.mark.unit
    def test_no_sign_change(self, vdp_model):
        with pytest.raises(NoHopfError, match="does not change sign"):
            locate_hopf(vdp_model, (0.05, 0.2), params=vdp_model.bind(eps=0.05))

    @pytest.mark.unit
    def test_fold_is_not_hopf(self):
        """A real eigenvalue through zero is rejected."""
        model = model_from_mapping({
            "name": "fold",
            "states": ["x", "y"],
            "params": {"lambda": 0.0, "eps": 1.0},
            "epsilon_param": "eps",
            "bifurcation_param": "lambda",
            "equations": ["lambda*x", "-y"],
        })
        with pytest.raises(NoHopfError):
            locate_hopf(model, (-0.5, 0.7))

    @pytest.mark.unit
    def test_bracket_validated(self, vdp_model):
        with pytest.raises(ValueError):
            locate_hopf(vdp_model, (0.2, -0.2))

    @pytest.mark.unit
    def test_three_dimensional_model(self, fhn_model):
        hopf = locate_hopf(fhn_model, (0.04, 0.07), params=fhn_model.bind(eps=0.001))
        assert 0.04 < hopf.lambda_H < 0.07
        assert hopf.omega0 > 0.0
        assert hopf.dimension == 3

    @pytest.mark.unit
    def test_pair_real_part_changes_sign(self, fhn_model):
        """The test-function root is where the complex pair crosses the imaginary axis."""
        params = fhn_model.bind(eps=0.001)
        hopf = locate_hopf(fhn_model, (0.04, 0.07), params=params)
        crossing = []
        for lam in (hopf.lambda_H - 1e-4, hopf.lambda_H + 1e-4):
            eq = find_equilibrium(fhn_model, fhn_model.bind_lambda(lam, params=params), hopf.equilibrium.state)
            pair = [mu for mu in eigenvalues(eq.jacobian) if mu.imag > 1e-8]
            assert len(pair) == 1
            crossing.append(pair[0].real)
        assert crossing[0] * crossing[1] < 0.0
        assert abs(hopf.eigenvalue.real) <= HopfSettings().hopf_tol


class TestHopfEigenvectors:
    """Right/left eigenvectors at i omega0."""

    @pytest.mark.unit
    def test_rejects_wrong_frequency(self):
        J = np.array([[0.0, -1.0], [1.0, 0.0]])
        with pytest.raises(ValidationError):
            hopf_eigenvectors(J, 2.0)

    @pytest.mark.unit
    def test_dominant_component_real_positive(self):
        J = np.array([[0.0, -2.0], [0.5, 0.0]])
        q, p = hopf_eigenvectors(J, 1.0)
        k = int(np.argmax(np.abs(q)))
        assert q[k].imag == 0.0 and q[k].real > 0.0
        assert np.vdot(p, q) == pytest.approx(1.0)
