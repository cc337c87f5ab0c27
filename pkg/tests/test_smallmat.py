"""
Tests for Jacobians, eigenpairs and shifted solves (lib/smallmat.py)
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add lib directory to path
lib_dir = Path(__file__).parent.parent / "lib"
sys.path.insert(0, str(lib_dir))

from fp_utils import SingularSystemError, ValidationError
from smallmat import (
    MAX_DIMENSION,
    JacobianScheme,
    SchemeKind,
    default_scheme,
    eigen_small,
    eigenvalues,
    fd_jacobian,
    jacobian,
    solve_complex_shifted,
)


class TestJacobian:
    """Analytic and central-difference Jacobians."""

    @pytest.mark.unit
    def test_default_scheme_prefers_analytic(self, vdp_model, config_dir):
        from model import read_model_file

        assert default_scheme(vdp_model).kind is SchemeKind.ANALYTIC
        fhn_plain = read_model_file(config_dir / "models" / "fhn.json").unwrap()
        assert default_scheme(fhn_plain).kind is SchemeKind.CENTRAL_FD

    @pytest.mark.unit
    @pytest.mark.parametrize("name", ["vdp", "fhn"])
    def test_fd_agrees_with_analytic(self, name, rng):
        from model import get_builtin

        model = get_builtin(name)
        for _ in range(10):
            state = rng.uniform(-1.0, 1.0, model.dimension)
            exact = jacobian(model, state, scheme=JacobianScheme.analytic())
            approx = jacobian(model, state, scheme=JacobianScheme.central_fd())
            np.testing.assert_allclose(approx, exact, atol=1e-7)

    @pytest.mark.unit
    def test_vdp_jacobian_at_origin(self, vdp_model):
        J = jacobian(vdp_model, [0.0, 0.0], vdp_model.bind(eps=0.05))
        np.testing.assert_array_equal(J, [[0.0, -1.0], [0.05, 0.0]])

    @pytest.mark.unit
    def test_fd_jacobian_of_plain_function(self):
        J = fd_jacobian(lambda z: np.array([z[0] * z[1], np.sin(z[0])]), [0.5, 2.0])
        np.testing.assert_allclose(J, [[2.0, 0.5], [np.cos(0.5), 0.0]], atol=1e-9)

    @pytest.mark.unit
    def test_state_length_checked(self, vdp_model):
        with pytest.raises(ValidationError):
            jacobian(vdp_model, [0.0, 0.0, 0.0])


class TestEigenSmall:
    """Eigenpairs with residual checks and a fixed ordering."""

    @pytest.mark.unit
    def test_rotation_block(self):
        """[[0, -1], [0.05, 0]] has eigenvalues +- i sqrt(0.05)."""
        values = eigenvalues(np.array([[0.0, -1.0], [0.05, 0.0]]))
        assert values[0] == pytest.approx(1j * 0.2236068, abs=1e-7)
        assert values[1] == pytest.approx(-1j * 0.2236068, abs=1e-7)

    @pytest.mark.unit
    def test_triangular_matrix(self):
        values = eigenvalues(np.array([[2.0, 1.0], [0.0, 3.0]]))
        np.testing.assert_allclose(values, [3.0, 2.0])

    @pytest.mark.unit
    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_residuals_and_ordering(self, n, rng):
        M = rng.normal(size=(n, n))
        pairs = eigen_small(M)
        scale = np.linalg.norm(M, 2)
        for pair in pairs:
            assert np.linalg.norm(pair.vector) == pytest.approx(1.0)
            assert np.linalg.norm(M @ pair.vector - pair.value * pair.vector) <= 1e-10 * scale
        keys = [(p.value.real, p.value.imag) for p in pairs]
        assert keys == sorted(keys, reverse=True)

    @pytest.mark.unit
    def test_conjugate_pairs_have_conjugate_vectors(self):
        M = np.array([[0.1, -2.0, 0.0], [2.0, 0.1, 0.0], [0.0, 0.0, -1.0]])
        pairs = eigen_small(M)
        upper = next(p for p in pairs if p.value.imag > 0)
        lower = next(p for p in pairs if p.value.imag < 0)
        assert lower.value == np.conj(upper.value)
        np.testing.assert_array_equal(lower.vector, np.conj(upper.vector))
        assert next(p for p in pairs if p.is_real).value == pytest.approx(-1.0)

    @pytest.mark.unit
    def test_rejects_non_square(self):
        with pytest.raises(ValidationError):
            eigen_small(np.zeros((2, 3)))

    @pytest.mark.unit
    def test_rejects_oversized(self):
        with pytest.raises(ValidationError):
            eigen_small(np.eye(MAX_DIMENSION + 1))

    @pytest.mark.unit
    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            eigen_small(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestSolveComplexShifted:
    """(shift I - M) x = rhs."""

    @pytest.mark.unit
    def test_residual_contract(self, rng):
        M = rng.normal(size=(4, 4))
        rhs = rng.normal(size=4) + 1j * rng.normal(size=4)
        x = solve_complex_shifted(M, 2j, rhs)
        residual = np.linalg.norm((2j * np.eye(4) - M) @ x - rhs)
        assert residual <= 1e-12 * np.linalg.norm(rhs)

    @pytest.mark.unit
    def test_zero_shift_is_negative_inverse(self):
        M = np.array([[2.0, 0.0], [0.0, 4.0]])
        np.testing.assert_allclose(solve_complex_shifted(M, 0.0, [2.0, 2.0]), [-1.0, -0.5])

    @pytest.mark.unit
    def test_shift_on_eigenvalue_is_singular(self):
        M = np.diag([1.0, 2.0])
        with pytest.raises(SingularSystemError):
            solve_complex_shifted(M, 1.0, [1.0, 1.0])
