"""Tests for Laguerre polynomial and basis evaluation."""

import math

import numpy as np
import pytest
from scipy.integrate import quad_vec
from scipy.special import eval_genlaguerre
from scipy.special import eval_laguerre
from scipy.special import roots_genlaguerre
from scipy.special import roots_laguerre

from laguerre_vcm.basis import MAX_DEGREE
from laguerre_vcm.basis import BasisSpec
from laguerre_vcm.basis import generalized_laguerre_function
from laguerre_vcm.basis import laguerre_function
from laguerre_vcm.basis import laguerre_polynomial
from laguerre_vcm.basis import laguerre_table
from laguerre_vcm.basis import weighted_basis_matrix
from laguerre_vcm.basis import weighted_basis_vector
from laguerre_vcm.density import ExponentialDensity
from laguerre_vcm.density import UniformDensity
from laguerre_vcm.errors import DensityFloorError
from laguerre_vcm.errors import OverflowGuardError


class TestLaguerrePolynomial:
    """Tests for the three-term recurrence."""

    def test_degree_zero_is_one(self) -> None:
        """L_0 is identically one."""
        assert laguerre_polynomial(0, 7.3) == 1.0

    def test_degree_one_root(self) -> None:
        """L_1(t) = 1 - t vanishes at t = 1."""
        assert laguerre_polynomial(1, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_degree_two(self) -> None:
        """L_2(1) = 1 - 2 + 1/2."""
        assert laguerre_polynomial(2, 1.0) == pytest.approx(-0.5, rel=1e-14)

    def test_matches_closed_forms(self) -> None:
        """Degrees up to four match the explicit expansions."""
        t = np.linspace(0.0, 12.0, 49)
        closed = [
            np.ones_like(t),
            1 - t,
            1 - 2 * t + t**2 / 2,
            1 - 3 * t + 1.5 * t**2 - t**3 / 6,
            1 - 4 * t + 3 * t**2 - 2 * t**3 / 3 + t**4 / 24,
        ]
        for k, expected in enumerate(closed):
            np.testing.assert_allclose(laguerre_polynomial(k, t), expected, rtol=1e-12, atol=1e-12)

    def test_rejects_negative_t(self) -> None:
        """The recurrence is only defined for t >= 0."""
        with pytest.raises(ValueError):
            laguerre_polynomial(2, -0.5)


class TestLaguerreFunction:
    """Tests for phi_k(t) = exp(-t/2) L_k(t)."""

    @pytest.mark.parametrize("k", [0, 1, 7, 30])
    def test_one_at_origin(self, k: int) -> None:
        """phi_k(0) = 1 for every k."""
        assert laguerre_function(k, 0.0) == pytest.approx(1.0)

    def test_hand_value(self) -> None:
        """phi_1(2) = -exp(-1)."""
        assert laguerre_function(1, 2.0) == pytest.approx(-math.exp(-1.0), rel=1e-14)

    def test_bounded_at_large_t(self) -> None:
        """|phi_5(40)| <= 1 and agrees with scipy."""
        value = laguerre_function(5, 40.0)
        assert abs(value) <= 1.0
        assert value == pytest.approx(math.exp(-20.0) * eval_laguerre(5, 40.0), rel=1e-10)

    def test_uniform_bound(self) -> None:
        """|phi_k(t)| <= 1 on a dense grid for k <= 50."""
        t = np.linspace(0.0, 300.0, 6001)
        table = laguerre_table(t, 51)
        assert np.max(np.abs(table)) <= 1.0 + 1e-12

    def test_table_matches_scipy(self) -> None:
        """Table columns match exp(-t/2) L_k(t) from scipy."""
        t = np.array([0.05, 0.7, 3.0, 11.0, 25.0])
        table = laguerre_table(t, 21)
        for k in range(21):
            expected = np.exp(-t / 2) * eval_laguerre(k, t)
            np.testing.assert_allclose(table[:, k], expected, rtol=1e-9, atol=1e-13)

    def test_table_shape_follows_input(self) -> None:
        """Output shape is t.shape + (M,)."""
        assert laguerre_table(np.ones((2, 3)), 4).shape == (2, 3, 4)
        assert laguerre_table(1.5, 4).shape == (4,)

    def test_high_degree_at_large_t_stays_finite(self) -> None:
        """Rescaling keeps high degrees finite where the raw polynomial would overflow."""
        table = laguerre_table(np.array([400.0, 900.0, 2000.0]), 400)
        assert np.all(np.isfinite(table))
        assert np.max(np.abs(table)) <= 1.0 + 1e-9

    def test_orthonormality_by_quadrature(self) -> None:
        """Gauss-Laguerre quadrature gives |<phi_j, phi_k> - delta_jk| <= 1e-8 for j, k <= 20."""
        nodes, weights = roots_laguerre(128)
        # Undo the exp(-t/2) factor of phi_k; the quadrature weight carries exp(-t).
        polys = np.column_stack([laguerre_polynomial(k, nodes) for k in range(21)])
        gram = polys.T @ (weights[:, None] * polys)
        assert np.max(np.abs(gram - np.eye(21))) <= 1e-8

    def test_degree_cap(self) -> None:
        """Degrees above the log-Gamma cap are refused."""
        with pytest.raises(OverflowGuardError):
            laguerre_function(MAX_DEGREE + 1, 1.0)
        with pytest.raises(OverflowGuardError):
            laguerre_table(1.0, MAX_DEGREE + 2)


class TestGeneralizedLaguerreFunction:
    """Tests for the nu-parameterized basis."""

    @pytest.mark.parametrize("k", [0, 3, 12])
    def test_nu_zero_reduces_to_standard(self, k: int) -> None:
        """nu = 0 gives the standard Laguerre function."""
        t = np.array([0.3, 2.0, 9.0])
        np.testing.assert_allclose(generalized_laguerre_function(k, 0.0, t), laguerre_function(k, t), rtol=1e-13)

    def test_hand_value(self) -> None:
        """(k, nu, t) = (0, 2, 1) gives exp(-1/2) / sqrt(2)."""
        assert generalized_laguerre_function(0, 2.0, 1.0) == pytest.approx(math.exp(-0.5) / math.sqrt(2.0))

    def test_matches_scipy_generalized_polynomial(self) -> None:
        """Values match the normalized scipy generalized Laguerre polynomial."""
        nu, t = 1.5, np.array([0.4, 2.5, 8.0])
        for k in range(8):
            norm = math.exp(0.5 * (math.lgamma(k + 1) - math.lgamma(k + nu + 1)))
            expected = norm * eval_genlaguerre(k, nu, t) * t ** (nu / 2) * np.exp(-t / 2)
            np.testing.assert_allclose(generalized_laguerre_function(k, nu, t), expected, rtol=1e-10)

    @pytest.mark.parametrize("nu", [0.5, 1.0])
    def test_orthonormality_by_quadrature(self, nu: float) -> None:
        """Generalized Gauss-Laguerre quadrature confirms orthonormality for j, k <= 10."""
        nodes, weights = roots_genlaguerre(64, nu)
        table = laguerre_table(nodes, 11, nu)
        # Strip t^(nu/2) exp(-t/2); the quadrature weight is t^nu exp(-t).
        polys = table * np.exp(nodes / 2)[:, None] * nodes[:, None] ** (-nu / 2)
        gram = polys.T @ (weights[:, None] * polys)
        assert np.max(np.abs(gram - np.eye(11))) <= 1e-8

    def test_continuity_in_nu(self) -> None:
        """nu = 1e-8 is within 1e-6 of nu = 0."""
        t = np.linspace(0.1, 20.0, 50)
        for k in (0, 4, 15):
            np.testing.assert_allclose(
                generalized_laguerre_function(k, 1e-8, t), generalized_laguerre_function(k, 0.0, t), atol=1e-6
            )

    def test_rejects_negative_nu(self) -> None:
        """nu must be nonnegative."""
        with pytest.raises(ValueError):
            laguerre_table(1.0, 3, nu=-0.5)


class TestWeightedBasis:
    """Tests for phi~_k = phi_k / sqrt(h)."""

    def test_unit_density_gives_plain_functions(self) -> None:
        """With h = 1 on [0, 1] the weighted basis equals the Laguerre functions."""
        t = 0.6
        vector = weighted_basis_vector(t, 5, UniformDensity(0.0, 1.0))
        np.testing.assert_allclose(vector, [laguerre_function(k, t) for k in range(5)], rtol=1e-14)

    def test_exponential_hand_value(self) -> None:
        """Exponential(4) at t = 0.25: exp(-0.125) / (2 exp(-0.5))."""
        vector = weighted_basis_vector(0.25, 1, ExponentialDensity(rate=4.0))
        assert vector.shape == (1,)
        assert vector[0] == pytest.approx(math.exp(-0.125) / (2 * math.exp(-0.5)), rel=1e-12)
        assert vector[0] == pytest.approx(0.727803, abs=1e-6)

    def test_exponential_one_gives_polynomials(self) -> None:
        """Under Exp(1) the weighted basis is L_k(t) itself."""
        t = np.array([0.2, 1.0, 4.0])
        matrix = weighted_basis_matrix(t, 6, ExponentialDensity(rate=1.0))
        expected = np.column_stack([eval_laguerre(k, t) for k in range(6)])
        np.testing.assert_allclose(matrix, expected, rtol=1e-10, atol=1e-12)

    def test_zero_density_raises(self) -> None:
        """Outside the uniform support h = 0 and the floor check fires."""
        with pytest.raises(DensityFloorError) as excinfo:
            weighted_basis_vector(2.0, 3, UniformDensity(0.0, 1.0))
        assert excinfo.value.t == 2.0

    def test_floor_breach_in_tail(self) -> None:
        """An exponential tail below a user floor is rejected."""
        with pytest.raises(DensityFloorError):
            weighted_basis_matrix([0.1, 5.0], 2, ExponentialDensity(rate=4.0, floor=1e-3))

    @pytest.mark.parametrize("rate", [1.0, 4.0])
    def test_weighted_orthonormality(self, rate: float) -> None:
        """integral phi~_j phi~_k h dt = delta_jk for an exponential design."""
        density = ExponentialDensity(rate=rate, floor=1e-300)

        def integrand(t: float) -> np.ndarray:
            v = weighted_basis_vector(t, 6, density)
            return np.outer(v, v) * density.pdf(t)

        gram, _ = quad_vec(integrand, 0.0, 60.0, epsabs=1e-12, epsrel=1e-12)
        assert np.max(np.abs(gram - np.eye(6))) <= 1e-8


class TestBasisSpec:
    """Tests for BasisSpec."""

    def test_evaluate_shape(self) -> None:
        """evaluate returns one row per point."""
        spec = BasisSpec(max_degree=4, generalized_order=0.5)
        assert spec.evaluate(np.array([0.1, 0.2, 0.3]), ExponentialDensity(rate=4.0)).shape == (3, 4)

    def test_validation(self) -> None:
        """max_degree >= 1 and nu >= 0."""
        with pytest.raises(ValueError):
            BasisSpec(max_degree=0)
        with pytest.raises(ValueError):
            BasisSpec(max_degree=2, generalized_order=-1.0)
