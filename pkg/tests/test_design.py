"""Tests for the dataset, truncation plan, design matrix and least-squares solve."""

import numpy as np
import pytest

from laguerre_vcm.basis import weighted_basis_matrix
from laguerre_vcm.density import ExponentialDensity
from laguerre_vcm.design import CoefficientVector
from laguerre_vcm.design import Dataset
from laguerre_vcm.design import TruncationPlan
from laguerre_vcm.design import assemble_design
from laguerre_vcm.design import gram_matrix
from laguerre_vcm.design import hat_diagonal
from laguerre_vcm.design import least_squares_with_leverage
from laguerre_vcm.design import solve_least_squares
from laguerre_vcm.design import theta_index
from laguerre_vcm.errors import DensityFloorError
from laguerre_vcm.errors import DimensionError
from laguerre_vcm.errors import IndexRangeError
from laguerre_vcm.errors import RankDeficiencyError


def _dataset(rng: np.random.Generator, n: int, r: int) -> Dataset:
    return Dataset(
        t=rng.exponential(0.25, size=n) + 1e-4,
        x=rng.normal(1.0, 0.5, size=(n, r)),
        y=rng.normal(size=n),
    )


class TestDataset:
    """Tests for Dataset validation."""

    def test_one_dimensional_x_becomes_column(self) -> None:
        """A single covariate vector is stored as (n, 1)."""
        data = Dataset(t=[0.1, 0.2], x=[1.0, 2.0], y=[0.0, 1.0])
        assert data.x.shape == (2, 1)
        assert data.r == 1
        assert data.n == 2

    def test_rejects_nonpositive_t(self) -> None:
        """t must be strictly positive."""
        with pytest.raises(ValueError):
            Dataset(t=[0.1, 0.0], x=[1.0, 1.0], y=[0.0, 0.0])

    def test_rejects_mismatched_sizes(self) -> None:
        """All arrays share the observation count."""
        with pytest.raises(DimensionError):
            Dataset(t=[0.1, 0.2, 0.3], x=[1.0, 1.0], y=[0.0, 0.0, 0.0])

    def test_rejects_nonfinite_response(self) -> None:
        """NaN responses are refused."""
        with pytest.raises(ValueError):
            Dataset(t=[0.1, 0.2], x=[1.0, 1.0], y=[0.0, np.nan])

    def test_arrays_are_read_only(self) -> None:
        """Stored arrays cannot be mutated in place."""
        data = Dataset(t=[0.1, 0.2], x=[1.0, 1.0], y=[0.0, 1.0])
        with pytest.raises(ValueError):
            data.y[0] = 5.0

    def test_subset_allows_repeats(self, rng: np.random.Generator) -> None:
        """Resampling indices may repeat."""
        data = _dataset(rng, 5, 2)
        sub = data.subset([0, 0, 3])
        assert sub.n == 3
        np.testing.assert_array_equal(sub.x[1], data.x[0])


class TestTruncationPlan:
    """Tests for TruncationPlan and theta_index."""

    def test_theta_index_examples(self) -> None:
        """Block offsets follow the cumulative truncation levels."""
        plan = TruncationPlan(levels=(3, 4))
        assert theta_index(2, 0, plan) == 3
        assert theta_index(2, 3, plan) == 6
        assert theta_index(1, 2, plan) == 2

    def test_theta_index_out_of_range(self) -> None:
        """Degrees past M_l and coefficients past r are rejected."""
        plan = TruncationPlan(levels=(3, 4))
        with pytest.raises(IndexRangeError):
            theta_index(1, 3, plan)
        with pytest.raises(IndexRangeError):
            theta_index(3, 0, plan)
        with pytest.raises(IndexRangeError):
            plan.block(0)

    def test_blocks_partition_the_vector(self) -> None:
        """Blocks are contiguous and cover 0..total."""
        plan = TruncationPlan(levels=(2, 5, 1))
        assert [plan.block(l) for l in (1, 2, 3)] == [slice(0, 2), slice(2, 7), slice(7, 8)]
        assert plan.total == 8
        assert str(plan) == "2/5/1"

    def test_uniform(self) -> None:
        """uniform repeats one level r times."""
        assert TruncationPlan.uniform(4, 3).levels == (4, 4, 4)

    def test_rejects_zero_level(self) -> None:
        """Every M_l is at least one."""
        with pytest.raises(ValueError):
            TruncationPlan(levels=(2, 0))

    def test_coefficient_vector_blocks(self) -> None:
        """CoefficientVector.block slices by plan."""
        vec = CoefficientVector(theta=np.arange(7.0), plan=TruncationPlan(levels=(3, 4)))
        np.testing.assert_array_equal(vec.block(2), [3.0, 4.0, 5.0, 6.0])
        with pytest.raises(DimensionError):
            CoefficientVector(theta=np.arange(6.0), plan=TruncationPlan(levels=(3, 4)))


class TestAssembleDesign:
    """Tests for the block design matrix."""

    def test_entries(self, rng: np.random.Generator, exp4: ExponentialDensity) -> None:
        """Entry (i, theta_index(l, k)) is phi~_k(t_i) x_li."""
        data = _dataset(rng, 20, 2)
        plan = TruncationPlan(levels=(3, 2))
        phi = assemble_design(data, plan, exp4)
        basis = weighted_basis_matrix(data.t, 3, exp4)
        assert phi.shape == (20, 5)
        for l, m in enumerate(plan.levels, start=1):
            for k in range(m):
                np.testing.assert_allclose(phi[:, theta_index(l, k, plan)], basis[:, k] * data.x[:, l - 1])

    def test_underdetermined(self, rng: np.random.Generator, exp4: ExponentialDensity) -> None:
        """n = 10 with plan (8, 8) cannot be fitted."""
        with pytest.raises(DimensionError):
            assemble_design(_dataset(rng, 10, 2), TruncationPlan(levels=(8, 8)), exp4)

    def test_plan_must_match_covariates(self, rng: np.random.Generator, exp4: ExponentialDensity) -> None:
        """One level per covariate."""
        with pytest.raises(DimensionError):
            assemble_design(_dataset(rng, 30, 2), TruncationPlan(levels=(3,)), exp4)

    def test_density_floor(self, exp4: ExponentialDensity) -> None:
        """An observation outside the density support is reported."""
        density = ExponentialDensity(rate=4.0, floor=1e-2)
        data = Dataset(t=[0.1, 0.2, 3.0, 0.3], x=np.ones(4), y=np.zeros(4))
        with pytest.raises(DensityFloorError):
            assemble_design(data, TruncationPlan(levels=(2,)), density)


class TestLeastSquares:
    """Tests for the QR least-squares solve."""

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_normal_equations(self, seed: int) -> None:
        """On random well-posed designs the solution equals (Phi^T Phi)^-1 Phi^T y to 1e-10."""
        rng = np.random.default_rng(seed)
        p = int(rng.integers(1, 13))
        n = int(rng.integers(max(3 * p, 10), 501))
        phi = rng.normal(size=(n, p))
        y = rng.normal(size=n)
        theta = solve_least_squares(phi, y).theta
        oracle = np.linalg.solve(phi.T @ phi, phi.T @ y)
        assert np.linalg.norm(theta - oracle) <= 1e-10 * np.linalg.norm(oracle)

    def test_residuals_orthogonal_to_columns(self, rng: np.random.Generator) -> None:
        """Phi^T (y - Phi theta) vanishes."""
        phi = rng.normal(size=(50, 4))
        y = rng.normal(size=50)
        theta = solve_least_squares(phi, y).theta
        assert np.max(np.abs(phi.T @ (y - phi @ theta))) <= 1e-10

    def test_column_permutation(self, rng: np.random.Generator) -> None:
        """Permuting the columns permutes the solution."""
        phi = rng.normal(size=(40, 4))
        y = rng.normal(size=40)
        perm = np.array([2, 0, 3, 1])
        theta = solve_least_squares(phi, y).theta
        permuted = solve_least_squares(phi[:, perm], y).theta
        np.testing.assert_allclose(permuted, theta[perm], rtol=1e-10, atol=1e-12)

    def test_duplicated_column(self, rng: np.random.Generator) -> None:
        """A repeated column makes the design rank deficient."""
        phi = rng.normal(size=(30, 3))
        phi = np.column_stack([phi, phi[:, 1]])
        with pytest.raises(RankDeficiencyError) as excinfo:
            solve_least_squares(phi, rng.normal(size=30))
        assert excinfo.value.rank == 3
        assert excinfo.value.columns == 4

    def test_more_columns_than_rows(self, rng: np.random.Generator) -> None:
        """n < p is a dimension error."""
        with pytest.raises(DimensionError):
            solve_least_squares(rng.normal(size=(3, 5)), rng.normal(size=3))

    def test_plan_layout(self, rng: np.random.Generator) -> None:
        """A plan is attached to the returned coefficients."""
        plan = TruncationPlan(levels=(2, 2))
        result = solve_least_squares(rng.normal(size=(10, 4)), rng.normal(size=10), plan)
        assert result.plan == plan
        assert result.block(2).shape == (2,)

    def test_leverage_is_hat_diagonal(self, rng: np.random.Generator) -> None:
        """Leverages equal the diagonal of Phi (Phi^T Phi)^-1 Phi^T and sum to p."""
        phi = rng.normal(size=(25, 4))
        _, leverage = least_squares_with_leverage(phi, rng.normal(size=25))
        hat = phi @ np.linalg.solve(phi.T @ phi, phi.T)
        np.testing.assert_allclose(leverage, np.diag(hat), atol=1e-12)
        np.testing.assert_allclose(hat_diagonal(phi), leverage, atol=1e-14)
        assert leverage.sum() == pytest.approx(4.0)

    def test_gram_matrix(self) -> None:
        """Gram matrix is normalized by n."""
        phi = np.array([[1.0, 0.0], [0.0, 2.0]])
        np.testing.assert_allclose(gram_matrix(phi), [[0.5, 0.0], [0.0, 2.0]])
