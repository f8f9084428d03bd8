"""Tests for the model comparison report."""

import math

import numpy as np
import pytest
from scipy.stats import norm

from laguerre_vcm.comparison import QQ_COLUMNS
from laguerre_vcm.comparison import REPORT_COLUMNS
from laguerre_vcm.comparison import RESIDUAL_COLUMNS
from laguerre_vcm.comparison import Model
from laguerre_vcm.comparison import compare_models
from laguerre_vcm.comparison import compute_metrics
from laguerre_vcm.comparison import linear_regression
from laguerre_vcm.comparison import normal_quantile_pairs
from laguerre_vcm.comparison import train_test_split
from laguerre_vcm.density import ExponentialDensity
from laguerre_vcm.design import Dataset
from laguerre_vcm.errors import DimensionError


def constant_coefficient_data(rng: np.random.Generator, n: int = 120) -> Dataset:
    """y = 1.5 + 2 x1 exactly, with an intercept column."""
    t = rng.exponential(0.25, size=n) + 0.01
    x = np.column_stack([np.ones(n), rng.normal(size=n)])
    return Dataset(t=t, x=x, y=1.5 + 2.0 * x[:, 1])


class TestMetrics:
    """Tests for R^2, MSE and AIC."""

    def test_hand_values(self) -> None:
        """Three points with known errors."""
        metrics = compute_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 4.0], parameters=2)
        assert metrics.n == 3
        assert metrics.mse == pytest.approx(1 / 3)
        assert metrics.r2 == pytest.approx(1 - 1 / 2)
        assert metrics.aic == pytest.approx(3 * math.log(1 / 3) + 4)

    def test_skips_nan_predictions(self) -> None:
        """Rows without a prediction are left out."""
        metrics = compute_metrics([1.0, 2.0, 3.0], [1.0, np.nan, 3.5], parameters=1)
        assert metrics.n == 2
        assert metrics.mse == pytest.approx(0.125)

    def test_perfect_fit(self) -> None:
        """Zero error gives R^2 = 1 and AIC = -inf."""
        metrics = compute_metrics([1.0, 2.0], [1.0, 2.0], parameters=1)
        assert metrics.r2 == 1.0
        assert metrics.aic == -math.inf

    def test_no_usable_prediction(self) -> None:
        """All-NaN predictions cannot be scored."""
        with pytest.raises(DimensionError):
            compute_metrics([1.0], [np.nan], parameters=1)

    def test_size_mismatch(self) -> None:
        """One prediction per response."""
        with pytest.raises(DimensionError):
            compute_metrics([1.0, 2.0], [1.0], parameters=1)


class TestSplit:
    """Tests for the seeded train/test split."""

    def test_partition(self) -> None:
        """80/20, disjoint, sorted and reproducible."""
        train, test = train_test_split(50, 0.8, seed=3)
        assert train.size == 40
        assert test.size == 10
        assert np.array_equal(np.sort(np.concatenate([train, test])), np.arange(50))
        assert np.all(np.diff(train) > 0)
        again, _ = train_test_split(50, 0.8, seed=3)
        np.testing.assert_array_equal(train, again)

    @pytest.mark.parametrize("fraction", [0.0, 1.0, 0.01])
    def test_rejects_degenerate(self, fraction: float) -> None:
        """Neither side may be empty."""
        with pytest.raises(ValueError):
            train_test_split(20, fraction)


class TestNormalQuantiles:
    """Tests for the Q-Q pairs."""

    def test_sorted_with_plotting_positions(self) -> None:
        """Sample sorted and paired with Phi^-1((i - 0.5) / n)."""
        theoretical, sample = normal_quantile_pairs([0.3, -1.0, 2.0, 0.0])
        np.testing.assert_array_equal(sample, [-1.0, 0.0, 0.3, 2.0])
        np.testing.assert_allclose(theoretical, norm.ppf([0.125, 0.375, 0.625, 0.875]))


class TestCompareModels:
    """Tests for the end-to-end comparison."""

    def test_linear_regression_exact(self, rng: np.random.Generator) -> None:
        """Constant coefficients are recovered by least squares."""
        np.testing.assert_allclose(linear_regression(constant_coefficient_data(rng)), [1.5, 2.0])

    def test_linear_data_fits_everywhere(self, rng: np.random.Generator) -> None:
        """Exactly representable data gives R^2 close to one for every model."""
        data = constant_coefficient_data(rng)
        report = compare_models(
            data,
            ExponentialDensity(rate=1.0),
            truncation_grid=[range(1, 4), range(1, 4)],
            bandwidth_grid=[0.2, 0.4],
        )
        assert list(report.table.columns) == REPORT_COLUMNS
        assert len(report.table) == 9
        assert set(report.table["subset"]) == {"train", "test", "full"}
        for model in Model:
            for subset in ("train", "test", "full"):
                assert report.metric(model, subset, "r2") == pytest.approx(1.0, abs=1e-6)

    def test_full_only(self, rng: np.random.Generator) -> None:
        """Without a split only full-sample rows are reported, plus diagnostics."""
        data = constant_coefficient_data(rng, 80)
        data = data.with_response(data.y + 0.1 * rng.standard_normal(data.n))
        report = compare_models(
            data,
            ExponentialDensity(rate=1.0),
            split=False,
            truncation_grid=[range(1, 3), range(1, 3)],
            bandwidth_grid=[0.3],
        )
        assert list(report.table["subset"]) == ["full"] * 3
        assert list(report.residuals.columns) == RESIDUAL_COLUMNS
        assert list(report.qq.columns) == QQ_COLUMNS
        assert len(report.residuals) == 3 * data.n
        gl = report.residuals[report.residuals["model"] == Model.GL.value]
        np.testing.assert_allclose(gl["fitted"] + gl["residual"], data.y)
        qq = report.qq[report.qq["model"] == Model.LINEAR.value]
        assert np.all(np.diff(qq["sample"].to_numpy()) >= 0)
        with pytest.raises(KeyError):
            report.metric(Model.GL, "test", "mse")

    def test_aic_uses_effective_parameters(self, rng: np.random.Generator) -> None:
        """The linear model is charged r parameters."""
        data = constant_coefficient_data(rng, 80)
        data = data.with_response(data.y + 0.2 * rng.standard_normal(data.n))
        report = compare_models(
            data, ExponentialDensity(rate=1.0), split=False, truncation_grid=[[1], [1]], bandwidth_grid=[0.3]
        )
        mse = report.metric(Model.LINEAR, "full", "mse")
        assert report.metric(Model.LINEAR, "full", "aic") == pytest.approx(data.n * math.log(mse) + 2 * 2)
        gl_mse = report.metric(Model.GL, "full", "mse")
        assert report.metric(Model.GL, "full", "aic") == pytest.approx(data.n * math.log(gl_mse) + 2 * 2)
