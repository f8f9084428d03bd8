"""Side-by-side comparison of the Laguerre fit, the local linear fit and linear regression."""

from __future__ import annotations

import math
from collections.abc import Callable
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from logging import getLogger

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.stats import norm

from laguerre_vcm.baselines import KernelMethod
from laguerre_vcm.baselines import kernel_predict
from laguerre_vcm.baselines import select_bandwidth_cv
from laguerre_vcm.baselines import smoother_trace
from laguerre_vcm.density import DesignDensity
from laguerre_vcm.design import Dataset
from laguerre_vcm.errors import DimensionError
from laguerre_vcm.estimator import fit
from laguerre_vcm.estimator import predict_many
from laguerre_vcm.estimator import select_truncation_loocv

logger = getLogger(__name__)
stat_logger = getLogger("laguerre_vcm.stats")

DEFAULT_TRAIN_FRACTION = 0.8

REPORT_COLUMNS = ["model", "subset", "tuning", "n", "skipped", "r2", "mse", "aic"]
RESIDUAL_COLUMNS = ["model", "t", "fitted", "residual"]
QQ_COLUMNS = ["model", "theoretical", "sample"]


class Model(Enum):
    GL = "GL-VCM"
    LL = "LL-VCM"
    LINEAR = "linear"


@dataclass(frozen=True)
class Metrics:
    """R^2, MSE and AIC = n ln(MSE) + 2p over the usable predictions."""

    n: int
    r2: float
    mse: float
    aic: float


def compute_metrics(y: ArrayLike, predictions: ArrayLike, parameters: float) -> Metrics:
    """Metrics over rows with a finite prediction.

    Raises:
        DimensionError: If no prediction is finite or sizes differ.

    """
    y_arr = np.asarray(y, dtype=np.float64).ravel()
    pred = np.asarray(predictions, dtype=np.float64).ravel()
    if y_arr.size != pred.size:
        raise DimensionError(f"{y_arr.size} responses but {pred.size} predictions")
    usable = np.isfinite(pred)
    if not np.any(usable):
        raise DimensionError("No finite predictions to score")
    y_arr, pred = y_arr[usable], pred[usable]
    n = int(y_arr.size)
    sse = float(np.sum((y_arr - pred) ** 2))
    sst = float(np.sum((y_arr - np.mean(y_arr)) ** 2))
    mse = sse / n
    if sst > 0:
        r2 = 1.0 - sse / sst
    else:
        r2 = 1.0 if sse == 0 else -math.inf
    aic = n * math.log(mse) + 2.0 * parameters if mse > 0 else -math.inf
    return Metrics(n=n, r2=r2, mse=mse, aic=aic)


def train_test_split(
    n: int, train_fraction: float = DEFAULT_TRAIN_FRACTION, seed: int = 0
) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    """Seeded shuffle, first round(fraction n) rows train; both index sets sorted."""
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction!r}")
    order = np.random.default_rng(seed).permutation(n)
    cut = int(round(train_fraction * n))
    if cut < 1 or cut >= n:
        raise ValueError(f"Split of n={n} at fraction {train_fraction} leaves an empty side")
    return np.sort(order[:cut]), np.sort(order[cut:])


@dataclass(frozen=True, eq=False)
class _Fitted:
    """Uniform prediction interface over the three models."""

    model: Model
    tuning: str
    parameters: float
    predict: Callable[[Dataset], tuple[NDArray[np.float64], int]]

    def __call__(self, data: Dataset) -> tuple[NDArray[np.float64], int]:
        return self.predict(data)


def linear_regression(data: Dataset) -> NDArray[np.float64]:
    """Constant coefficients by least squares: y ~ x beta."""
    beta, _, rank, _ = np.linalg.lstsq(data.x, data.y, rcond=None)
    if rank < data.r:
        logger.warning(f"Linear regression design has rank {rank} < {data.r}")
    return np.asarray(beta, dtype=np.float64)


def _fit_models(
    data: Dataset,
    density: DesignDensity,
    nu: float,
    truncation_grid: Sequence[Sequence[int]] | None,
    bandwidth_grid: Sequence[float] | None,
    n_jobs: int,
) -> list[_Fitted]:
    selection = select_truncation_loocv(data, density, truncation_grid, nu=nu, n_jobs=n_jobs)
    gl = fit(data, selection.plan, density, nu)
    bandwidth = select_bandwidth_cv(data, KernelMethod.LOCAL_LINEAR, bandwidth_grid, n_jobs=n_jobs)
    trace = smoother_trace(data, KernelMethod.LOCAL_LINEAR, bandwidth.config)
    beta = linear_regression(data)
    return [
        _Fitted(
            Model.GL,
            str(selection.plan),
            float(selection.plan.total),
            lambda d: (predict_many(gl, d.t, d.x), 0),
        ),
        _Fitted(
            Model.LL,
            f"h={bandwidth.bandwidth:.4g}",
            trace,
            lambda d: kernel_predict(data, KernelMethod.LOCAL_LINEAR, bandwidth.config, d.t, d.x),
        ),
        _Fitted(Model.LINEAR, "constant", float(data.r), lambda d: (d.x @ beta, 0)),
    ]


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Metric table plus residual diagnostics of the full-data fits."""

    table: pd.DataFrame
    residuals: pd.DataFrame
    qq: pd.DataFrame

    def metric(self, model: Model, subset: str, name: str) -> float:
        row = self.table[(self.table["model"] == model.value) & (self.table["subset"] == subset)]
        if row.empty:
            raise KeyError(f"No {subset} row for {model.value}")
        return float(row.iloc[0][name])


def normal_quantile_pairs(residuals: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """(Phi^-1((i - 0.5) / n), i-th smallest residual) for i = 1..n."""
    sample = np.sort(np.asarray(residuals, dtype=np.float64).ravel())
    n = sample.size
    theoretical = norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    return theoretical, sample


def _rows(fitted: list[_Fitted], data: Dataset, subset: str) -> list[dict[str, object]]:
    rows: list[dict[str, object]] = []
    for item in fitted:
        predictions, skipped = item(data)
        metrics = compute_metrics(data.y, predictions, item.parameters)
        rows.append(
            {
                "model": item.model.value,
                "subset": subset,
                "tuning": item.tuning,
                "n": metrics.n,
                "skipped": skipped,
                "r2": metrics.r2,
                "mse": metrics.mse,
                "aic": metrics.aic,
            }
        )
        stat_logger.info(
            f"{item.model.value} [{subset}] R2={metrics.r2:.4f} MSE={metrics.mse:.6g} AIC={metrics.aic:.2f}"
        )
    return rows


def compare_models(
    data: Dataset,
    density: DesignDensity,
    nu: float = 0.0,
    split: bool = True,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    seed: int = 0,
    truncation_grid: Sequence[Sequence[int]] | None = None,
    bandwidth_grid: Sequence[float] | None = None,
    n_jobs: int = 1,
) -> ComparisonReport:
    """Fit every model and report train, test and full-sample metrics.

    With `split` the models are also fitted on a seeded training share and
    scored on both sides; the full-sample rows always come from fits on all
    of `data`.
    """
    rows: list[dict[str, object]] = []
    if split:
        train_idx, test_idx = train_test_split(data.n, train_fraction, seed)
        train, test = data.subset(train_idx), data.subset(test_idx)
        logger.info(f"Comparing on a {train.n}/{test.n} train/test split")
        train_fits = _fit_models(train, density, nu, truncation_grid, bandwidth_grid, n_jobs)
        rows += _rows(train_fits, train, "train")
        rows += _rows(train_fits, test, "test")
    full_fits = _fit_models(data, density, nu, truncation_grid, bandwidth_grid, n_jobs)
    rows += _rows(full_fits, data, "full")

    residual_frames = []
    qq_frames = []
    for item in full_fits:
        predictions, _ = item(data)
        residuals = data.y - predictions
        residual_frames.append(
            pd.DataFrame({"model": item.model.value, "t": data.t, "fitted": predictions, "residual": residuals})
        )
        theoretical, sample = normal_quantile_pairs(residuals[np.isfinite(residuals)])
        qq_frames.append(pd.DataFrame({"model": item.model.value, "theoretical": theoretical, "sample": sample}))
    return ComparisonReport(
        table=pd.DataFrame(rows, columns=REPORT_COLUMNS),
        residuals=pd.concat(residual_frames, ignore_index=True)[RESIDUAL_COLUMNS],
        qq=pd.concat(qq_frames, ignore_index=True)[QQ_COLUMNS],
    )


__all__ = [
    "ComparisonReport",
    "Metrics",
    "Model",
    "compare_models",
    "compute_metrics",
    "linear_regression",
    "normal_quantile_pairs",
    "train_test_split",
]
