"""Kernel varying-coefficient estimators used as comparison baselines.

Both estimators solve a kernel-weighted least-squares problem at every target
point t. The local linear fit regresses on (x, x (t_i - t) / h); the
Nadaraya-Watson fit keeps only the x block. All target points of a call are
solved together as a stack of small normal-equation systems.
"""

from __future__ import annotations

import math
from collections.abc import Iterator
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from enum import Enum
from logging import getLogger

import numpy as np
from joblib import Parallel
from joblib import delayed
from numpy.typing import ArrayLike
from numpy.typing import NDArray

from laguerre_vcm.design import Dataset
from laguerre_vcm.errors import DimensionError
from laguerre_vcm.errors import EmptyGridError
from laguerre_vcm.errors import InsufficientLocalDataError
from laguerre_vcm.errors import NoViableCandidateError
from laguerre_vcm.errors import RankDeficiencyError

logger = getLogger(__name__)
stat_logger = getLogger("laguerre_vcm.stats")

# Local systems with a larger 2-norm condition number count as singular.
CONDITION_LIMIT = 1e12
# Upper bound on floats held by one batch of stacked local designs.
BATCH_ELEMENTS = 4_000_000
# Bandwidths refitting fewer observations than this share are dropped from selection.
MIN_USABLE_FRACTION = 0.5

_OK = 0
_INSUFFICIENT = 1
_SINGULAR = 2


class KernelName(Enum):
    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"


class KernelMethod(Enum):
    """Local polynomial order of the kernel baseline."""

    LOCAL_LINEAR = "LL"
    NADARAYA_WATSON = "NW"

    def parameters_per_covariate(self) -> int:
        return 2 if self is KernelMethod.LOCAL_LINEAR else 1


@dataclass(frozen=True)
class KernelConfig:
    """Kernel shape and bandwidth h, shared by every coefficient."""

    bandwidth: float
    kernel: KernelName = KernelName.EPANECHNIKOV

    def __post_init__(self) -> None:
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ValueError(f"Bandwidth must be positive and finite, got {self.bandwidth!r}")


def kernel(u: ArrayLike, name: KernelName = KernelName.EPANECHNIKOV) -> NDArray[np.float64]:
    """Unscaled kernel K(u): 0.75 (1 - u^2)_+ or the standard normal density."""
    arr = np.asarray(u, dtype=np.float64)
    if name is KernelName.EPANECHNIKOV:
        return 0.75 * np.clip(1.0 - arr**2, 0.0, None)
    return np.exp(-0.5 * arr**2) / math.sqrt(2.0 * math.pi)


def _scaled_kernel(offsets: NDArray[np.float64], cfg: KernelConfig) -> NDArray[np.float64]:
    return kernel(offsets / cfg.bandwidth, cfg.kernel) / cfg.bandwidth


def kernel_weights(t_obs: ArrayLike, t: float, cfg: KernelConfig) -> NDArray[np.float64]:
    """K_h(t_i - t) = K((t_i - t) / h) / h for every observation."""
    return _scaled_kernel(np.asarray(t_obs, dtype=np.float64) - t, cfg)


def _batches(
    data: Dataset,
    t_eval: NDArray[np.float64],
    method: KernelMethod,
    cfg: KernelConfig,
    leave_one_out: bool,
) -> Iterator[tuple[slice, NDArray[np.float64], NDArray[np.float64]]]:
    """Yield (rows, weights (g, n), local design (g, n, p)) for consecutive target points."""
    p = data.r * method.parameters_per_covariate()
    step = max(1, BATCH_ELEMENTS // (data.n * p))
    for start in range(0, t_eval.size, step):
        stop = min(start + step, t_eval.size)
        offsets = data.t[None, :] - t_eval[start:stop, None]
        weights = _scaled_kernel(offsets, cfg)
        if leave_one_out:
            weights[np.arange(stop - start), np.arange(start, stop)] = 0.0
        level = np.broadcast_to(data.x, (*offsets.shape, data.r))
        if method is KernelMethod.LOCAL_LINEAR:
            local = np.concatenate([level, data.x[None, :, :] * (offsets / cfg.bandwidth)[..., None]], axis=2)
        else:
            local = level
        yield slice(start, stop), weights, local


def _normal_equations(
    weights: NDArray[np.float64], local: NDArray[np.float64], y: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    gram = np.einsum("gn,gna,gnb->gab", weights, local, local)
    rhs = np.einsum("gn,gna,n->ga", weights, local, y)
    return gram, rhs


def _solve_stack(
    gram: NDArray[np.float64], rhs: NDArray[np.float64], counts: NDArray[np.intp], required: int, r: int
) -> tuple[NDArray[np.float64], NDArray[np.int8]]:
    """Solve every local system; return level coefficients (g, r) and a status code per system.

    A local linear system whose slope columns vanish (every weighted t_i equals
    t) drops them and is solved as the local constant system.
    """
    g, p = rhs.shape
    coef = np.full((g, r), np.nan)
    status = np.where(counts < required, _INSUFFICIENT, _OK).astype(np.int8)
    if p > r:
        flat = np.all(np.diagonal(gram, axis1=1, axis2=2)[:, r:] == 0.0, axis=1)
    else:
        flat = np.ones(g, dtype=bool)
    for mask, size in ((flat, r), (~flat, p)):
        active = np.flatnonzero(mask & (status == _OK))
        if active.size == 0:
            continue
        systems = gram[active][:, :size, :size]
        with np.errstate(divide="ignore", invalid="ignore"):
            condition = np.linalg.cond(systems)
        good = np.isfinite(condition) & (condition < CONDITION_LIMIT)
        status[active[~good]] = _SINGULAR
        if np.any(good):
            solved = np.linalg.solve(systems[good], rhs[active[good]][:, :size, None])[..., 0]
            coef[active[good]] = solved[:, :r]
    return coef, status


def _local_coefficients(
    data: Dataset,
    t_eval: NDArray[np.float64],
    method: KernelMethod,
    cfg: KernelConfig,
    leave_one_out: bool = False,
) -> tuple[NDArray[np.float64], NDArray[np.int8], NDArray[np.intp]]:
    """Level coefficients (len(t_eval), r) with NaN rows where a local fit fails."""
    required = data.r * method.parameters_per_covariate()
    coef = np.full((t_eval.size, data.r), np.nan)
    status = np.zeros(t_eval.size, dtype=np.int8)
    counts = np.zeros(t_eval.size, dtype=np.intp)
    for rows, weights, local in _batches(data, t_eval, method, cfg, leave_one_out):
        gram, rhs = _normal_equations(weights, local, data.y)
        counts[rows] = np.count_nonzero(weights > 0.0, axis=1)
        coef[rows], status[rows] = _solve_stack(gram, rhs, counts[rows], required, data.r)
    return coef, status, counts


def kernel_fit(data: Dataset, method: KernelMethod, cfg: KernelConfig, t: float) -> NDArray[np.float64]:
    """Coefficient vector (beta_hat_1(t), ..., beta_hat_r(t)) of a kernel baseline.

    Raises:
        InsufficientLocalDataError: If fewer than p observations have positive weight at t.
        RankDeficiencyError: If the local weighted system is singular.

    """
    if not t > 0:
        raise ValueError(f"Target point must be positive, got {t!r}")
    coef, status, counts = _local_coefficients(data, np.array([t], dtype=np.float64), method, cfg)
    required = data.r * method.parameters_per_covariate()
    if status[0] == _INSUFFICIENT:
        raise InsufficientLocalDataError(t=t, available=int(counts[0]), required=required)
    if status[0] == _SINGULAR:
        _, weights, local = next(_batches(data, np.array([t]), method, cfg, False))
        gram, _ = _normal_equations(weights, local, data.y)
        raise RankDeficiencyError(rank=int(np.linalg.matrix_rank(gram[0])), columns=required)
    return coef[0]


def local_linear_fit(data: Dataset, cfg: KernelConfig, t: float) -> NDArray[np.float64]:
    """Local linear varying-coefficient estimate at t; beta_hat_l(t) is the local level a_l."""
    return kernel_fit(data, KernelMethod.LOCAL_LINEAR, cfg, t)


def nadaraya_watson_fit(data: Dataset, cfg: KernelConfig, t: float) -> NDArray[np.float64]:
    """Local constant varying-coefficient estimate at t."""
    return kernel_fit(data, KernelMethod.NADARAYA_WATSON, cfg, t)


@dataclass(frozen=True, eq=False)
class KernelCurves:
    """Kernel coefficient estimates on a grid, shape (r, len(t_grid)); NaN where skipped."""

    t_grid: NDArray[np.float64]
    coefficients: NDArray[np.float64]
    skipped: int


def kernel_coefficient_curves(
    data: Dataset, method: KernelMethod, cfg: KernelConfig, t_grid: ArrayLike
) -> KernelCurves:
    grid = np.atleast_1d(np.asarray(t_grid, dtype=np.float64))
    coef, status, _ = _local_coefficients(data, grid, method, cfg)
    skipped = int(np.count_nonzero(status != _OK))
    if skipped:
        logger.warning(f"{method.value}: {skipped} of {grid.size} grid points skipped (too few local points)")
    return KernelCurves(t_grid=grid, coefficients=coef.T, skipped=skipped)


def kernel_predict(
    data: Dataset, method: KernelMethod, cfg: KernelConfig, t: ArrayLike, x: ArrayLike
) -> tuple[NDArray[np.float64], int]:
    """Predictions sum_l beta_hat_l(t_i) x_li for new rows, with NaN and a skip count for failed points."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    x_arr = np.asarray(x, dtype=np.float64).reshape(t_arr.size, -1)
    if x_arr.shape[1] != data.r:
        raise DimensionError(f"Expected {data.r} covariates, got {x_arr.shape[1]}")
    coef, status, _ = _local_coefficients(data, t_arr, method, cfg)
    return np.sum(coef * x_arr, axis=1), int(np.count_nonzero(status != _OK))


def loo_predictions(data: Dataset, method: KernelMethod, cfg: KernelConfig) -> NDArray[np.float64]:
    """Prediction of y_i from a refit without observation i, evaluated at t_i (NaN when it fails)."""
    coef, _, _ = _local_coefficients(data, data.t, method, cfg, leave_one_out=True)
    return np.sum(coef * data.x, axis=1)


def loocv_bandwidth_score(data: Dataset, method: KernelMethod, cfg: KernelConfig) -> tuple[float, int]:
    """Mean squared leave-one-out error over the points that could be refitted, and the skip count."""
    errors = data.y - loo_predictions(data, method, cfg)
    usable = np.isfinite(errors)
    skipped = int(data.n - np.count_nonzero(usable))
    if not np.any(usable):
        return math.inf, skipped
    return float(np.mean(errors[usable] ** 2)), skipped


def smoother_trace(data: Dataset, method: KernelMethod, cfg: KernelConfig) -> float:
    """Trace of the smoother matrix S with y_hat = S y at the training points.

    S_ii = K_h(0) x_i^T [A_i^-1]_{level block} x_i, A_i the local Gram matrix at t_i.
    Points whose local fit fails contribute nothing.
    """
    trace = 0.0
    self_weight = float(_scaled_kernel(np.zeros(1), cfg)[0])
    required = data.r * method.parameters_per_covariate()
    for rows, weights, local in _batches(data, data.t, method, cfg, False):
        gram, _ = _normal_equations(weights, local, data.y)
        counts = np.count_nonzero(weights > 0.0, axis=1)
        x_rows = data.x[rows]
        for offset, system in enumerate(gram):
            if counts[offset] < required:
                continue
            size = data.r if np.all(np.diag(system)[data.r :] == 0.0) else system.shape[0]
            block = system[:size, :size]
            if not np.linalg.cond(block) < CONDITION_LIMIT:
                continue
            solved = np.linalg.solve(block, np.pad(x_rows[offset], (0, size - data.r)))
            trace += self_weight * float(x_rows[offset] @ solved[: data.r])
    return trace


@dataclass(frozen=True)
class BandwidthSelection:
    """Cross-validated bandwidth with its score and the skip count at the chosen h."""

    method: KernelMethod
    config: KernelConfig
    score: float
    scores: dict[float, float] = field(repr=False)
    skipped: int = 0
    failures: int = 0

    @property
    def bandwidth(self) -> float:
        return self.config.bandwidth


def default_bandwidth_grid(t: ArrayLike, size: int = 20) -> NDArray[np.float64]:
    """Geometric grid from 0.2 to 4 standard deviations of t."""
    spread = float(np.std(np.asarray(t, dtype=np.float64)))
    if not spread > 0:
        spread = 1.0
    return np.geomspace(0.2 * spread, 4.0 * spread, size)


def _loo_errors(data: Dataset, method: KernelMethod, cfg: KernelConfig) -> tuple[float, NDArray[np.float64]]:
    return cfg.bandwidth, data.y - loo_predictions(data, method, cfg)


def select_bandwidth_cv(
    data: Dataset,
    method: KernelMethod,
    grid: Sequence[float] | NDArray[np.float64] | None = None,
    kernel_name: KernelName = KernelName.EPANECHNIKOV,
    n_jobs: int = 1,
) -> BandwidthSelection:
    """Bandwidth minimizing the literal leave-one-out squared prediction error.

    A bandwidth that leaves fewer than half of the observations refittable is
    discarded. The remaining candidates are scored on the same points: those
    every one of them can refit. Ties go to the larger bandwidth. A choice on
    either end of a grid with several candidates is logged as a warning.

    Raises:
        EmptyGridError: If the grid is empty.
        NoViableCandidateError: If no bandwidth passes, or the passing ones share no refittable point.

    """
    candidates = default_bandwidth_grid(data.t) if grid is None else np.asarray(grid, dtype=np.float64).ravel()
    if candidates.size == 0:
        raise EmptyGridError("Bandwidth grid is empty")
    configs = [KernelConfig(bandwidth=float(h), kernel=kernel_name) for h in candidates]
    results = Parallel(n_jobs=n_jobs)(delayed(_loo_errors)(data, method, cfg) for cfg in configs)
    errors = dict(results)
    usable = {h: np.isfinite(e) for h, e in errors.items()}
    skipped = {h: int(data.n - np.count_nonzero(mask)) for h, mask in usable.items()}
    viable = [h for h, mask in usable.items() if np.count_nonzero(mask) >= MIN_USABLE_FRACTION * data.n]
    if not viable:
        raise NoViableCandidateError(f"Every bandwidth leaves most points unrefittable for {method.value}")
    common = np.logical_and.reduce([usable[h] for h in viable])
    if not np.any(common):
        raise NoViableCandidateError(f"No point is refittable under every viable bandwidth for {method.value}")
    scores = {h: float(np.mean(errors[h][common] ** 2)) for h in viable}
    best_h, best_score = min(scores.items(), key=lambda item: (item[1], -item[0]))
    if skipped[best_h]:
        logger.warning(f"{method.value}: bandwidth {best_h:.4g} skips {skipped[best_h]} of {data.n} points")
    low, high = float(np.min(candidates)), float(np.max(candidates))
    if low < high and best_h in (low, high):
        logger.warning(f"{method.value}: bandwidth {best_h:.4g} is on the edge of the grid [{low:.4g}, {high:.4g}]")
    stat_logger.info(
        f"{method.value} CV selected h={best_h:.4g} (score {best_score:.6g} on {int(np.count_nonzero(common))} points)"
    )
    return BandwidthSelection(
        method=method,
        config=KernelConfig(bandwidth=best_h, kernel=kernel_name),
        score=best_score,
        scores=scores,
        skipped=skipped[best_h],
        failures=len(configs) - len(scores),
    )


__all__ = [
    "BandwidthSelection",
    "KernelConfig",
    "KernelCurves",
    "KernelMethod",
    "KernelName",
    "default_bandwidth_grid",
    "kernel",
    "kernel_coefficient_curves",
    "kernel_fit",
    "kernel_predict",
    "kernel_weights",
    "local_linear_fit",
    "loo_predictions",
    "loocv_bandwidth_score",
    "nadaraya_watson_fit",
    "select_bandwidth_cv",
    "smoother_trace",
]
