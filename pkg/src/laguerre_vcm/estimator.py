"""Fitting the Laguerre varying-coefficient model and choosing truncation levels."""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable
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
from scipy.linalg import cho_factor
from scipy.linalg import cho_solve

from laguerre_vcm.basis import weighted_basis_matrix
from laguerre_vcm.density import DesignDensity
from laguerre_vcm.design import CoefficientVector
from laguerre_vcm.design import Dataset
from laguerre_vcm.design import TruncationPlan
from laguerre_vcm.design import assemble_design
from laguerre_vcm.design import design_from_basis
from laguerre_vcm.design import least_squares_with_leverage
from laguerre_vcm.errors import DimensionError
from laguerre_vcm.errors import EmptyGridError
from laguerre_vcm.errors import NoViableCandidateError
from laguerre_vcm.errors import RankDeficiencyError

logger = getLogger(__name__)
stat_logger = getLogger("laguerre_vcm.stats")

DEFAULT_MAX_LEVEL = 12
CARTESIAN_MAX_R = 2
COORDINATE_SWEEPS = 10


class SearchStrategy(Enum):
    """How select_truncation_loocv walks the grid."""

    AUTO = "auto"
    CARTESIAN = "cartesian"
    COORDINATE = "coordinate"


@dataclass(frozen=True, eq=False)
class FittedVCM:
    """A fitted Laguerre varying-coefficient model.

    Attributes:
        theta_hat: Estimated coefficient vector, laid out by `plan`.
        density: Design density used for the weighted basis.
        nu: Generalized Laguerre order (0 for the standard basis).
        data: The training data.
        residuals: y - Phi theta_hat on the training data.

    """

    theta_hat: CoefficientVector
    density: DesignDensity
    nu: float
    data: Dataset
    residuals: NDArray[np.float64] = field(repr=False)

    @property
    def plan(self) -> TruncationPlan:
        return self.theta_hat.plan

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def r(self) -> int:
        return self.plan.r

    @property
    def fitted_values(self) -> NDArray[np.float64]:
        return self.data.y - self.residuals

    @property
    def residual_variance(self) -> float:
        """Unbiased residual variance RSS / (n - sum M_l)."""
        dof = max(self.n - self.plan.total, 1)
        return float(self.residuals @ self.residuals) / dof

    def design(self) -> NDArray[np.float64]:
        return assemble_design(self.data, self.plan, self.density, self.nu)

    def coefficient_curves(self, t_grid: ArrayLike) -> NDArray[np.float64]:
        """beta_hat_l evaluated on a grid, shape (r, len(t_grid))."""
        grid = np.atleast_1d(np.asarray(t_grid, dtype=np.float64))
        basis = weighted_basis_matrix(grid, max(self.plan.levels), self.density, self.nu)
        return np.vstack([basis[:, :m] @ self.theta_hat.block(l) for l, m in enumerate(self.plan.levels, start=1)])


@dataclass(frozen=True)
class SmoothnessSpec:
    """Laguerre-Sobolev smoothness gamma_l, radius A_l and long-memory parameter alpha."""

    gamma: tuple[float, ...]
    radius: tuple[float, ...]
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if len(self.gamma) != len(self.radius):
            raise DimensionError("gamma and radius must have one entry per coefficient")
        if any(not g > 0 for g in self.gamma):
            raise ValueError(f"Every gamma_l must be positive, got {self.gamma}")
        if any(not a > 0 for a in self.radius):
            raise ValueError(f"Every radius A_l must be positive, got {self.radius}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha!r}")


@dataclass(frozen=True)
class TruncationSelection:
    """Result of a cross-validated truncation search."""

    plan: TruncationPlan
    score: float
    scores: dict[tuple[int, ...], float]
    failures: int = 0


def fit(data: Dataset, plan: TruncationPlan, density: DesignDensity, nu: float = 0.0) -> FittedVCM:
    """Least-squares fit of the truncated Laguerre expansion.

    Raises:
        DimensionError: If n < sum M_l or the plan does not match r.
        RankDeficiencyError: If the design matrix is rank deficient.
        DensityFloorError: If h(t_i) < m0 at some observation.

    """
    phi = assemble_design(data, plan, density, nu)
    theta, _ = least_squares_with_leverage(phi, data.y)
    residuals = data.y - phi @ theta
    logger.debug(f"Fitted plan {plan} on n={data.n}, RSS={float(residuals @ residuals):.6g}")
    return FittedVCM(
        theta_hat=CoefficientVector(theta=theta, plan=plan),
        density=density,
        nu=nu,
        data=data,
        residuals=residuals,
    )


def evaluate_coefficient(fitted: FittedVCM, l: int, t: ArrayLike) -> float | NDArray[np.float64]:
    """beta_hat_l(t) = sum_{k < M_l} theta_hat_{lk} phi~_k(t)."""
    block = fitted.theta_hat.block(l)
    arr = np.asarray(t, dtype=np.float64)
    basis = weighted_basis_matrix(arr.ravel(), block.size, fitted.density, fitted.nu)
    values = (basis @ block).reshape(arr.shape)
    return float(values) if values.ndim == 0 else values


def evaluate_coefficient_vector(fitted: FittedVCM, t: float) -> NDArray[np.float64]:
    """The r-vector (beta_hat_1(t), ..., beta_hat_r(t))."""
    return fitted.coefficient_curves([t])[:, 0]


def predict(fitted: FittedVCM, t: float, x: ArrayLike) -> float:
    """Model prediction sum_l beta_hat_l(t) x_l at one point."""
    x_arr = np.asarray(x, dtype=np.float64).ravel()
    if x_arr.size != fitted.r:
        raise DimensionError(f"Expected {fitted.r} covariates, got {x_arr.size}")
    return float(evaluate_coefficient_vector(fitted, t) @ x_arr)


def predict_many(fitted: FittedVCM, t: ArrayLike, x: ArrayLike) -> NDArray[np.float64]:
    """Predictions for rows (t_i, x_i)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    x_arr = np.asarray(x, dtype=np.float64).reshape(t_arr.size, -1)
    if x_arr.shape[1] != fitted.r:
        raise DimensionError(f"Expected {fitted.r} covariates, got {x_arr.shape[1]}")
    return np.einsum("ln,nl->n", fitted.coefficient_curves(t_arr), x_arr)


def theoretical_truncation(spec: SmoothnessSpec, n: int) -> TruncationPlan:
    """M_l = max(1, round((A_l^2 n^alpha)^(1 / (2 gamma_l + 1)))) with round-half-up."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    levels = []
    for gamma, radius in zip(spec.gamma, spec.radius, strict=True):
        if math.isinf(gamma):
            levels.append(1)
            continue
        value = math.exp((2.0 * math.log(radius) + spec.alpha * math.log(n)) / (2.0 * gamma + 1.0))
        levels.append(max(1, math.floor(value + 0.5)))
    return TruncationPlan(levels=tuple(levels))


def sobolev_norm(theta: ArrayLike, gamma: float) -> float:
    """Laguerre-Sobolev functional sum_k (k v 1)^(2 gamma) theta_k^2."""
    coef = np.asarray(theta, dtype=np.float64).ravel()
    k = np.maximum(np.arange(coef.size), 1).astype(np.float64)
    return float(np.sum(k ** (2.0 * gamma) * coef**2))


def minimax_risk_bound(spec: SmoothnessSpec, n: int, sigma: float) -> float:
    """Rate expression sum_l A_l^2 [sigma^2 / (A_l^2 n^alpha)]^(2 gamma_l / (2 gamma_l + 1)), constant 1."""
    total = 0.0
    for gamma, radius in zip(spec.gamma, spec.radius, strict=True):
        ratio = sigma**2 / (radius**2 * n**spec.alpha)
        total += radius**2 * ratio ** (2.0 * gamma / (2.0 * gamma + 1.0))
    return total


def default_truncation_grid(n: int, r: int) -> list[range]:
    """M_l in 1..min(12, floor(n / (4 r))) for every coefficient."""
    upper = max(1, min(DEFAULT_MAX_LEVEL, n // (4 * r)))
    return [range(1, upper + 1) for _ in range(r)]


def _loocv_from_basis(
    basis: NDArray[np.float64], x: NDArray[np.float64], y: NDArray[np.float64], plan: TruncationPlan
) -> float:
    phi = design_from_basis(basis, x, plan)
    theta, leverage = least_squares_with_leverage(phi, y)
    residuals = y - phi @ theta
    denom = 1.0 - leverage
    if np.any(denom <= 1e-12):
        return math.inf
    return float(np.mean((residuals / denom) ** 2))


def loocv_score(data: Dataset, plan: TruncationPlan, density: DesignDensity, nu: float = 0.0) -> float:
    """Leave-one-out mean squared prediction error via the leverage identity.

    LOO_i = residual_i / (1 - H_ii), H the hat matrix of the full fit.
    """
    if data.n <= plan.total:
        raise DimensionError(f"LOOCV needs n > sum M_l, got n={data.n}, plan {plan}")
    basis = weighted_basis_matrix(data.t, max(plan.levels), density, nu)
    return _loocv_from_basis(basis, data.x, data.y, plan)


def _score_candidate(
    basis: NDArray[np.float64], data: Dataset, levels: tuple[int, ...]
) -> tuple[tuple[int, ...], float | None]:
    plan = TruncationPlan(levels=levels)
    if data.n <= plan.total:
        return levels, None
    try:
        score = _loocv_from_basis(basis, data.x, data.y, plan)
    except (RankDeficiencyError, DimensionError) as e:
        logger.debug(f"Candidate {plan} skipped: {e}")
        return levels, None
    return levels, score if math.isfinite(score) else None


def _selection_key(item: tuple[tuple[int, ...], float]) -> tuple[float, int, tuple[int, ...]]:
    levels, score = item
    return score, sum(levels), levels


def select_truncation_loocv(
    data: Dataset,
    density: DesignDensity,
    grid: Sequence[Sequence[int]] | None = None,
    nu: float = 0.0,
    n_jobs: int = 1,
    strategy: SearchStrategy = SearchStrategy.AUTO,
) -> TruncationSelection:
    """Choose (M_1, ..., M_r) minimizing the leave-one-out prediction error.

    The full Cartesian grid is searched when r <= 2; for larger r a coordinate
    descent runs from the lowest corner and from the grid midpoint. Ties go to
    the smaller total sum M_l, then lexicographically. `strategy` forces one
    of the two searches.

    Raises:
        EmptyGridError: If the grid or any of its ranges is empty.
        NoViableCandidateError: If no candidate can be fitted.
        DensityFloorError: If h(t_i) < m0 at some observation.

    """
    axes = default_truncation_grid(data.n, data.r) if grid is None else grid
    ranges = [sorted({int(m) for m in axis}) for axis in axes]
    if not ranges or any(not axis for axis in ranges):
        raise EmptyGridError("Truncation grid has an empty axis")
    if len(ranges) != data.r:
        raise DimensionError(f"Grid has {len(ranges)} axes but data has r={data.r}")
    if any(m < 1 for axis in ranges for m in axis):
        raise ValueError("Truncation grid values must be >= 1")

    basis = weighted_basis_matrix(data.t, max(axis[-1] for axis in ranges), density, nu)
    scores: dict[tuple[int, ...], float] = {}
    failed: set[tuple[int, ...]] = set()

    def evaluate(candidates: list[tuple[int, ...]]) -> None:
        todo = [c for c in candidates if c not in scores and c not in failed]
        if not todo:
            return
        results = Parallel(n_jobs=n_jobs)(delayed(_score_candidate)(basis, data, c) for c in todo)
        for levels, score in results:
            if score is None:
                failed.add(levels)
            else:
                scores[levels] = score

    cartesian = strategy is SearchStrategy.CARTESIAN or (
        strategy is SearchStrategy.AUTO and data.r <= CARTESIAN_MAX_R
    )
    if cartesian:
        evaluate(list(itertools.product(*ranges)))
    else:
        starts = [tuple(axis[0] for axis in ranges), tuple(axis[len(axis) // 2] for axis in ranges)]
        for start in starts:
            _coordinate_descent(start, ranges, scores, evaluate)

    if not scores:
        raise NoViableCandidateError(f"All {len(failed)} truncation candidates failed to fit")
    best_levels, best_score = min(scores.items(), key=_selection_key)
    plan = TruncationPlan(levels=best_levels)
    stat_logger.info(f"LOOCV selected plan {plan} (score {best_score:.6g}, {len(scores)} fits)")
    return TruncationSelection(plan=plan, score=best_score, scores=scores, failures=len(failed))


def _coordinate_descent(
    start: tuple[int, ...],
    ranges: list[list[int]],
    scores: dict[tuple[int, ...], float],
    evaluate: Callable[[list[tuple[int, ...]]], None],
) -> None:
    current = start
    for sweep in range(COORDINATE_SWEEPS):
        changed = False
        for axis, values in enumerate(ranges):
            line = [current[:axis] + (v,) + current[axis + 1 :] for v in values]
            evaluate(line)
            viable = [(c, scores[c]) for c in line if c in scores]
            if not viable:
                continue
            best = min(viable, key=_selection_key)[0]
            if best != current:
                current = best
                changed = True
        logger.debug(f"Coordinate sweep {sweep + 1} from {start}: at {current}")
        if not changed:
            break


def coefficient_covariance(fitted: FittedVCM, t: float, pi_hat: float | None = None) -> NDArray[np.float64]:
    """Covariance of the vector estimator beta_hat(t): pi_hat Psi(t)^T (Phi^T Phi)^-1 Psi(t).

    Psi(t) stacks the zero-padded weighted basis vectors of each coefficient.
    `pi_hat` defaults to the training residual variance.
    """
    phi = fitted.design()
    plan = fitted.plan
    basis = weighted_basis_matrix([t], max(plan.levels), fitted.density, fitted.nu)[0]
    gram = cho_factor(phi.T @ phi)
    psi = np.zeros((plan.total, plan.r))
    for l in range(1, plan.r + 1):
        psi[plan.block(l), l - 1] = basis[: plan.level(l)]
    scale = fitted.residual_variance if pi_hat is None else pi_hat
    return scale * (psi.T @ cho_solve(gram, psi))


__all__ = [
    "FittedVCM",
    "SearchStrategy",
    "SmoothnessSpec",
    "TruncationSelection",
    "coefficient_covariance",
    "default_truncation_grid",
    "evaluate_coefficient",
    "evaluate_coefficient_vector",
    "fit",
    "loocv_score",
    "minimax_risk_bound",
    "predict",
    "predict_many",
    "select_truncation_loocv",
    "sobolev_norm",
    "theoretical_truncation",
]
