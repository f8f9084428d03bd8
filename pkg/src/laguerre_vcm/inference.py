"""Asymptotic inference for a single coefficient beta_l(t).

The significance level of intervals and tests is called `level`; `alpha`
is always the long-memory parameter of the error process.
"""

from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
from enum import Enum
from logging import getLogger

import numpy as np
from joblib import Parallel
from joblib import delayed
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.linalg import LinAlgError
from scipy.linalg import cho_factor
from scipy.linalg import cho_solve
from scipy.stats import norm

from laguerre_vcm.basis import weighted_basis_matrix
from laguerre_vcm.basis import weighted_basis_vector
from laguerre_vcm.density import DesignDensity
from laguerre_vcm.design import Dataset
from laguerre_vcm.design import TruncationPlan
from laguerre_vcm.errors import DimensionError
from laguerre_vcm.errors import RankDeficiencyError
from laguerre_vcm.errors import SingularGammaError
from laguerre_vcm.errors import ZeroVarianceError
from laguerre_vcm.estimator import FittedVCM
from laguerre_vcm.estimator import evaluate_coefficient
from laguerre_vcm.estimator import fit

logger = getLogger(__name__)
stat_logger = getLogger("laguerre_vcm.stats")

SYMMETRY_TOLERANCE = 1e-10
DEFAULT_BOOTSTRAP_REPLICATES = 500
MIN_BOOTSTRAP_REPLICATES = 100
MAX_RESAMPLE_ATTEMPTS = 10


class GammaEstimator(Enum):
    """Which Gamma matrix enters the variance.

    MARGINAL uses only covariate l; JOINT takes the Schur complement of the
    full Gram matrix, which stays valid when covariates are correlated.
    DIAGONAL replaces Gamma by E[X_l^2] I, exact when the weighted basis is
    orthonormal under the design density and independent of X_l.
    """

    MARGINAL = "marginal"
    JOINT = "joint"
    DIAGONAL = "diagonal"


def _check_level(level: float) -> None:
    if not 0 < level < 1:
        raise ValueError(f"Significance level must lie in (0, 1), got {level!r}")


def critical_value(level: float) -> float:
    """Two-sided standard normal critical value z = Phi^-1(1 - level/2)."""
    _check_level(level)
    return float(norm.isf(level / 2.0))


def _factor(gamma: NDArray[np.float64]) -> tuple[NDArray[np.float64], bool]:
    try:
        return cho_factor(gamma)
    except LinAlgError as e:
        raise SingularGammaError(f"Gamma matrix of size {gamma.shape[0]} is not positive-definite") from e


@dataclass(frozen=True, eq=False)
class VarianceModel:
    """Ingredients of sigma_l^2(t) = pi_alpha phi~(t)^T Gamma^-1 phi~(t)."""

    alpha: float
    pi_alpha: float
    gamma_matrix: NDArray[np.float64]
    estimator: GammaEstimator = GammaEstimator.MARGINAL
    _cholesky: tuple[NDArray[np.float64], bool] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not self.pi_alpha > 0:
            raise ValueError(f"pi_alpha must be positive, got {self.pi_alpha!r}")
        gamma = np.atleast_2d(np.asarray(self.gamma_matrix, dtype=np.float64))
        if gamma.shape[0] != gamma.shape[1]:
            raise DimensionError(f"Gamma must be square, got shape {gamma.shape}")
        scale = max(1.0, float(np.max(np.abs(gamma))))
        if np.max(np.abs(gamma - gamma.T)) > SYMMETRY_TOLERANCE * scale:
            raise ValueError("Gamma matrix is not symmetric")
        if self.estimator is GammaEstimator.DIAGONAL and not np.allclose(gamma, gamma[0, 0] * np.eye(gamma.shape[0])):
            raise ValueError("A diagonal Gamma must be a multiple of the identity")
        object.__setattr__(self, "gamma_matrix", gamma)
        object.__setattr__(self, "_cholesky", _factor(gamma))

    @property
    def size(self) -> int:
        return int(self.gamma_matrix.shape[0])

    def quadratic_form(self, vector: NDArray[np.float64]) -> float:
        """v^T Gamma^-1 v."""
        return float(vector @ cho_solve(self._cholesky, vector))

    @classmethod
    def from_fit(
        cls,
        fitted: FittedVCM,
        l: int,
        alpha: float = 1.0,
        pi_alpha: float | None = None,
        gamma: GammaEstimator = GammaEstimator.MARGINAL,
    ) -> VarianceModel:
        """Plug-in model for coefficient l of a fit.

        With alpha = 1 the long-memory constant defaults to the training
        residual variance. For alpha < 1 the caller must supply pi_alpha.
        """
        if pi_alpha is None:
            if alpha != 1.0:
                raise ValueError("pi_alpha must be supplied when alpha < 1")
            pi_alpha = fitted.residual_variance
        m = fitted.plan.level(l)
        if gamma is GammaEstimator.MARGINAL:
            matrix = estimate_gamma(fitted.data, l, m, fitted.density, fitted.nu)
        elif gamma is GammaEstimator.JOINT:
            matrix = estimate_joint_gamma(fitted, l)
        else:
            matrix = float(np.mean(fitted.data.x[:, l - 1] ** 2)) * np.eye(m)
        return cls(alpha=alpha, pi_alpha=pi_alpha, gamma_matrix=matrix, estimator=gamma)


@dataclass(frozen=True)
class TestResult:
    """Outcome of a point-wise two-sided test of H0: beta_l(t0) = beta0."""

    __test__ = False

    statistic: float
    p_value: float
    reject: bool
    level: float


def estimate_gamma(data: Dataset, l: int, m: int, density: DesignDensity, nu: float = 0.0) -> NDArray[np.float64]:
    """Gamma_n = (1/n) sum_i x_{li}^2 phi~(t_i) phi~(t_i)^T, an M x M matrix.

    Raises:
        SingularGammaError: If the result is not numerically positive-definite.

    """
    if not 1 <= l <= data.r:
        raise DimensionError(f"Coefficient index {l} outside 1..{data.r}")
    if data.n < m:
        raise DimensionError(f"Gamma estimate needs n >= M, got n={data.n}, M={m}")
    basis = weighted_basis_matrix(data.t, m, density, nu)
    weighted = basis * (data.x[:, l - 1] ** 2)[:, None]
    gamma = weighted.T @ basis / data.n
    gamma = 0.5 * (gamma + gamma.T)
    _factor(gamma)
    return gamma


def estimate_joint_gamma(fitted: FittedVCM, l: int) -> NDArray[np.float64]:
    """Inverse of block l of (Phi^T Phi / n)^-1."""
    phi = fitted.design()
    gram = phi.T @ phi / fitted.n
    block = fitted.plan.block(l)
    selector = np.zeros((fitted.plan.total, block.stop - block.start))
    selector[block, :] = np.eye(block.stop - block.start)
    inverse_block = selector.T @ cho_solve(_factor(gram), selector)
    inverse_block = 0.5 * (inverse_block + inverse_block.T)
    gamma = cho_solve(_factor(inverse_block), np.eye(inverse_block.shape[0]))
    return 0.5 * (gamma + gamma.T)


def asymptotic_variance(fitted: FittedVCM, l: int, t: float, model: VarianceModel) -> float:
    """sigma_l^2(t) = pi_alpha phi~_l(t)^T Gamma^-1 phi~_l(t)."""
    m = fitted.plan.level(l)
    if model.size != m:
        raise DimensionError(f"Gamma is {model.size}x{model.size} but coefficient {l} has M={m}")
    if model.estimator is GammaEstimator.DIAGONAL:
        return diagonal_variance(fitted, l, t, model.pi_alpha, float(model.gamma_matrix[0, 0]))
    basis = weighted_basis_vector(t, m, fitted.density, fitted.nu)
    return model.pi_alpha * model.quadratic_form(basis)


def diagonal_variance(
    fitted: FittedVCM, l: int, t: float, pi_alpha: float, second_moment: float | None = None
) -> float:
    """Variance under a diagonal Gamma: pi_alpha / E[X_l^2] * sum_k phi~_k(t)^2."""
    if second_moment is None:
        second_moment = float(np.mean(fitted.data.x[:, l - 1] ** 2))
    basis = weighted_basis_vector(t, fitted.plan.level(l), fitted.density, fitted.nu)
    return pi_alpha / second_moment * float(basis @ basis)


def standard_error(fitted: FittedVCM, l: int, t: float, model: VarianceModel) -> float:
    """n^(-alpha/2) sigma_l(t), the scale of beta_hat_l(t) - beta_l(t)."""
    return float(np.sqrt(asymptotic_variance(fitted, l, t, model)) * fitted.n ** (-model.alpha / 2.0))


def confidence_interval(
    fitted: FittedVCM, l: int, t: float, level: float, model: VarianceModel
) -> tuple[float, float]:
    """beta_hat_l(t) -/+ z_{1-level/2} n^(-alpha/2) sigma_l(t)."""
    z = critical_value(level)
    estimate = float(evaluate_coefficient(fitted, l, t))
    half_width = z * standard_error(fitted, l, t, model)
    return estimate - half_width, estimate + half_width


def pointwise_test(
    fitted: FittedVCM, l: int, t0: float, beta0: float, level: float, model: VarianceModel
) -> TestResult:
    """Two-sided test of H0: beta_l(t0) = beta0 with T_n = sqrt(n^alpha)(beta_hat - beta0) / sigma_hat.

    Raises:
        ZeroVarianceError: If sigma_hat_l(t0) is zero.

    """
    z = critical_value(level)
    sigma = float(np.sqrt(asymptotic_variance(fitted, l, t0, model)))
    if sigma == 0.0:
        raise ZeroVarianceError(f"Estimated variance of beta_{l}({t0}) is zero")
    estimate = float(evaluate_coefficient(fitted, l, t0))
    statistic = np.sqrt(fitted.n**model.alpha) * (estimate - beta0) / sigma
    p_value = float(min(1.0, 2.0 * norm.sf(abs(statistic))))
    return TestResult(statistic=float(statistic), p_value=p_value, reject=bool(abs(statistic) > z), level=level)


def asymptotic_power(delta: float, sigma: float, level: float) -> float:
    """Power 1 - Phi(z - delta/sigma) + Phi(-z - delta/sigma) under the local alternative."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    z = critical_value(level)
    shift = delta / sigma
    return float(norm.sf(z - shift) + norm.cdf(-z - shift))


def local_alternative_shift(delta: float, n: int, alpha: float = 1.0) -> float:
    """Offset delta / sqrt(n^alpha) of the local alternative from the null value."""
    return float(delta / np.sqrt(float(n) ** alpha))


@dataclass(frozen=True, eq=False)
class BootstrapBands:
    """Point-wise percentile bands for every coefficient on a grid.

    Arrays `estimate`, `lower` and `upper` have shape (r, len(t_grid)).
    """

    t_grid: NDArray[np.float64]
    estimate: NDArray[np.float64]
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    level: float
    replicates: int


def _bootstrap_replicate(
    data: Dataset,
    plan: TruncationPlan,
    density: DesignDensity,
    nu: float,
    grid: NDArray[np.float64],
    seed: np.random.SeedSequence,
) -> NDArray[np.float64]:
    rng = np.random.default_rng(seed)
    rank = 0
    for attempt in range(1, MAX_RESAMPLE_ATTEMPTS + 1):
        rows = rng.integers(0, data.n, size=data.n)
        try:
            return fit(data.subset(rows), plan, density, nu).coefficient_curves(grid)
        except RankDeficiencyError as e:
            rank = e.rank
            logger.debug(f"Bootstrap resample rank {rank}, attempt {attempt}/{MAX_RESAMPLE_ATTEMPTS}")
    raise RankDeficiencyError(rank=rank, columns=plan.total)


def bootstrap_bands(
    data: Dataset,
    plan: TruncationPlan,
    density: DesignDensity,
    t_grid: ArrayLike,
    nu: float = 0.0,
    replicates: int = DEFAULT_BOOTSTRAP_REPLICATES,
    level: float = 0.05,
    seed: int = 0,
    n_jobs: int = 1,
) -> BootstrapBands:
    """Pairs bootstrap: resample rows with replacement, refit, take percentile bands.

    Each replicate gets its own child seed, so results do not depend on
    `n_jobs`. A rank-deficient resample is redrawn up to ten times.
    """
    _check_level(level)
    if replicates < MIN_BOOTSTRAP_REPLICATES:
        raise ValueError(f"At least {MIN_BOOTSTRAP_REPLICATES} bootstrap replicates are required, got {replicates}")
    grid = np.atleast_1d(np.asarray(t_grid, dtype=np.float64))
    estimate = fit(data, plan, density, nu).coefficient_curves(grid)
    children = np.random.SeedSequence(seed).spawn(replicates)
    logger.info(f"Running {replicates} bootstrap replicates for plan {plan} on {grid.size} grid points")
    curves = Parallel(n_jobs=n_jobs)(
        delayed(_bootstrap_replicate)(data, plan, density, nu, grid, child) for child in children
    )
    stacked = np.stack(curves)
    lower, upper = np.quantile(stacked, [level / 2.0, 1.0 - level / 2.0], axis=0)
    outside = int(np.sum((estimate < lower) | (estimate > upper)))
    if outside:
        logger.warning(f"Point estimate falls outside the percentile band at {outside} grid points")
    stat_logger.info(f"Bootstrap bands: mean width {float(np.mean(upper - lower)):.6g}")
    return BootstrapBands(
        t_grid=grid, estimate=estimate, lower=lower, upper=upper, level=level, replicates=replicates
    )


__all__ = [
    "BootstrapBands",
    "GammaEstimator",
    "TestResult",
    "VarianceModel",
    "asymptotic_power",
    "asymptotic_variance",
    "bootstrap_bands",
    "confidence_interval",
    "critical_value",
    "diagonal_variance",
    "estimate_gamma",
    "estimate_joint_gamma",
    "local_alternative_shift",
    "pointwise_test",
    "standard_error",
]
