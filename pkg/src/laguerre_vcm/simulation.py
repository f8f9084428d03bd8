"""Synthetic data, long-memory noise and Monte Carlo experiments."""

from __future__ import annotations

import math
from collections.abc import Callable
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from logging import getLogger

import numpy as np
import pandas as pd
from joblib import Parallel
from joblib import delayed
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.linalg import cholesky
from scipy.linalg import toeplitz
from scipy.stats import kstest
from scipy.stats import linregress

from laguerre_vcm.baselines import KernelMethod
from laguerre_vcm.baselines import kernel_predict
from laguerre_vcm.baselines import select_bandwidth_cv
from laguerre_vcm.basis import weighted_basis_matrix
from laguerre_vcm.density import ExponentialDensity
from laguerre_vcm.design import Dataset
from laguerre_vcm.design import TruncationPlan
from laguerre_vcm.errors import DimensionError
from laguerre_vcm.errors import InsufficientLocalDataError
from laguerre_vcm.errors import NoViableCandidateError
from laguerre_vcm.errors import ReplicationFailedError
from laguerre_vcm.estimator import FittedVCM
from laguerre_vcm.estimator import SmoothnessSpec
from laguerre_vcm.estimator import evaluate_coefficient
from laguerre_vcm.estimator import fit
from laguerre_vcm.estimator import minimax_risk_bound
from laguerre_vcm.estimator import select_truncation_loocv
from laguerre_vcm.estimator import sobolev_norm
from laguerre_vcm.estimator import theoretical_truncation
from laguerre_vcm.inference import GammaEstimator
from laguerre_vcm.inference import VarianceModel
from laguerre_vcm.inference import asymptotic_power
from laguerre_vcm.inference import asymptotic_variance
from laguerre_vcm.inference import confidence_interval
from laguerre_vcm.inference import critical_value
from laguerre_vcm.inference import pointwise_test

logger = getLogger(__name__)
stat_logger = getLogger("laguerre_vcm.stats")

MIN_SCENARIO_SIZE = 50
MAX_LONG_MEMORY_SIZE = 10_000
STUDY_COVARIATES = ((200.0, 20.0), (45.0, 5.0))

# Fitting failures that are counted per replication instead of aborting the run.
_RECOVERABLE = (np.linalg.LinAlgError, ArithmeticError, ValueError, NoViableCandidateError)


class CoefficientCurve(Enum):
    """Coefficient curves of the simulation study."""

    BETA1 = "beta1"
    BETA2 = "beta2"
    BETA3 = "beta3"


def test_function(name: CoefficientCurve | str, t: ArrayLike) -> float | NDArray[np.float64]:
    """beta1 = t^(5/2) e^-(t-3), beta2 = t / (t^2 + 1)^4, beta3 = 1 / (e^t + e^2t)."""
    which = CoefficientCurve(name)
    arr = np.asarray(t, dtype=np.float64)
    if which is CoefficientCurve.BETA1:
        values = arr**2.5 * np.exp(-(arr - 3.0))
    elif which is CoefficientCurve.BETA2:
        values = arr / (arr**2 + 1.0) ** 4
    else:
        values = 1.0 / (np.exp(arr) + np.exp(2.0 * arr))
    return float(values) if values.ndim == 0 else values


class NoiseKind(Enum):
    IID_GAUSSIAN = "iid_gaussian"
    LONG_MEMORY = "long_memory"


@dataclass(frozen=True)
class NoiseSpec:
    """Error process: i.i.d. standard normal, or fGn with long-memory parameter alpha."""

    kind: NoiseKind = NoiseKind.IID_GAUSSIAN
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.kind is NoiseKind.LONG_MEMORY and not 0 < self.alpha < 1:
            raise ValueError(f"Long-memory alpha must lie in (0, 1), got {self.alpha!r}")
        if self.kind is NoiseKind.IID_GAUSSIAN and self.alpha != 1.0:
            raise ValueError("i.i.d. noise has alpha = 1")

    def draw(self, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
        if self.kind is NoiseKind.IID_GAUSSIAN:
            return rng.standard_normal(n)
        return generate_long_memory_noise(n, self.alpha, rng)


class Method(Enum):
    """Estimators compared in MISE experiments."""

    GL = "GL"
    LL = "LL"
    NW = "NW"


@dataclass(frozen=True)
class Scenario:
    """One cell of the simulation study.

    Covariates are normal with (mean, standard deviation) pairs; t is
    exponential with mean `t_mean`.
    """

    coefficients: tuple[CoefficientCurve, ...] = (CoefficientCurve.BETA1, CoefficientCurve.BETA2)
    n: int = 400
    sigma: float = 1e-4
    noise: NoiseSpec = NoiseSpec()
    replications: int = 200
    seed: int = 0
    covariates: tuple[tuple[float, float], ...] = STUDY_COVARIATES
    t_mean: float = 0.25

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", tuple(CoefficientCurve(c) for c in self.coefficients))
        if self.n < MIN_SCENARIO_SIZE:
            raise ValueError(f"Scenario n must be >= {MIN_SCENARIO_SIZE}, got {self.n}")
        if self.replications < 1:
            raise ValueError(f"Scenario needs at least one replication, got {self.replications}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma!r}")
        if not self.t_mean > 0:
            raise ValueError(f"t_mean must be positive, got {self.t_mean!r}")
        if len(self.covariates) != len(self.coefficients):
            raise DimensionError(
                f"{len(self.coefficients)} coefficients but {len(self.covariates)} covariate specifications"
            )
        if any(not sd >= 0 for _, sd in self.covariates):
            raise ValueError("Covariate standard deviations must be >= 0")

    @property
    def r(self) -> int:
        return len(self.coefficients)

    @property
    def density(self) -> ExponentialDensity:
        """True design density of t."""
        return ExponentialDensity(rate=1.0 / self.t_mean)

    @property
    def label(self) -> str:
        return ",".join(c.value for c in self.coefficients)


@dataclass(frozen=True, eq=False)
class SimulatedData:
    data: Dataset
    noiseless: NDArray[np.float64]


def generate_dataset(scenario: Scenario, rng: np.random.Generator) -> SimulatedData:
    """Draw t, normal covariates and y = sum_l beta_l(t) x_l + sigma eps."""
    n = scenario.n
    t = rng.exponential(scenario.t_mean, size=n)
    # t = 0 has probability zero but the design requires t > 0.
    t = np.maximum(t, np.finfo(np.float64).tiny)
    x = np.column_stack([rng.normal(mean, sd, size=n) for mean, sd in scenario.covariates])
    betas = np.column_stack([test_function(c, t) for c in scenario.coefficients])
    noiseless = np.sum(betas * x, axis=1)
    y = noiseless + scenario.sigma * scenario.noise.draw(n, rng) if scenario.sigma > 0 else noiseless.copy()
    return SimulatedData(data=Dataset(t=t, x=x, y=y), noiseless=noiseless)


def fgn_autocovariance(lags: ArrayLike, hurst: float) -> NDArray[np.float64]:
    """gamma(k) = (|k+1|^2H - 2|k|^2H + |k-1|^2H) / 2 of unit-variance fractional Gaussian noise."""
    k = np.abs(np.asarray(lags, dtype=np.float64))
    two_h = 2.0 * hurst
    return 0.5 * (np.abs(k + 1.0) ** two_h - 2.0 * k**two_h + np.abs(k - 1.0) ** two_h)


def fgn_covariance(n: int, alpha: float) -> NDArray[np.float64]:
    """n x n covariance of fGn with Hurst index H = 1 - alpha/2."""
    return toeplitz(fgn_autocovariance(np.arange(n), 1.0 - alpha / 2.0))


@lru_cache(maxsize=1)
def _fgn_factor(n: int, alpha: float) -> NDArray[np.float64]:
    logger.debug(f"Factoring fGn covariance n={n}, alpha={alpha}")
    factor = cholesky(fgn_covariance(n, alpha), lower=True)
    factor.setflags(write=False)
    return factor


def generate_long_memory_noise(n: int, alpha: float, rng: np.random.Generator) -> NDArray[np.float64]:
    """Stationary Gaussian noise with Var(sum eps_i) = n^(2 - alpha).

    Raises:
        ValueError: If alpha is outside (0, 1) or n exceeds 10^4.

    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not 1 <= n <= MAX_LONG_MEMORY_SIZE:
        raise ValueError(f"Long-memory noise supports 1 <= n <= {MAX_LONG_MEMORY_SIZE}, got {n}")
    return _fgn_factor(n, float(alpha)) @ rng.standard_normal(n)


@dataclass(frozen=True)
class MethodSummary:
    """Aggregate of one method over the replications of a scenario."""

    method: Method
    mean_tuning: tuple[float, ...]
    mise: float
    mise_se: float
    replications: int
    skipped_points: int = 0
    failures: int = 0


@dataclass(frozen=True)
class SimulationReport:
    scenario: Scenario
    summaries: dict[Method, MethodSummary]

    def to_frame(self) -> pd.DataFrame:
        """One row per method, columns in a fixed order."""
        rows = [
            {
                "scenario": self.scenario.label,
                "n": self.scenario.n,
                "method": summary.method.value,
                "mean_tuning": "/".join(f"{v:.4g}" for v in summary.mean_tuning),
                "mise": summary.mise,
                "mise_se": summary.mise_se,
                "replications": summary.replications,
                "skipped_points": summary.skipped_points,
                "failures": summary.failures,
            }
            for summary in self.summaries.values()
        ]
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)


REPORT_COLUMNS = [
    "scenario",
    "n",
    "method",
    "mean_tuning",
    "mise",
    "mise_se",
    "replications",
    "skipped_points",
    "failures",
]


@dataclass(frozen=True)
class _MethodOutcome:
    tuning: tuple[float, ...]
    error: float
    skipped: int


def _run_method(
    method: Method,
    simulated: SimulatedData,
    density: ExponentialDensity,
    truncation_grid: Sequence[Sequence[int]] | None,
    bandwidth_grid: Sequence[float] | None,
) -> _MethodOutcome:
    data = simulated.data
    if method is Method.GL:
        selection = select_truncation_loocv(data, density, truncation_grid)
        fitted = fit(data, selection.plan, density)
        error = float(np.mean((fitted.fitted_values - simulated.noiseless) ** 2))
        return _MethodOutcome(tuning=tuple(float(m) for m in selection.plan.levels), error=error, skipped=0)
    kernel_method = KernelMethod.LOCAL_LINEAR if method is Method.LL else KernelMethod.NADARAYA_WATSON
    bandwidth = select_bandwidth_cv(data, kernel_method, bandwidth_grid)
    predictions, skipped = kernel_predict(data, kernel_method, bandwidth.config, data.t, data.x)
    usable = np.isfinite(predictions)
    if not np.any(usable):
        raise InsufficientLocalDataError(t=float(np.min(data.t)), available=0, required=data.r)
    error = float(np.mean((predictions[usable] - simulated.noiseless[usable]) ** 2))
    return _MethodOutcome(tuning=(bandwidth.bandwidth,), error=error, skipped=skipped)


def _run_replication(
    scenario: Scenario,
    methods: tuple[Method, ...],
    seed: np.random.SeedSequence,
    index: int,
    truncation_grid: Sequence[Sequence[int]] | None,
    bandwidth_grid: Sequence[float] | None,
) -> dict[Method, _MethodOutcome | str]:
    simulated = generate_dataset(scenario, np.random.default_rng(seed))
    outcomes: dict[Method, _MethodOutcome | str] = {}
    for method in methods:
        try:
            outcomes[method] = _run_method(method, simulated, scenario.density, truncation_grid, bandwidth_grid)
        except _RECOVERABLE as e:
            logger.warning(f"Replication {index}: {method.value} failed: {e}")
            outcomes[method] = str(e)
    if all(isinstance(o, str) for o in outcomes.values()):
        raise ReplicationFailedError(index, {m.value: str(o) for m, o in outcomes.items()})
    return outcomes


def _mean_and_se(values: Sequence[float]) -> tuple[float, float]:
    k = len(values)
    mean = math.fsum(values) / k
    if k < 2:
        return mean, 0.0
    variance = math.fsum((v - mean) ** 2 for v in values) / (k - 1)
    return mean, math.sqrt(variance / k)


def run_mise_experiment(
    scenario: Scenario,
    methods: Sequence[Method | str] = (Method.GL, Method.LL, Method.NW),
    truncation_grid: Sequence[Sequence[int]] | None = None,
    bandwidth_grid: Sequence[float] | None = None,
    n_jobs: int = 1,
) -> SimulationReport:
    """Replicated Monte Carlo estimate of the mean squared error against the noiseless response.

    Replication i draws from the i-th child of SeedSequence(scenario.seed), so
    the report does not depend on `n_jobs`.

    Raises:
        ReplicationFailedError: If every method fails on some replication.

    """
    chosen = tuple(Method(m) for m in methods)
    if not chosen:
        raise ValueError("At least one method is required")
    children = np.random.SeedSequence(scenario.seed).spawn(scenario.replications)
    logger.info(
        f"Scenario {scenario.label} n={scenario.n}: {scenario.replications} replications of "
        f"{', '.join(m.value for m in chosen)}"
    )
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(_run_replication)(scenario, chosen, child, i, truncation_grid, bandwidth_grid)
        for i, child in enumerate(children)
    )
    summaries: dict[Method, MethodSummary] = {}
    for method in chosen:
        succeeded = [o[method] for o in outcomes if isinstance(o[method], _MethodOutcome)]
        failures = scenario.replications - len(succeeded)
        if not succeeded:
            logger.warning(f"{method.value} failed on every replication of {scenario.label}")
            summaries[method] = MethodSummary(method, (), math.nan, math.nan, 0, 0, failures)
            continue
        mise, se = _mean_and_se([o.error for o in succeeded])  # type: ignore[union-attr]
        tuning = np.mean([o.tuning for o in succeeded], axis=0)  # type: ignore[union-attr]
        skipped = sum(o.skipped for o in succeeded)  # type: ignore[union-attr]
        summaries[method] = MethodSummary(
            method=method,
            mean_tuning=tuple(float(v) for v in tuning),
            mise=mise,
            mise_se=se,
            replications=len(succeeded),
            skipped_points=skipped,
            failures=failures,
        )
        stat_logger.info(f"{scenario.label} n={scenario.n} {method.value}: MISE {mise:.6g} (se {se:.3g})")
    return SimulationReport(scenario=scenario, summaries=summaries)


@dataclass(frozen=True)
class RateFit:
    """Least-squares line log MISE = intercept + slope log n."""

    slope: float
    stderr: float
    intercept: float


def rate_regression(points: Sequence[tuple[float, float]]) -> RateFit:
    """Slope of log MISE against log n.

    Raises:
        ValueError: With fewer than three points, repeated n, or a non-positive MISE.

    """
    if len(points) < 3:
        raise ValueError(f"Rate regression needs at least 3 points, got {len(points)}")
    sizes = np.array([p[0] for p in points], dtype=np.float64)
    errors = np.array([p[1] for p in points], dtype=np.float64)
    if np.unique(sizes).size != sizes.size:
        raise ValueError("Rate regression needs distinct sample sizes")
    if np.any(~(sizes > 0)) or np.any(~(errors > 0)):
        raise ValueError("Sample sizes and MISE values must be positive")
    result = linregress(np.log(sizes), np.log(errors))
    return RateFit(slope=float(result.slope), stderr=float(result.stderr), intercept=float(result.intercept))


@dataclass(frozen=True)
class RateConfig:
    """Synthetic rate study with one coefficient theta_k = (k v 1)^-(gamma + 1) and t ~ Exp(1).

    Under Exp(1) the weighted basis is L_k(t), so the integrated squared
    error equals the squared coefficient error. The truncation rule uses the
    boundary smoothness gamma + 1/2 of the sequence.
    """

    gamma: float = 1.0
    sizes: tuple[int, ...] = (250, 500, 1000, 2000, 4000)
    replications: int = 50
    sigma: float = 1.0
    noise: NoiseSpec = NoiseSpec()
    radius: float = 1.0
    terms: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        if len(self.sizes) < 3:
            raise ValueError("A rate study needs at least three sample sizes")
        if self.replications < 1 or self.terms < 1:
            raise ValueError("replications and terms must be >= 1")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")

    @property
    def effective_smoothness(self) -> float:
        return self.gamma + 0.5

    @property
    def theta(self) -> NDArray[np.float64]:
        k = np.maximum(np.arange(self.terms), 1).astype(np.float64)
        return k ** (-(self.gamma + 1.0))

    @property
    def expected_slope(self) -> float:
        g = self.effective_smoothness
        return -2.0 * g * self.noise.alpha / (2.0 * g + 1.0)

    @property
    def smoothness(self) -> SmoothnessSpec:
        return SmoothnessSpec(gamma=(self.effective_smoothness,), radius=(self.radius,), alpha=self.noise.alpha)

    def truncation(self, n: int) -> int:
        return min(theoretical_truncation(self.smoothness, n).levels[0], self.terms)


@dataclass(frozen=True)
class RateReport:
    config: RateConfig
    levels: dict[int, int]
    mise: dict[int, float]
    mise_se: dict[int, float]
    oracle: dict[int, float]
    minimax: dict[int, float]
    fit: RateFit
    oracle_fit: RateFit

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "n": list(self.mise),
                "M": [self.levels[n] for n in self.mise],
                "mise": list(self.mise.values()),
                "mise_se": list(self.mise_se.values()),
                "oracle": [self.oracle[n] for n in self.mise],
                "minimax": [self.minimax[n] for n in self.mise],
            }
        )


def analytic_rate_oracle(config: RateConfig) -> dict[int, float]:
    """Bias/variance bookkeeping: sum_{k >= M} theta_k^2 + sigma^2 M / n^alpha at each n."""
    theta = config.theta
    oracle = {}
    for n in config.sizes:
        m = config.truncation(n)
        bias = float(np.sum(theta[m:] ** 2))
        oracle[n] = bias + config.sigma**2 * m / float(n) ** config.noise.alpha
    return oracle


_EXP1 = ExponentialDensity(rate=1.0)


def _rate_replication(config: RateConfig, n: int, m: int, seed: np.random.SeedSequence) -> float:
    rng = np.random.default_rng(seed)
    t = np.maximum(rng.exponential(1.0, size=n), np.finfo(np.float64).tiny)
    theta = config.theta
    signal = weighted_basis_matrix(t, config.terms, _EXP1) @ theta
    y = signal + config.sigma * config.noise.draw(n, rng)
    fitted = fit(Dataset(t=t, x=np.ones(n), y=y), TruncationPlan(levels=(m,)), _EXP1)
    estimate = fitted.theta_hat.block(1)
    return float(np.sum((estimate - theta[:m]) ** 2) + np.sum(theta[m:] ** 2))


def run_rate_experiment(config: RateConfig, n_jobs: int = 1) -> RateReport:
    """MISE at each sample size with M from the theoretical rule, plus the log-log slope."""
    norm = sobolev_norm(config.theta, config.gamma)
    stat_logger.info(f"Rate study coefficients: Laguerre-Sobolev norm {norm:.6g} at gamma={config.gamma}")
    seeds = np.random.SeedSequence(config.seed).spawn(len(config.sizes))
    levels: dict[int, int] = {}
    mise: dict[int, float] = {}
    mise_se: dict[int, float] = {}
    for n, size_seed in zip(config.sizes, seeds, strict=True):
        m = config.truncation(n)
        errors = Parallel(n_jobs=n_jobs)(
            delayed(_rate_replication)(config, n, m, child) for child in size_seed.spawn(config.replications)
        )
        levels[n] = m
        mise[n], mise_se[n] = _mean_and_se(errors)
        logger.info(f"Rate study n={n}, M={m}: MISE {mise[n]:.6g}")
    oracle = analytic_rate_oracle(config)
    report = RateReport(
        config=config,
        levels=levels,
        mise=mise,
        mise_se=mise_se,
        oracle=oracle,
        minimax={n: minimax_risk_bound(config.smoothness, n, config.sigma) for n in config.sizes},
        fit=rate_regression(list(mise.items())),
        oracle_fit=rate_regression(list(oracle.items())),
    )
    stat_logger.info(
        f"Rate slope {report.fit.slope:.3f} (se {report.fit.stderr:.3f}), oracle {report.oracle_fit.slope:.3f}, "
        f"minimax {config.expected_slope:.3f}"
    )
    return report


@dataclass(frozen=True)
class CalibrationConfig:
    """Inference check with coefficients inside the truncated span.

    `theta` holds one coefficient block per covariate; covariates are
    independent normals given by (mean, sd).
    """

    n: int = 1200
    replications: int = 500
    level: float = 0.05
    points: tuple[float, ...] = (0.1, 0.25, 0.5)
    coefficient: int = 1
    theta: tuple[tuple[float, ...], ...] = ((1.0, 0.5, 0.25), (-0.5, 0.3))
    covariates: tuple[tuple[float, float], ...] = ((1.0, 1.0), (0.0, 1.0))
    t_mean: float = 0.25
    sigma: float = 1.0
    gamma: GammaEstimator = GammaEstimator.JOINT
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.theta) != len(self.covariates):
            raise DimensionError("theta and covariates need one entry per coefficient")
        if not 1 <= self.coefficient <= len(self.theta):
            raise ValueError(f"coefficient must lie in 1..{len(self.theta)}, got {self.coefficient}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    @property
    def plan(self) -> TruncationPlan:
        return TruncationPlan(levels=tuple(len(block) for block in self.theta))

    @property
    def density(self) -> ExponentialDensity:
        return ExponentialDensity(rate=1.0 / self.t_mean)

    def true_coefficient(self, t: ArrayLike) -> NDArray[np.float64]:
        block = np.asarray(self.theta[self.coefficient - 1], dtype=np.float64)
        grid = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return weighted_basis_matrix(grid, block.size, self.density) @ block

    def draw(self, rng: np.random.Generator, n: int | None = None) -> Dataset:
        size = self.n if n is None else n
        t = np.maximum(rng.exponential(self.t_mean, size=size), np.finfo(np.float64).tiny)
        x = np.column_stack([rng.normal(mean, sd, size=size) for mean, sd in self.covariates])
        basis = weighted_basis_matrix(t, max(self.plan.levels), self.density)
        signal = sum(
            x[:, l] * (basis[:, : len(block)] @ np.asarray(block)) for l, block in enumerate(self.theta)
        )
        return Dataset(t=t, x=x, y=signal + self.sigma * rng.standard_normal(size))


@dataclass(frozen=True)
class CalibrationReport:
    """Coverage and size per point, plus a KS check of T_n against N(0, 1)."""

    coverage: dict[float, float]
    rejection_rate: dict[float, float]
    ks_pvalue: dict[float, float]
    replications: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": list(self.coverage),
                "coverage": list(self.coverage.values()),
                "rejection_rate": [self.rejection_rate[t] for t in self.coverage],
                "ks_pvalue": [self.ks_pvalue[t] for t in self.coverage],
            }
        )


def _fit_for_inference(config: CalibrationConfig, data: Dataset) -> tuple[FittedVCM, VarianceModel]:
    fitted = fit(data, config.plan, config.density)
    model = VarianceModel.from_fit(fitted, config.coefficient, gamma=config.gamma)
    return fitted, model


def _calibration_replication(
    config: CalibrationConfig, seed: np.random.SeedSequence
) -> tuple[list[bool], list[float]]:
    fitted, model = _fit_for_inference(config, config.draw(np.random.default_rng(seed)))
    truth = config.true_coefficient(config.points)
    covered = []
    statistics = []
    for t0, beta0 in zip(config.points, truth, strict=True):
        lo, hi = confidence_interval(fitted, config.coefficient, t0, config.level, model)
        covered.append(bool(lo <= beta0 <= hi))
        statistics.append(pointwise_test(fitted, config.coefficient, t0, float(beta0), config.level, model).statistic)
    return covered, statistics


def run_calibration_experiment(config: CalibrationConfig, n_jobs: int = 1) -> CalibrationReport:
    """Empirical coverage, test size and distribution of T_n under H0."""
    children = np.random.SeedSequence(config.seed).spawn(config.replications)
    results = Parallel(n_jobs=n_jobs)(delayed(_calibration_replication)(config, child) for child in children)
    covered = np.array([r[0] for r in results])
    statistics = np.array([r[1] for r in results])
    z = critical_value(config.level)
    report = CalibrationReport(
        coverage={t: float(np.mean(covered[:, j])) for j, t in enumerate(config.points)},
        rejection_rate={t: float(np.mean(np.abs(statistics[:, j]) > z)) for j, t in enumerate(config.points)},
        ks_pvalue={t: float(kstest(statistics[:, j], "norm").pvalue) for j, t in enumerate(config.points)},
        replications=config.replications,
    )
    stat_logger.info(f"Calibration coverage {report.coverage}, size {report.rejection_rate}")
    return report


@dataclass(frozen=True)
class PowerConfig:
    """Local alternatives beta_l(t0) = beta0 + delta / sqrt(n) with delta a multiple of sigma_l(t0)."""

    calibration: CalibrationConfig = CalibrationConfig(replications=1000)
    t0: float = 0.25
    ratios: tuple[float, ...] = (1.0, 2.0, 3.0)
    population_size: int = 100_000

    def __post_init__(self) -> None:
        if not self.t0 > 0:
            raise ValueError(f"t0 must be positive, got {self.t0!r}")
        if not self.ratios:
            raise ValueError("At least one alternative is required")


@dataclass(frozen=True)
class PowerReport:
    sigma: float
    analytic: dict[float, float]
    empirical: dict[float, float]
    replications: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "ratio": list(self.analytic),
                "analytic": list(self.analytic.values()),
                "empirical": [self.empirical[c] for c in self.analytic],
            }
        )


def population_sigma(config: PowerConfig) -> float:
    """sigma_l(t0) with Gamma estimated from one large seeded sample and the true noise variance."""
    cal = config.calibration
    # Child number R, past the R replication seeds.
    rng = np.random.default_rng(np.random.SeedSequence(cal.seed).spawn(cal.replications + 1)[-1])
    fitted = fit(cal.draw(rng, config.population_size), cal.plan, cal.density)
    model = VarianceModel.from_fit(fitted, cal.coefficient, pi_alpha=cal.sigma**2, gamma=cal.gamma)
    return math.sqrt(asymptotic_variance(fitted, cal.coefficient, config.t0, model))


def _power_replication(config: PowerConfig, sigma: float, seed: np.random.SeedSequence) -> list[bool]:
    cal = config.calibration
    fitted, model = _fit_for_inference(cal, cal.draw(np.random.default_rng(seed)))
    truth = float(cal.true_coefficient(config.t0)[0])
    decisions = []
    for ratio in config.ratios:
        null_value = truth - ratio * sigma / math.sqrt(cal.n)
        decisions.append(pointwise_test(fitted, cal.coefficient, config.t0, null_value, cal.level, model).reject)
    return decisions


def run_power_experiment(config: PowerConfig, n_jobs: int = 1) -> PowerReport:
    """Empirical rejection rate under local alternatives next to the analytic power."""
    cal = config.calibration
    sigma = population_sigma(config)
    children = np.random.SeedSequence(cal.seed).spawn(cal.replications)
    results = np.array(
        Parallel(n_jobs=n_jobs)(delayed(_power_replication)(config, sigma, child) for child in children)
    )
    report = PowerReport(
        sigma=sigma,
        analytic={c: asymptotic_power(c * sigma, sigma, cal.level) for c in config.ratios},
        empirical={c: float(np.mean(results[:, j])) for j, c in enumerate(config.ratios)},
        replications=cal.replications,
    )
    stat_logger.info(f"Power at t0={config.t0}: analytic {report.analytic}, empirical {report.empirical}")
    return report


def curve_comparison(
    fitted: FittedVCM, truths: Sequence[Callable[[NDArray[np.float64]], ArrayLike]], t_grid: ArrayLike
) -> pd.DataFrame:
    """Long table (l, t, true, estimate) of actual against estimated coefficient curves."""
    if len(truths) != fitted.r:
        raise DimensionError(f"Expected {fitted.r} true curves, got {len(truths)}")
    grid = np.atleast_1d(np.asarray(t_grid, dtype=np.float64))
    frames = [
        pd.DataFrame(
            {
                "l": l,
                "t": grid,
                "true": np.asarray(truth(grid), dtype=np.float64),
                "estimate": np.asarray(evaluate_coefficient(fitted, l, grid), dtype=np.float64),
            }
        )
        for l, truth in enumerate(truths, start=1)
    ]
    return pd.concat(frames, ignore_index=True)


__all__ = [
    "CalibrationConfig",
    "CalibrationReport",
    "CoefficientCurve",
    "Method",
    "MethodSummary",
    "NoiseKind",
    "NoiseSpec",
    "PowerConfig",
    "PowerReport",
    "RateConfig",
    "RateFit",
    "RateReport",
    "Scenario",
    "SimulatedData",
    "SimulationReport",
    "analytic_rate_oracle",
    "curve_comparison",
    "fgn_autocovariance",
    "fgn_covariance",
    "generate_dataset",
    "generate_long_memory_noise",
    "population_sigma",
    "rate_regression",
    "run_calibration_experiment",
    "run_mise_experiment",
    "run_power_experiment",
    "run_rate_experiment",
    "test_function",
]
