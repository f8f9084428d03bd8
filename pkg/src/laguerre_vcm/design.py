"""Observed data, the block design matrix and the least-squares solve.

Layout of Theta: block l (1-based) holds the M_l Laguerre coefficients of
beta_l and occupies flat indices [sum_{d<l} M_d, sum_{d<=l} M_d).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from logging import getLogger

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.linalg import qr
from scipy.linalg import solve_triangular
from scipy.linalg import svdvals

from laguerre_vcm.basis import weighted_basis_matrix
from laguerre_vcm.density import DesignDensity
from laguerre_vcm.errors import DimensionError
from laguerre_vcm.errors import IndexRangeError
from laguerre_vcm.errors import RankDeficiencyError

logger = getLogger(__name__)

RANK_TOLERANCE = 1e-10


def _frozen(values: ArrayLike, ndim: int) -> NDArray[np.float64]:
    arr = np.array(values, dtype=np.float64, ndmin=ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed triples (t_i, x_i, y_i).

    Attributes:
        t: Effect-modifier values, shape (n,), strictly positive.
        x: Covariates, shape (n, r).
        y: Responses, shape (n,).

    """

    t: NDArray[np.float64]
    x: NDArray[np.float64]
    y: NDArray[np.float64]

    def __post_init__(self) -> None:
        t = _frozen(self.t, 1).ravel()
        x = np.array(self.x, dtype=np.float64)
        x = _frozen(x[:, None] if x.ndim == 1 else x, 2)
        y = _frozen(self.y, 1).ravel()
        if t.size < 1:
            raise DimensionError("Dataset needs at least one observation")
        if x.shape[0] != t.size or y.size != t.size:
            raise DimensionError(f"Inconsistent sizes: t has {t.size}, x has {x.shape[0]} rows, y has {y.size}")
        if np.any(~(t > 0)):
            raise ValueError("Effect-modifier values t must be strictly positive")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("Covariates and responses must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.t.size)

    @property
    def r(self) -> int:
        return int(self.x.shape[1])

    def subset(self, indices: ArrayLike) -> Dataset:
        """Rows selected by `indices` (repeats allowed, as in resampling)."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(t=self.t[idx], x=self.x[idx], y=self.y[idx])

    def with_response(self, y: ArrayLike) -> Dataset:
        return Dataset(t=self.t, x=self.x, y=np.asarray(y, dtype=np.float64))


@dataclass(frozen=True)
class TruncationPlan:
    """Per-coefficient truncation levels (M_1, ..., M_r)."""

    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        levels = tuple(int(m) for m in self.levels)
        if not levels:
            raise ValueError("Truncation plan needs at least one level")
        if any(m < 1 for m in levels):
            raise ValueError(f"Every truncation level must be >= 1, got {levels}")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def uniform(cls, level: int, r: int) -> TruncationPlan:
        return cls(levels=(level,) * r)

    @property
    def r(self) -> int:
        return len(self.levels)

    @property
    def total(self) -> int:
        return sum(self.levels)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for m in self.levels:
            out.append(out[-1] + m)
        return tuple(out)

    def level(self, l: int) -> int:
        self._check_coefficient(l)
        return self.levels[l - 1]

    def block(self, l: int) -> slice:
        """Flat index range of coefficient l (1-based)."""
        self._check_coefficient(l)
        return slice(self.offsets[l - 1], self.offsets[l])

    def _check_coefficient(self, l: int) -> None:
        if not 1 <= l <= self.r:
            raise IndexRangeError(f"Coefficient index {l} outside 1..{self.r}")

    def __str__(self) -> str:
        return "/".join(str(m) for m in self.levels)


def theta_index(l: int, k: int, plan: TruncationPlan) -> int:
    """Flat position of theta_{lk}: sum_{d<l} M_d + k."""
    block = plan.block(l)
    if not 0 <= k < plan.levels[l - 1]:
        raise IndexRangeError(f"Degree {k} outside 0..{plan.levels[l - 1] - 1} for coefficient {l}")
    return block.start + k


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Stacked Laguerre coefficients Theta laid out by `plan`."""

    theta: NDArray[np.float64]
    plan: TruncationPlan

    def __post_init__(self) -> None:
        theta = _frozen(self.theta, 1).ravel()
        if theta.size != self.plan.total:
            raise DimensionError(f"Theta has {theta.size} entries, plan expects {self.plan.total}")
        object.__setattr__(self, "theta", theta)

    def block(self, l: int) -> NDArray[np.float64]:
        return self.theta[self.plan.block(l)]


def assemble_design(
    data: Dataset, plan: TruncationPlan, density: DesignDensity, nu: float = 0.0
) -> NDArray[np.float64]:
    """Build Phi with entry (i, theta_index(l, k)) = phi~_k(t_i) x_{li}.

    Raises:
        DimensionError: If the plan does not match r or n < sum M_l.
        DensityFloorError: If h(t_i) < m0 for some observation.

    """
    if plan.r != data.r:
        raise DimensionError(f"Plan has {plan.r} levels but data has r={data.r} covariates")
    if data.n < plan.total:
        raise DimensionError(f"n={data.n} is smaller than the {plan.total} columns of plan {plan}")
    basis = weighted_basis_matrix(data.t, max(plan.levels), density, nu)
    return design_from_basis(basis, data.x, plan)


def design_from_basis(basis: NDArray[np.float64], x: NDArray[np.float64], plan: TruncationPlan) -> NDArray[np.float64]:
    """Assemble Phi from precomputed weighted basis rows (n, >= max M_l) and covariates (n, r)."""
    phi = np.empty((x.shape[0], plan.total), dtype=np.float64)
    for l, m in enumerate(plan.levels, start=1):
        phi[:, plan.block(l)] = basis[:, :m] * x[:, l - 1 : l]
    return phi


def _qr_factor(phi: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    n, p = phi.shape
    if n < p:
        raise DimensionError(f"Least squares needs n >= p, got n={n}, p={p}")
    q, r = qr(phi, mode="economic")
    s = svdvals(r)
    rank = int(np.sum(s > RANK_TOLERANCE * s[0])) if s.size and s[0] > 0 else 0
    if rank < p:
        raise RankDeficiencyError(rank, p)
    return q, r


def least_squares_with_leverage(
    phi: ArrayLike, y: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Solve min ||y - Phi theta||^2 via QR and return (theta, hat-matrix diagonal)."""
    phi_arr = np.asarray(phi, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.float64).ravel()
    if y_arr.size != phi_arr.shape[0]:
        raise DimensionError(f"y has {y_arr.size} entries but Phi has {phi_arr.shape[0]} rows")
    q, r = _qr_factor(phi_arr)
    theta = solve_triangular(r, q.T @ y_arr)
    leverage = np.einsum("ij,ij->i", q, q)
    return theta, leverage


def solve_least_squares(phi: ArrayLike, y: ArrayLike, plan: TruncationPlan | None = None) -> CoefficientVector:
    """Theta minimizing ||y - Phi Theta||^2.

    Uses an orthogonal decomposition rather than the explicit normal-equation
    inverse. Without a plan the result is a single block of width p.

    Raises:
        RankDeficiencyError: If the smallest singular value of Phi is below
            1e-10 times the largest.
        DimensionError: If Phi has fewer rows than columns.

    """
    theta, _ = least_squares_with_leverage(phi, y)
    return CoefficientVector(theta=theta, plan=plan or TruncationPlan(levels=(theta.size,)))


def hat_diagonal(phi: ArrayLike) -> NDArray[np.float64]:
    """Leverages H_ii of the projection onto the column space of Phi."""
    q, _ = _qr_factor(np.asarray(phi, dtype=np.float64))
    return np.einsum("ij,ij->i", q, q)


def gram_matrix(phi: ArrayLike) -> NDArray[np.float64]:
    """Normalized Gram matrix Phi^T Phi / n."""
    arr = np.asarray(phi, dtype=np.float64)
    return (arr.T @ arr) / arr.shape[0]


__all__ = [
    "RANK_TOLERANCE",
    "CoefficientVector",
    "Dataset",
    "TruncationPlan",
    "assemble_design",
    "design_from_basis",
    "gram_matrix",
    "hat_diagonal",
    "least_squares_with_leverage",
    "solve_least_squares",
    "theta_index",
]
