"""Laguerre polynomials, Laguerre functions and the density-weighted basis.

All evaluators run the three-term recurrence. The polynomial values are
rescaled whenever they grow past RESCALE_THRESHOLD and the accumulated scale is
folded back together with the exp(-t/2) factor in log-space, so high degrees
at large t neither overflow nor lose the exponential damping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from logging import getLogger

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.special import gammaln
from scipy.special import xlogy

from laguerre_vcm.density import DesignDensity
from laguerre_vcm.errors import OverflowGuardError

logger = getLogger(__name__)

# log-Gamma stays well inside double precision up to here
MAX_DEGREE = 500
RESCALE_THRESHOLD = 1e150
_LOG_RESCALE = math.log(RESCALE_THRESHOLD)

FloatOrArray = float | NDArray[np.float64]


def _as_nonnegative(t: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(t, dtype=np.float64)
    if np.any(~(arr >= 0)):
        raise ValueError("Laguerre evaluation requires t >= 0")
    return arr


def _unwrap(values: NDArray[np.float64]) -> FloatOrArray:
    return float(values) if values.ndim == 0 else values


def _check_degree(k: int) -> None:
    if k < 0:
        raise ValueError(f"Degree must be nonnegative, got {k}")
    if k > MAX_DEGREE:
        raise OverflowGuardError(f"Degree {k} exceeds the supported maximum {MAX_DEGREE}")


def laguerre_polynomial(k: int, t: ArrayLike) -> FloatOrArray:
    """Evaluate the Laguerre polynomial L_k(t) by the three-term recurrence."""
    _check_degree(k)
    arr = _as_nonnegative(t)
    prev = np.zeros_like(arr)
    cur = np.ones_like(arr)
    for j in range(k):
        prev, cur = cur, ((2 * j + 1 - arr) * cur - j * prev) / (j + 1)
    return _unwrap(cur)


def laguerre_table(t: ArrayLike, max_degree: int, nu: float = 0.0) -> NDArray[np.float64]:
    """Evaluate phi_k^(nu)(t) for every k < max_degree.

    Returns an array of shape ``t.shape + (max_degree,)``. With ``nu == 0`` the
    columns are the orthonormal Laguerre functions exp(-t/2) L_k(t).
    """
    if max_degree < 1:
        raise ValueError(f"max_degree must be >= 1, got {max_degree}")
    _check_degree(max_degree - 1)
    if not nu >= 0:
        raise ValueError(f"Generalized order nu must be >= 0, got {nu!r}")
    arr = _as_nonnegative(t)
    flat = arr.ravel()

    out = np.empty((flat.size, max_degree), dtype=np.float64)
    base = xlogy(nu / 2.0, flat) - flat / 2.0
    log_scale = np.zeros_like(flat)
    prev = np.zeros_like(flat)
    cur = np.ones_like(flat)
    for k in range(max_degree):
        log_norm = 0.5 * (gammaln(k + 1.0) - gammaln(k + nu + 1.0))
        with np.errstate(under="ignore"):
            out[:, k] = cur * np.exp(log_scale + base + log_norm)
        if k + 1 == max_degree:
            break
        prev, cur = cur, ((2 * k + 1 + nu - flat) * cur - (k + nu) * prev) / (k + 1)
        big = np.abs(cur) > RESCALE_THRESHOLD
        if np.any(big):
            cur[big] /= RESCALE_THRESHOLD
            prev[big] /= RESCALE_THRESHOLD
            log_scale[big] += _LOG_RESCALE
    return out.reshape(arr.shape + (max_degree,))


def laguerre_function(k: int, t: ArrayLike) -> FloatOrArray:
    """Orthonormal Laguerre function phi_k(t) = exp(-t/2) L_k(t)."""
    _check_degree(k)
    return _unwrap(laguerre_table(t, k + 1)[..., k])


def generalized_laguerre_function(k: int, nu: float, t: ArrayLike) -> FloatOrArray:
    """Generalized Laguerre function [k!/Gamma(k+nu+1)]^(1/2) L_k^(nu)(t) t^(nu/2) exp(-t/2)."""
    _check_degree(k)
    return _unwrap(laguerre_table(t, k + 1, nu)[..., k])


def weighted_basis_matrix(
    t: ArrayLike, max_degree: int, density: DesignDensity, nu: float = 0.0
) -> NDArray[np.float64]:
    """Rows phi~(t_i) = phi^(nu)(t_i) / sqrt(h(t_i)) for a vector of points.

    Raises:
        DensityFloorError: If h(t_i) < m0 at any point.

    """
    arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    h = density.checked_pdf(arr)
    return laguerre_table(arr, max_degree, nu) / np.sqrt(h)[:, None]


def weighted_basis_vector(t: float, max_degree: int, density: DesignDensity, nu: float = 0.0) -> NDArray[np.float64]:
    """The M-vector (phi~_0(t), ..., phi~_{M-1}(t)) at a single point."""
    return weighted_basis_matrix([t], max_degree, density, nu)[0]


@dataclass(frozen=True)
class BasisSpec:
    """Truncation size and generalized order of a Laguerre basis."""

    max_degree: int
    generalized_order: float = 0.0

    def __post_init__(self) -> None:
        if self.max_degree < 1:
            raise ValueError(f"max_degree must be >= 1, got {self.max_degree}")
        if not self.generalized_order >= 0:
            raise ValueError(f"generalized_order must be >= 0, got {self.generalized_order!r}")

    def evaluate(self, t: ArrayLike, density: DesignDensity) -> NDArray[np.float64]:
        """Weighted basis rows for every point of `t`."""
        return weighted_basis_matrix(t, self.max_degree, density, self.generalized_order)


__all__ = [
    "MAX_DEGREE",
    "BasisSpec",
    "generalized_laguerre_function",
    "laguerre_function",
    "laguerre_polynomial",
    "laguerre_table",
    "weighted_basis_matrix",
    "weighted_basis_vector",
]
