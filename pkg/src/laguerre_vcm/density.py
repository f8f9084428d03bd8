"""Design densities h(t) of the effect-modifying covariate.

The weighted Laguerre basis divides by sqrt(h(t)), so every density carries a
floor m0 and refuses to evaluate the basis where h(t) < m0.
"""

from __future__ import annotations

from abc import ABC
from abc import abstractmethod
from dataclasses import dataclass
from dataclasses import field
from enum import Enum
from logging import getLogger
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.stats import gaussian_kde

from laguerre_vcm.errors import DensityFloorError

logger = getLogger(__name__)

DEFAULT_FLOOR = 1e-12
DEFAULT_EMPIRICAL_FLOOR = 1e-3


class DensityFamily(Enum):
    """Supported design density families."""

    EXPONENTIAL = "exponential"
    UNIFORM = "uniform"
    EMPIRICAL = "empirical"


class DesignDensity(ABC):
    """Evaluator contract for a design density h(t), t > 0."""

    floor: float

    @property
    @abstractmethod
    def family(self) -> DensityFamily: ...

    @abstractmethod
    def pdf(self, t: ArrayLike) -> NDArray[np.float64]:
        """Evaluate h at every point of `t`."""

    @abstractmethod
    def to_dict(self) -> dict[str, Any]:
        """Serializable description, inverse of `density_from_dict`."""

    def in_support(self, t: ArrayLike) -> NDArray[np.bool_]:
        """Mask of points where h(t) is at least the floor."""
        return self.pdf(t) >= self.floor

    def checked_pdf(self, t: ArrayLike) -> NDArray[np.float64]:
        """Evaluate h and raise DensityFloorError at the first point below the floor."""
        arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        values = self.pdf(arr)
        bad = np.flatnonzero(~(values >= self.floor))
        if bad.size:
            i = int(bad[0])
            raise DensityFloorError(float(arr[i]), float(values[i]), self.floor)
        return values

    def log_pdf(self, t: ArrayLike) -> NDArray[np.float64]:
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(t))


@dataclass(frozen=True)
class ExponentialDensity(DesignDensity):
    """h(t) = rate * exp(-rate * t) on (0, inf)."""

    rate: float
    floor: float = DEFAULT_FLOOR

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ValueError(f"Exponential rate must be positive, got {self.rate!r}")
        if not self.floor > 0:
            raise ValueError(f"Density floor must be positive, got {self.floor!r}")

    @property
    def family(self) -> DensityFamily:
        return DensityFamily.EXPONENTIAL

    def pdf(self, t: ArrayLike) -> NDArray[np.float64]:
        arr = np.asarray(t, dtype=np.float64)
        return np.where(arr >= 0, self.rate * np.exp(-self.rate * np.maximum(arr, 0.0)), 0.0)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family.value, "rate": self.rate, "floor": self.floor}


@dataclass(frozen=True)
class UniformDensity(DesignDensity):
    """h(t) = 1 / (b - a) on [a, b], zero elsewhere."""

    a: float
    b: float
    floor: float = DEFAULT_FLOOR

    def __post_init__(self) -> None:
        if not (0 <= self.a < self.b):
            raise ValueError(f"Uniform density needs 0 <= a < b, got a={self.a!r}, b={self.b!r}")
        if not self.floor > 0:
            raise ValueError(f"Density floor must be positive, got {self.floor!r}")

    @property
    def family(self) -> DensityFamily:
        return DensityFamily.UNIFORM

    def pdf(self, t: ArrayLike) -> NDArray[np.float64]:
        arr = np.asarray(t, dtype=np.float64)
        inside = (arr >= self.a) & (arr <= self.b)
        return np.where(inside, 1.0 / (self.b - self.a), 0.0)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family.value, "a": self.a, "b": self.b, "floor": self.floor}


@dataclass(frozen=True)
class EmpiricalDensity(DesignDensity):
    """Gaussian kernel density estimate of observed t values, clipped below at the floor.

    Used for real data where h is unknown. Clipping means the floor check never
    fires; the estimate is max(kde(t), m0).
    """

    sample: tuple[float, ...]
    floor: float = DEFAULT_EMPIRICAL_FLOOR
    _kde: gaussian_kde = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.sample) < 2:
            raise ValueError("Empirical density needs at least two sample points")
        if any(not v > 0 for v in self.sample):
            raise ValueError("Empirical density sample must be strictly positive")
        if not self.floor > 0:
            raise ValueError(f"Density floor must be positive, got {self.floor!r}")
        object.__setattr__(self, "_kde", gaussian_kde(np.asarray(self.sample, dtype=np.float64)))
        logger.debug(f"Empirical density from {len(self.sample)} points, bandwidth factor {self._kde.factor:.4f}")

    @classmethod
    def from_sample(cls, sample: ArrayLike, floor: float = DEFAULT_EMPIRICAL_FLOOR) -> EmpiricalDensity:
        return cls(sample=tuple(float(v) for v in np.ravel(sample)), floor=floor)

    @property
    def family(self) -> DensityFamily:
        return DensityFamily.EMPIRICAL

    def pdf(self, t: ArrayLike) -> NDArray[np.float64]:
        arr = np.asarray(t, dtype=np.float64)
        values = self._kde(np.ravel(arr)).reshape(arr.shape)
        return np.maximum(values, self.floor)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family.value, "sample": list(self.sample), "floor": self.floor}


def density_from_dict(payload: dict[str, Any]) -> DesignDensity:
    """Rebuild a density from `DesignDensity.to_dict` output."""
    family = DensityFamily(payload["family"])
    if family is DensityFamily.EXPONENTIAL:
        return ExponentialDensity(rate=float(payload["rate"]), floor=float(payload.get("floor", DEFAULT_FLOOR)))
    if family is DensityFamily.UNIFORM:
        return UniformDensity(
            a=float(payload["a"]), b=float(payload["b"]), floor=float(payload.get("floor", DEFAULT_FLOOR))
        )
    return EmpiricalDensity.from_sample(payload["sample"], floor=float(payload.get("floor", DEFAULT_EMPIRICAL_FLOOR)))


def parse_density(text: str, sample: ArrayLike | None = None) -> DesignDensity:
    """Parse a density directive such as ``exponential:4``, ``uniform:0:1`` or ``empirical:0.001``.

    The empirical family needs the observed `sample` of t values.
    """
    name, *params = [part.strip() for part in text.split(":")]
    try:
        family = DensityFamily(name.lower())
    except ValueError:
        choices = ", ".join(f.value for f in DensityFamily)
        raise ValueError(f"Unknown density family {name!r}; expected one of {choices}") from None
    try:
        values = [float(p) for p in params]
    except ValueError:
        raise ValueError(f"Density parameters must be numeric, got {text!r}") from None

    if family is DensityFamily.EXPONENTIAL:
        if len(values) not in (1, 2):
            raise ValueError(f"exponential density takes rate[:floor], got {text!r}")
        return ExponentialDensity(*values)
    if family is DensityFamily.UNIFORM:
        if len(values) not in (2, 3):
            raise ValueError(f"uniform density takes a:b[:floor], got {text!r}")
        return UniformDensity(*values)
    if sample is None:
        raise ValueError("empirical density requires the observed t sample")
    if len(values) > 1:
        raise ValueError(f"empirical density takes [floor], got {text!r}")
    return EmpiricalDensity.from_sample(sample, *values)


__all__ = [
    "DEFAULT_EMPIRICAL_FLOOR",
    "DEFAULT_FLOOR",
    "DensityFamily",
    "DesignDensity",
    "EmpiricalDensity",
    "ExponentialDensity",
    "UniformDensity",
    "density_from_dict",
    "parse_density",
]
