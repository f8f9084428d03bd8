"""Command configuration files.

Config and scenario files are dotenv-style ``KEY=value`` text. Keys are case
insensitive; environment variables named ``VCM_<KEY>`` override file values.
Every command has a typed dataclass whose fields carry a parser and a short
description in their metadata, so the same table drives validation and
``--print-config``.
"""

from __future__ import annotations

import itertools
import os
from collections.abc import Callable
from collections.abc import Mapping
from dataclasses import MISSING
from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from enum import Enum
from logging import getLogger
from pathlib import Path
from typing import Any
from typing import TypeVar

import numpy as np
from dotenv import dotenv_values
from numpy.typing import NDArray

from laguerre_vcm.errors import ConfigError
from laguerre_vcm.estimator import SearchStrategy
from laguerre_vcm.estimator import default_truncation_grid
from laguerre_vcm.inference import DEFAULT_BOOTSTRAP_REPLICATES
from laguerre_vcm.inference import MIN_BOOTSTRAP_REPLICATES
from laguerre_vcm.inference import GammaEstimator
from laguerre_vcm.simulation import CoefficientCurve
from laguerre_vcm.simulation import Method
from laguerre_vcm.simulation import NoiseKind
from laguerre_vcm.simulation import NoiseSpec
from laguerre_vcm.simulation import Scenario

logger = getLogger(__name__)

ENV_PREFIX = "VCM_"
AUTO = "auto"

T = TypeVar("T")


def _setting(default: Any, parse: Callable[[str], Any], doc: str, show: Callable[[Any], str] | None = None) -> Any:
    return field(default=default, metadata={"parse": parse, "doc": doc, "show": show or _format})


def _items(text: str, sep: str = ",") -> list[str]:
    return [item.strip() for item in text.split(sep) if item.strip()]


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in _items(text))


def _float_tuple(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in _items(text))


def _optional(parse: Callable[[str], T]) -> Callable[[str], T | None]:
    def parse_optional(text: str) -> T | None:
        return None if text.strip().lower() in {"", AUTO, "none"} else parse(text)

    return parse_optional


def _pairs(text: str) -> tuple[tuple[float, float], ...]:
    """"200:20,45:5" -> ((200, 20), (45, 5))."""
    pairs = []
    for item in _items(text):
        mean, sd = item.split(":")
        pairs.append((float(mean), float(sd)))
    return tuple(pairs)


def _coefficient_sets(text: str) -> tuple[tuple[CoefficientCurve, ...], ...]:
    """"beta1,beta2|beta1,beta3" -> one coefficient tuple per scenario."""
    return tuple(tuple(CoefficientCurve(name) for name in _items(group)) for group in _items(text, "|"))


def _noise(text: str) -> NoiseSpec:
    """"iid_gaussian" or "long_memory:<alpha>"."""
    kind, _, alpha = text.strip().partition(":")
    if NoiseKind(kind) is NoiseKind.IID_GAUSSIAN:
        return NoiseSpec()
    return NoiseSpec(kind=NoiseKind.LONG_MEMORY, alpha=float(alpha))


def _grid_spec(text: str) -> tuple[float, float, int]:
    """"start:stop:count" for an evenly spaced grid."""
    start, stop, count = text.split(":")
    return float(start), float(stop), int(count)


def _points(text: str) -> tuple[tuple[int, float, float], ...]:
    """"l:t0:beta0" triples separated by commas."""
    triples = []
    for item in _items(text):
        l, t0, beta0 = item.split(":")
        triples.append((int(l), float(t0), float(beta0)))
    return tuple(triples)


def _format(value: Any) -> str:
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, NoiseSpec):
        return value.kind.value if value.kind is NoiseKind.IID_GAUSSIAN else f"long_memory:{value.alpha}"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    return str(value)


def _format_colon(value: Any) -> str:
    """Nested tuples as "a:b,c:d"; a flat tuple as "a:b:c"."""
    if value is None:
        return AUTO
    if value and isinstance(value[0], tuple):
        return ",".join(":".join(_format(v) for v in item) for item in value)
    return ":".join(_format(v) for v in value)


def _format_sets(value: Any) -> str:
    return "|".join(_format(group) for group in value)


C = TypeVar("C", bound="CommandConfig")


@dataclass(frozen=True)
class CommandConfig:
    """Shared parsing for all command configs."""

    @classmethod
    def from_mapping(cls: type[C], mapping: Mapping[str, str | None]) -> C:
        """Parse and validate a key/value mapping.

        Raises:
            ConfigError: Naming the first unknown, malformed or invalid key.

        """
        known = {f.name: f for f in fields(cls)}
        values: dict[str, Any] = {}
        for key, raw in mapping.items():
            name = key.strip().lower()
            if name not in known:
                raise ConfigError(key.upper(), "unknown configuration key")
            if raw is None:
                raise ConfigError(key.upper(), "missing value")
            try:
                values[name] = known[name].metadata["parse"](raw)
            except (ValueError, TypeError, KeyError) as e:
                raise ConfigError(key.upper(), f"invalid value {raw!r} ({e})") from e
        try:
            return cls(**values)
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(cls.__name__, str(e)) from e

    @classmethod
    def describe(cls) -> list[str]:
        """``KEY=default  # description`` for every key."""
        lines = []
        for f in fields(cls):
            default = f.default if f.default is not MISSING else None
            lines.append(f"{f.name.upper()}={f.metadata['show'](default)}  # {f.metadata['doc']}")
        return lines

    def dump(self) -> list[str]:
        return [f"{f.name.upper()}={f.metadata['show'](getattr(self, f.name))}" for f in fields(self)]


def load_config(cls: type[C], path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> C:
    """Read a dotenv-style file (optional) and apply ``VCM_*`` overrides.

    Raises:
        ConfigError: If the file is missing or a key is invalid.

    """
    mapping: dict[str, str | None] = {}
    if path is not None:
        file = Path(path)
        if not file.is_file():
            raise ConfigError(str(path), "configuration file not found")
        mapping.update({k.lower(): v for k, v in dotenv_values(file).items()})
    env = os.environ if environ is None else environ
    for f in fields(cls):
        override = env.get(f"{ENV_PREFIX}{f.name.upper()}")
        if override is not None:
            logger.debug(f"{f.name.upper()} overridden from environment")
            mapping[f.name] = override
    return cls.from_mapping(mapping)


def _check(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(key, message)


@dataclass(frozen=True)
class ScenarioConfig(CommandConfig):
    """Monte Carlo MISE study: every coefficient set crossed with every sample size."""

    coefficients: tuple[tuple[CoefficientCurve, ...], ...] = _setting(
        ((CoefficientCurve.BETA1, CoefficientCurve.BETA2),),
        _coefficient_sets,
        "coefficient sets, '|' between scenarios",
        _format_sets,
    )
    sizes: tuple[int, ...] = _setting((400,), _int_tuple, "sample sizes n")
    methods: tuple[Method, ...] = _setting(
        (Method.GL, Method.LL, Method.NW), lambda s: tuple(Method(m) for m in _items(s)), "methods among GL,LL,NW"
    )
    sigma: float = _setting(1e-4, float, "noise scale")
    noise: NoiseSpec = _setting(NoiseSpec(), _noise, "iid_gaussian or long_memory:<alpha>")
    replications: int = _setting(200, int, "replications per scenario")
    seed: int = _setting(0, int, "base seed")
    covariates: tuple[tuple[float, float], ...] = _setting(
        ((200.0, 20.0), (45.0, 5.0)), _pairs, "covariate mean:sd pairs", _format_colon
    )
    t_mean: float = _setting(0.25, float, "mean of the exponential effect modifier")
    max_level: int | None = _setting(None, _optional(int), "largest truncation level searched (auto: min(12, n/4r))")
    bandwidths: tuple[float, ...] | None = _setting(None, _optional(_float_tuple), "bandwidth grid (auto: data based)")
    n_jobs: int = _setting(1, int, "parallel workers")

    def __post_init__(self) -> None:
        _check(bool(self.coefficients), "COEFFICIENTS", "at least one coefficient set is required")
        _check(bool(self.sizes), "SIZES", "at least one sample size is required")
        _check(all(n >= 50 for n in self.sizes), "SIZES", "every n must be >= 50")
        _check(bool(self.methods), "METHODS", "at least one method is required")
        _check(self.sigma >= 0, "SIGMA", "must be >= 0")
        _check(self.replications >= 1, "REPLICATIONS", "must be >= 1")
        _check(self.t_mean > 0, "T_MEAN", "must be positive")
        _check(self.max_level is None or self.max_level >= 1, "MAX_LEVEL", "must be >= 1")
        _check(self.bandwidths is None or all(h > 0 for h in self.bandwidths), "BANDWIDTHS", "must be positive")
        _check(
            all(len(group) == len(self.covariates) for group in self.coefficients),
            "COVARIATES",
            "one mean:sd pair per coefficient is required",
        )
        _check(all(sd >= 0 for _, sd in self.covariates), "COVARIATES", "standard deviations must be >= 0")

    def scenarios(self) -> list[Scenario]:
        return [
            Scenario(
                coefficients=group,
                n=n,
                sigma=self.sigma,
                noise=self.noise,
                replications=self.replications,
                seed=self.seed,
                covariates=self.covariates,
                t_mean=self.t_mean,
            )
            for group, n in itertools.product(self.coefficients, self.sizes)
        ]

    def truncation_grid(self, r: int) -> list[range] | None:
        if self.max_level is None:
            return None
        return [range(1, self.max_level + 1) for _ in range(r)]


@dataclass(frozen=True)
class FitConfig(CommandConfig):
    """Fitting a Laguerre model to a CSV file."""

    density: str = _setting("empirical", str, "exponential:<rate>, uniform:<a>:<b> or empirical[:<floor>]")
    nu: float = _setting(0.0, float, "generalized Laguerre order")
    plan: tuple[int, ...] | None = _setting(None, _optional(_int_tuple), "truncation levels M_1..M_r (auto: LOOCV)")
    max_level: int | None = _setting(None, _optional(int), "largest truncation level searched (auto: min(12, n/4r))")
    strategy: SearchStrategy = _setting(SearchStrategy.AUTO, SearchStrategy, "auto, cartesian or coordinate")
    grid: tuple[float, float, int] | None = _setting(
        None, _optional(_grid_spec), "curve grid start:stop:count (auto: data range, 100 points)", _format_colon
    )
    t_scale: float = _setting(1.0, float, "divide t by this value on ingestion")
    intercept: bool = _setting(False, _bool, "prepend a constant covariate x0 = 1")
    n_jobs: int = _setting(1, int, "parallel workers")

    def __post_init__(self) -> None:
        _check(self.nu >= 0, "NU", "must be >= 0")
        _check(self.plan is None or all(m >= 1 for m in self.plan), "PLAN", "levels must be >= 1")
        _check(self.max_level is None or self.max_level >= 1, "MAX_LEVEL", "must be >= 1")
        _check(self.t_scale > 0, "T_SCALE", "must be positive")
        _check(self.grid is None or (0 < self.grid[0] < self.grid[1] and self.grid[2] >= 2), "GRID", "bad grid")

    def truncation_grid(self, n: int, r: int) -> list[range]:
        if self.max_level is None:
            return default_truncation_grid(n, r)
        return [range(1, self.max_level + 1) for _ in range(r)]

    def curve_grid(self, t: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.grid is None:
            return np.linspace(float(np.min(t)), float(np.max(t)), 100)
        start, stop, count = self.grid
        return np.linspace(start, stop, count)


@dataclass(frozen=True)
class InferConfig(CommandConfig):
    """Confidence intervals and point-wise tests on a fitted model."""

    points: tuple[tuple[int, float, float], ...] = _setting((), _points, "l:t0:beta0 triples", _format_colon)
    level: float = _setting(0.05, float, "significance level")
    alpha: float = _setting(1.0, float, "long-memory parameter in (0, 1]")
    pi_alpha: float | None = _setting(None, _optional(float), "long-memory constant (auto: residual variance)")
    gamma: GammaEstimator = _setting(GammaEstimator.MARGINAL, GammaEstimator, "marginal, joint or diagonal")

    def __post_init__(self) -> None:
        _check(bool(self.points), "POINTS", "at least one l:t0:beta0 triple is required")
        _check(0 < self.level < 1, "LEVEL", "must lie in (0, 1)")
        _check(0 < self.alpha <= 1, "ALPHA", "must lie in (0, 1]")
        _check(self.pi_alpha is None or self.pi_alpha > 0, "PI_ALPHA", "must be positive")
        _check(self.alpha == 1.0 or self.pi_alpha is not None, "PI_ALPHA", "required when ALPHA < 1")


@dataclass(frozen=True)
class BandsConfig(FitConfig):
    """Pairs-bootstrap bands around a fitted model."""

    replicates: int = _setting(DEFAULT_BOOTSTRAP_REPLICATES, int, "bootstrap replicates B")
    level: float = _setting(0.05, float, "significance level")
    seed: int = _setting(0, int, "bootstrap seed")

    def __post_init__(self) -> None:
        super().__post_init__()
        _check(
            self.replicates >= MIN_BOOTSTRAP_REPLICATES, "REPLICATES", f"must be >= {MIN_BOOTSTRAP_REPLICATES}"
        )
        _check(0 < self.level < 1, "LEVEL", "must lie in (0, 1)")


@dataclass(frozen=True)
class CompareConfig(FitConfig):
    """Model comparison against the local linear fit and linear regression."""

    split: bool = _setting(True, _bool, "also report an 80/20 train/test split")
    train_fraction: float = _setting(0.8, float, "training share of the split")
    bandwidths: tuple[float, ...] | None = _setting(None, _optional(_float_tuple), "bandwidth grid (auto: data based)")
    seed: int = _setting(0, int, "seed of the train/test split")

    def __post_init__(self) -> None:
        super().__post_init__()
        _check(0 < self.train_fraction < 1, "TRAIN_FRACTION", "must lie in (0, 1)")
        _check(self.bandwidths is None or all(h > 0 for h in self.bandwidths), "BANDWIDTHS", "must be positive")


__all__ = [
    "BandsConfig",
    "CommandConfig",
    "CompareConfig",
    "FitConfig",
    "InferConfig",
    "ScenarioConfig",
    "load_config",
]
