"""Exception types raised by laguerre_vcm.

Each error subclasses the builtin family it belongs to, so callers that only
care about "bad input" or "numerical failure" can keep catching ValueError or
LinAlgError.
"""

from numpy.linalg import LinAlgError


class DensityFloorError(ValueError):
    """The design density falls below its floor m0 at an evaluation point."""

    def __init__(self, t: float, value: float, floor: float) -> None:
        super().__init__(f"Design density h({t:.6g}) = {value:.3e} is below the floor m0 = {floor:.3e}")
        self.t = t
        self.value = value
        self.floor = floor


class DimensionError(ValueError):
    """Array shapes are inconsistent or the system is under-determined."""


class IndexRangeError(IndexError):
    """A coefficient index or basis degree is outside the truncation plan."""


class RankDeficiencyError(LinAlgError):
    """The design matrix is numerically rank deficient."""

    def __init__(self, rank: int, columns: int) -> None:
        super().__init__(
            f"Design matrix has numerical rank {rank} < {columns} columns "
            "(truncation too large for n, or collinear covariates)"
        )
        self.rank = rank
        self.columns = columns


class SingularGammaError(LinAlgError):
    """The estimated Gamma matrix is not numerically positive-definite."""


class ZeroVarianceError(ArithmeticError):
    """A test statistic was requested with zero estimated variance."""


class InsufficientLocalDataError(ValueError):
    """Too few observations carry positive kernel weight at the target point."""

    def __init__(self, t: float, available: int, required: int) -> None:
        super().__init__(f"Only {available} observations with positive weight at t={t:.6g}, need {required}")
        self.t = t
        self.available = available
        self.required = required


class EmptyGridError(ValueError):
    """A tuning grid has no candidates."""


class NoViableCandidateError(RuntimeError):
    """Every candidate of a tuning grid failed to fit."""


class ReplicationFailedError(RuntimeError):
    """Every requested method failed on one Monte Carlo replication."""

    def __init__(self, replication: int, reasons: dict[str, str]) -> None:
        detail = "; ".join(f"{method}: {reason}" for method, reason in reasons.items())
        super().__init__(f"Replication {replication} failed for every method ({detail})")
        self.replication = replication
        self.reasons = reasons


class OverflowGuardError(OverflowError):
    """A basis degree exceeds the range the log-Gamma normalization supports."""


class MissingDependencyError(RuntimeError):
    """An optional dependency needed for the requested output is not installed."""


class ConfigError(ValueError):
    """A configuration or scenario key is missing or invalid."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class SchemaError(ValueError):
    """An input CSV does not match the expected schema."""

    def __init__(self, message: str, line: int | None = None, column: str | None = None) -> None:
        location = f"line {line}: " if line is not None else ""
        super().__init__(f"{location}{message}")
        self.line = line
        self.column = column


__all__ = [
    "ConfigError",
    "DensityFloorError",
    "DimensionError",
    "EmptyGridError",
    "IndexRangeError",
    "InsufficientLocalDataError",
    "MissingDependencyError",
    "NoViableCandidateError",
    "OverflowGuardError",
    "RankDeficiencyError",
    "ReplicationFailedError",
    "SchemaError",
    "SingularGammaError",
    "ZeroVarianceError",
]
