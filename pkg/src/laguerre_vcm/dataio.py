"""CSV ingestion, fitted-model files and atomic output writes."""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass
from logging import getLogger
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from laguerre_vcm import __version__
from laguerre_vcm.density import density_from_dict
from laguerre_vcm.design import CoefficientVector
from laguerre_vcm.design import Dataset
from laguerre_vcm.design import TruncationPlan
from laguerre_vcm.design import assemble_design
from laguerre_vcm.errors import SchemaError
from laguerre_vcm.estimator import FittedVCM

logger = getLogger(__name__)

MODEL_FORMAT = "laguerre-vcm/model"
CURVE_COLUMNS = ["l", "t", "estimate"]
BAND_COLUMNS = ["l", "t", "lower", "estimate", "upper"]
INFER_COLUMNS = ["l", "t0", "beta0", "estimate", "lower", "upper", "statistic", "p_value", "reject"]

_COVARIATE = re.compile(r"^x(\d+)$")


@dataclass(frozen=True, eq=False)
class LoadedData:
    """A dataset with the covariate column names it came from."""

    data: Dataset
    covariates: tuple[str, ...]


def _data_lines(path: Path) -> list[int]:
    """1-based file line numbers of the header and data rows, skipping comments and blank lines."""
    with path.open(encoding="utf-8") as handle:
        return [i for i, line in enumerate(handle, start=1) if line.strip() and not line.lstrip().startswith("#")]


def read_dataset_csv(path: str | Path, t_scale: float = 1.0, intercept: bool = False) -> LoadedData:
    """Read a CSV with header ``t, x1..xr, y``.

    `t_scale` divides the effect modifier (``age/100`` is ``t_scale=100``).
    `intercept` prepends a constant covariate ``x0 = 1``.

    Raises:
        SchemaError: For a missing column, a malformed row or a non-numeric
            or non-positive value, with the file line number when known.

    """
    file = Path(path)
    if not file.is_file():
        raise SchemaError(f"Input file {file} not found")
    try:
        frame = pd.read_csv(file, comment="#", skipinitialspace=True, dtype=str, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise SchemaError(f"Cannot parse {file}: {e}") from e
    frame.columns = [str(c).strip() for c in frame.columns]
    for required in ("t", "y"):
        if required not in frame.columns:
            raise SchemaError(f"Missing column {required!r}", line=1, column=required)
    numbered = sorted((int(m.group(1)), c) for c in frame.columns if (m := _COVARIATE.match(c)))
    if not numbered:
        raise SchemaError("Missing covariate column 'x1'", line=1, column="x1")
    indices = [i for i, _ in numbered]
    expected = list(range(indices[0], indices[0] + len(indices)))
    if indices[0] not in (0, 1) or indices != expected:
        missing = next(f"x{i}" for i in range(1, indices[-1] + 2) if f"x{i}" not in frame.columns)
        raise SchemaError(f"Missing column {missing!r}", line=1, column=missing)
    covariates = [c for _, c in numbered]

    lines = _data_lines(file)
    values = {}
    for column in ["t", *covariates, "y"]:
        converted = pd.to_numeric(frame[column], errors="coerce")
        bad = converted.isna() | ~np.isfinite(converted.to_numpy(dtype=np.float64))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raw = frame[column].iloc[row]
            line = lines[row + 1] if row + 1 < len(lines) else None
            raise SchemaError(f"Non-numeric or missing value {raw!r} in column {column!r}", line=line, column=column)
        values[column] = converted.to_numpy(dtype=np.float64)

    t = values["t"] / t_scale
    if np.any(t <= 0):
        row = int(np.flatnonzero(t <= 0)[0])
        line = lines[row + 1] if row + 1 < len(lines) else None
        raise SchemaError("Effect modifier t must be strictly positive", line=line, column="t")
    x = np.column_stack([values[c] for c in covariates])
    if intercept and "x0" not in covariates:
        x = np.column_stack([np.ones(x.shape[0]), x])
        covariates = ["x0", *covariates]
    logger.info(f"Read {x.shape[0]} rows with covariates {', '.join(covariates)} from {file}")
    return LoadedData(data=Dataset(t=t, x=x, y=values["y"]), covariates=tuple(covariates))


def _atomic_write(path: Path, write: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            write(handle)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    """Write a CSV atomically (temporary file, then rename)."""
    target = Path(path)
    _atomic_write(target, lambda handle: frame.to_csv(handle, index=False))
    logger.debug(f"Wrote {len(frame)} rows to {target}")
    return target


def write_text(text: str, path: str | Path) -> Path:
    target = Path(path)
    _atomic_write(target, lambda handle: handle.write(text))
    return target


def read_csv(path: str | Path) -> pd.DataFrame:
    """Read a CSV emitted by this package."""
    return pd.read_csv(Path(path), float_precision="round_trip")


def curves_frame(fitted: FittedVCM, t_grid: ArrayLike) -> pd.DataFrame:
    """Long table (l, t, estimate) of every coefficient on the grid."""
    grid = np.atleast_1d(np.asarray(t_grid, dtype=np.float64))
    curves = fitted.coefficient_curves(grid)
    return pd.DataFrame(
        {
            "l": np.repeat(np.arange(1, fitted.r + 1), grid.size),
            "t": np.tile(grid, fitted.r),
            "estimate": curves.ravel(),
        },
        columns=CURVE_COLUMNS,
    )


def model_to_dict(fitted: FittedVCM, covariates: tuple[str, ...] = ()) -> dict[str, Any]:
    return {
        "format": MODEL_FORMAT,
        "version": __version__,
        "plan": list(fitted.plan.levels),
        "theta": fitted.theta_hat.theta.tolist(),
        "nu": fitted.nu,
        "density": fitted.density.to_dict(),
        "covariates": list(covariates),
        "data": {
            "t": fitted.data.t.tolist(),
            "x": fitted.data.x.tolist(),
            "y": fitted.data.y.tolist(),
        },
    }


def model_from_dict(payload: dict[str, Any]) -> tuple[FittedVCM, tuple[str, ...]]:
    """Rebuild a fit (and its covariate names) from `model_to_dict` output.

    Raises:
        SchemaError: If the payload is not a model file or is incomplete.

    """
    if payload.get("format") != MODEL_FORMAT:
        raise SchemaError(f"Not a fitted-model file (format {payload.get('format')!r})")
    try:
        plan = TruncationPlan(levels=tuple(payload["plan"]))
        theta = CoefficientVector(theta=np.asarray(payload["theta"], dtype=np.float64), plan=plan)
        data = Dataset(t=payload["data"]["t"], x=payload["data"]["x"], y=payload["data"]["y"])
        density = density_from_dict(payload["density"])
        nu = float(payload["nu"])
    except (KeyError, TypeError) as e:
        raise SchemaError(f"Incomplete fitted-model file: {e}") from e
    residuals = data.y - assemble_design(data, plan, density, nu) @ theta.theta
    fitted = FittedVCM(theta_hat=theta, density=density, nu=nu, data=data, residuals=residuals)
    return fitted, tuple(payload.get("covariates", ()))


def save_model(fitted: FittedVCM, path: str | Path, covariates: tuple[str, ...] = ()) -> Path:
    return write_text(json.dumps(model_to_dict(fitted, covariates), indent=1), path)


def load_model(path: str | Path) -> tuple[FittedVCM, tuple[str, ...]]:
    file = Path(path)
    try:
        payload = json.loads(file.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise SchemaError(f"Model file {file} not found") from e
    except json.JSONDecodeError as e:
        raise SchemaError(f"Model file {file} is not valid JSON: {e.msg}", line=e.lineno) from e
    return model_from_dict(payload)


__all__ = [
    "BAND_COLUMNS",
    "CURVE_COLUMNS",
    "INFER_COLUMNS",
    "LoadedData",
    "curves_frame",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "read_csv",
    "read_dataset_csv",
    "save_model",
    "write_csv",
    "write_text",
]
