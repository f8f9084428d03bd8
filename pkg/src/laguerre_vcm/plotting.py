"""Minimal SVG rendering of coefficient curves, bands and residual diagnostics.

Needs the optional ``plot`` extra (matplotlib). Figures are built with the
object API, so no pyplot state or display backend is involved.
"""

from __future__ import annotations

import io
from logging import getLogger
from pathlib import Path
from typing import TYPE_CHECKING

import pandas as pd

from laguerre_vcm.dataio import write_text
from laguerre_vcm.errors import MissingDependencyError

if TYPE_CHECKING:
    from matplotlib.figure import Figure

logger = getLogger(__name__)

PANEL_SIZE = (4.0, 3.0)


def _figure(panels: int) -> Figure:
    try:
        from matplotlib.figure import Figure
    except ImportError as e:
        raise MissingDependencyError("SVG output needs matplotlib; install laguerre-vcm[plot]") from e
    return Figure(figsize=(PANEL_SIZE[0] * panels, PANEL_SIZE[1]), layout="constrained")


def _save(figure: Figure, path: str | Path) -> Path:
    buffer = io.StringIO()
    figure.savefig(buffer, format="svg")
    target = write_text(buffer.getvalue(), path)
    logger.info(f"Wrote {target}")
    return target


def plot_curves_svg(
    curves: pd.DataFrame,
    path: str | Path,
    bands: pd.DataFrame | None = None,
    truth: pd.DataFrame | None = None,
) -> Path:
    """One panel per coefficient from a (l, t, estimate) table.

    `bands` adds a shaded (l, t, lower, upper) region; `truth` adds the
    (l, t, true) curves of a simulation.
    """
    coefficients = sorted(curves["l"].unique())
    figure = _figure(len(coefficients))
    axes = figure.subplots(1, len(coefficients), squeeze=False)[0]
    for ax, l in zip(axes, coefficients, strict=True):
        if bands is not None:
            band = bands[bands["l"] == l]
            ax.fill_between(band["t"], band["lower"], band["upper"], alpha=0.3, label="bootstrap band")
        curve = curves[curves["l"] == l]
        ax.plot(curve["t"], curve["estimate"], label="estimate")
        if truth is not None:
            actual = truth[truth["l"] == l]
            ax.plot(actual["t"], actual["true"], linestyle="--", label="true")
        ax.set_title(f"beta_{l}(t)")
        ax.set_xlabel("t")
    axes[0].legend(fontsize="small")
    return _save(figure, path)


def plot_residuals_svg(residuals: pd.DataFrame, qq: pd.DataFrame, path: str | Path) -> Path:
    """Residual vs t, residual vs fitted and normal Q-Q panels, one colour per model."""
    figure = _figure(3)
    by_t, by_fitted, quantiles = figure.subplots(1, 3)
    for model, group in residuals.groupby("model", sort=False):
        by_t.scatter(group["t"], group["residual"], s=4, label=str(model))
        by_fitted.scatter(group["fitted"], group["residual"], s=4, label=str(model))
    for model, group in qq.groupby("model", sort=False):
        quantiles.plot(group["theoretical"], group["sample"], marker=".", linestyle="none", label=str(model))
    by_t.set_xlabel("t")
    by_fitted.set_xlabel("fitted")
    quantiles.set_xlabel("normal quantile")
    by_t.set_ylabel("residual")
    by_t.legend(fontsize="small")
    return _save(figure, path)


__all__ = ["plot_curves_svg", "plot_residuals_svg"]
