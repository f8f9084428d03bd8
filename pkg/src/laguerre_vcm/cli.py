"""Command-line interface: ``laguerre-vcm <command> ...``.

Commands:
    simulate  Monte Carlo MISE study from a scenario file
    fit       fit a Laguerre model to a CSV file
    infer     confidence intervals and point-wise tests on a fitted model
    bands     pairs-bootstrap bands
    compare   Laguerre vs local linear vs linear regression

Exit codes: 0 success, 2 configuration or input error (including a missing optional
dependency for --svg), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable
from collections.abc import Sequence
from logging import getLogger
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.linalg import LinAlgError
from rich.logging import RichHandler

from laguerre_vcm import __version__
from laguerre_vcm.comparison import compare_models
from laguerre_vcm.config import BandsConfig
from laguerre_vcm.config import CommandConfig
from laguerre_vcm.config import CompareConfig
from laguerre_vcm.config import FitConfig
from laguerre_vcm.config import InferConfig
from laguerre_vcm.config import ScenarioConfig
from laguerre_vcm.config import load_config
from laguerre_vcm.dataio import BAND_COLUMNS
from laguerre_vcm.dataio import INFER_COLUMNS
from laguerre_vcm.dataio import LoadedData
from laguerre_vcm.dataio import curves_frame
from laguerre_vcm.dataio import load_model
from laguerre_vcm.dataio import read_dataset_csv
from laguerre_vcm.dataio import save_model
from laguerre_vcm.dataio import write_csv
from laguerre_vcm.density import DesignDensity
from laguerre_vcm.density import parse_density
from laguerre_vcm.design import TruncationPlan
from laguerre_vcm.errors import ConfigError
from laguerre_vcm.errors import DensityFloorError
from laguerre_vcm.errors import DimensionError
from laguerre_vcm.errors import EmptyGridError
from laguerre_vcm.errors import IndexRangeError
from laguerre_vcm.errors import InsufficientLocalDataError
from laguerre_vcm.errors import MissingDependencyError
from laguerre_vcm.errors import NoViableCandidateError
from laguerre_vcm.errors import ReplicationFailedError
from laguerre_vcm.errors import SchemaError
from laguerre_vcm.estimator import evaluate_coefficient
from laguerre_vcm.estimator import fit
from laguerre_vcm.estimator import select_truncation_loocv
from laguerre_vcm.inference import VarianceModel
from laguerre_vcm.inference import bootstrap_bands
from laguerre_vcm.inference import confidence_interval
from laguerre_vcm.inference import pointwise_test
from laguerre_vcm.simulation import run_mise_experiment

logger = getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (
    LinAlgError,
    ArithmeticError,
    DensityFloorError,
    DimensionError,
    EmptyGridError,
    IndexRangeError,
    InsufficientLocalDataError,
    NoViableCandidateError,
    ReplicationFailedError,
)


def setup_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=verbose)],
        force=True,
    )


def _density(text: str, loaded: LoadedData) -> DesignDensity:
    try:
        return parse_density(text, sample=loaded.data.t)
    except ValueError as e:
        raise ConfigError("DENSITY", str(e)) from e


def _plan(cfg: FitConfig, loaded: LoadedData, density: DesignDensity) -> TruncationPlan:
    data = loaded.data
    if cfg.plan is not None:
        if len(cfg.plan) != data.r:
            raise ConfigError("PLAN", f"{len(cfg.plan)} levels given but the data has {data.r} covariates")
        return TruncationPlan(levels=cfg.plan)
    selection = select_truncation_loocv(
        data, density, cfg.truncation_grid(data.n, data.r), nu=cfg.nu, n_jobs=cfg.n_jobs, strategy=cfg.strategy
    )
    return selection.plan


def _read(args: argparse.Namespace, cfg: FitConfig) -> LoadedData:
    if args.input is None:
        raise ConfigError("INPUT", "a data CSV is required")
    return read_dataset_csv(args.input, t_scale=cfg.t_scale, intercept=cfg.intercept)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(ScenarioConfig, args.input)
    frames = []
    for scenario in cfg.scenarios():
        report = run_mise_experiment(
            scenario,
            cfg.methods,
            truncation_grid=cfg.truncation_grid(scenario.r),
            bandwidth_grid=cfg.bandwidths,
            n_jobs=cfg.n_jobs,
        )
        frames.append(report.to_frame())
    write_csv(pd.concat(frames, ignore_index=True), args.output)
    logger.info(f"Simulation report written to {args.output}")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    cfg = load_config(FitConfig, args.config)
    loaded = _read(args, cfg)
    density = _density(cfg.density, loaded)
    plan = _plan(cfg, loaded, density)
    fitted = fit(loaded.data, plan, density, cfg.nu)
    logger.info(f"Fitted plan {plan} on {fitted.n} rows, residual variance {fitted.residual_variance:.6g}")
    save_model(fitted, args.output, loaded.covariates)
    curves = curves_frame(fitted, cfg.curve_grid(loaded.data.t))
    write_csv(curves, args.curves)
    if args.svg:
        from laguerre_vcm.plotting import plot_curves_svg

        plot_curves_svg(curves, args.svg)
    return EXIT_OK


def cmd_infer(args: argparse.Namespace) -> int:
    cfg = load_config(InferConfig, args.config)
    if args.input is None:
        raise ConfigError("INPUT", "a fitted-model file is required")
    fitted, _ = load_model(args.input)
    models: dict[int, VarianceModel] = {}
    rows = []
    for l, t0, beta0 in cfg.points:
        if not 1 <= l <= fitted.r:
            raise ConfigError("POINTS", f"coefficient index {l} outside 1..{fitted.r}")
        if not (t0 > 0 and bool(fitted.density.in_support(t0))):
            raise ConfigError("POINTS", f"t0={t0} lies outside the support of the design density")
        if l not in models:
            models[l] = VarianceModel.from_fit(fitted, l, alpha=cfg.alpha, pi_alpha=cfg.pi_alpha, gamma=cfg.gamma)
        lower, upper = confidence_interval(fitted, l, t0, cfg.level, models[l])
        result = pointwise_test(fitted, l, t0, beta0, cfg.level, models[l])
        rows.append(
            {
                "l": l,
                "t0": t0,
                "beta0": beta0,
                "estimate": float(evaluate_coefficient(fitted, l, t0)),
                "lower": lower,
                "upper": upper,
                "statistic": result.statistic,
                "p_value": result.p_value,
                "reject": result.reject,
            }
        )
    write_csv(pd.DataFrame(rows, columns=INFER_COLUMNS), args.output)
    return EXIT_OK


def cmd_bands(args: argparse.Namespace) -> int:
    cfg = load_config(BandsConfig, args.config)
    loaded = _read(args, cfg)
    density = _density(cfg.density, loaded)
    plan = _plan(cfg, loaded, density)
    bands = bootstrap_bands(
        loaded.data,
        plan,
        density,
        cfg.curve_grid(loaded.data.t),
        nu=cfg.nu,
        replicates=cfg.replicates,
        level=cfg.level,
        seed=cfg.seed,
        n_jobs=cfg.n_jobs,
    )
    r, size = bands.estimate.shape
    frame = pd.DataFrame(
        {
            "l": np.repeat(np.arange(1, r + 1), size),
            "t": np.tile(bands.t_grid, r),
            "lower": bands.lower.ravel(),
            "estimate": bands.estimate.ravel(),
            "upper": bands.upper.ravel(),
        },
        columns=BAND_COLUMNS,
    )
    write_csv(frame, args.output)
    if args.svg:
        from laguerre_vcm.plotting import plot_curves_svg

        plot_curves_svg(frame[["l", "t", "estimate"]], args.svg, bands=frame)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = load_config(CompareConfig, args.config)
    loaded = _read(args, cfg)
    density = _density(cfg.density, loaded)
    data = loaded.data
    grid = [range(1, m + 1) for m in cfg.plan] if cfg.plan is not None else cfg.truncation_grid(data.n, data.r)
    report = compare_models(
        data,
        density,
        nu=cfg.nu,
        split=cfg.split,
        train_fraction=cfg.train_fraction,
        seed=cfg.seed,
        truncation_grid=grid,
        bandwidth_grid=cfg.bandwidths,
        n_jobs=cfg.n_jobs,
    )
    write_csv(report.table, args.output)
    write_csv(report.residuals, args.residuals)
    write_csv(report.qq, args.qq)
    if args.svg:
        from laguerre_vcm.plotting import plot_residuals_svg

        plot_residuals_svg(report.residuals, report.qq, args.svg)
    return EXIT_OK


_COMMANDS: dict[str, tuple[Callable[[argparse.Namespace], int], type[CommandConfig], str]] = {
    "simulate": (cmd_simulate, ScenarioConfig, "Monte Carlo MISE study from a scenario file"),
    "fit": (cmd_fit, FitConfig, "fit a Laguerre varying-coefficient model"),
    "infer": (cmd_infer, InferConfig, "confidence intervals and point-wise tests"),
    "bands": (cmd_bands, BandsConfig, "pairs-bootstrap confidence bands"),
    "compare": (cmd_compare, CompareConfig, "compare with local linear and linear regression"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laguerre-vcm",
        description="Laguerre-series estimation and inference for varying-coefficient models.",
        epilog="Config files are KEY=value lines; VCM_<KEY> environment variables override them.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, (_, _, help_text) in _COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--print-config", action="store_true", help="print every key with its default and exit")
        if name == "simulate":
            cmd.add_argument("input", nargs="?", type=Path, help="scenario file")
            cmd.add_argument("-o", "--output", type=Path, default=Path("simulation.csv"), help="report CSV")
            continue
        label = "fitted-model file" if name == "infer" else "data CSV (t, x1..xr, y)"
        cmd.add_argument("input", nargs="?", type=Path, help=label)
        cmd.add_argument("-c", "--config", type=Path, default=None, help="config file")
        outputs = {"fit": "model.json", "infer": "inference.csv", "bands": "bands.csv", "compare": "comparison.csv"}
        cmd.add_argument("-o", "--output", type=Path, default=Path(outputs[name]), help="main output file")
        if name == "fit":
            cmd.add_argument("--curves", type=Path, default=Path("curves.csv"), help="coefficient-curve CSV")
        if name == "compare":
            cmd.add_argument("--residuals", type=Path, default=Path("residuals.csv"), help="residual CSV")
            cmd.add_argument("--qq", type=Path, default=Path("qq.csv"), help="normal Q-Q pairs CSV")
        if name in {"fit", "bands", "compare"}:
            cmd.add_argument("--svg", type=Path, default=None, help="also render an SVG figure")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    handler, config_type, _ = _COMMANDS[args.command]
    if args.print_config:
        print("\n".join(config_type.describe()))
        return EXIT_OK
    try:
        return handler(args)
    except (ConfigError, SchemaError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_NUMERICAL
    except (ValueError, MissingDependencyError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
