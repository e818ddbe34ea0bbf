"""Command line front end for megpr."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .config import EstimatorConfig, ExperimentSpec, MegprConfig
from .diagnostics.checklist import run_checklist
from .diagnostics.experiments import PRESETS, TrialReport, generate_dataset, preset_specs, run_experiment
from .diagnostics.reports import FORMATS, SUFFIXES, emit_curves_svg, emit_report
from .domain.exceptions import (
    AcceptanceFailure,
    ConfigurationError,
    DegenerateInputError,
    DimensionMismatchError,
    MegprError,
    UnsupportedOrderError,
)
from .domain.optimizer import semi_adam_fit
from .domain.prediction import predict
from .domain.systems import Dataset
from .loaders import load_fit, read_dataset_csv, save_fit, write_anchor_csv, write_curve_csv, write_dataset_csv, write_trace_csv
from .registry import SystemDefinition, default_registry
from .validators import validate_dataset, validate_experiment

logger = logging.getLogger("megpr")
console = Console()

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

CONFIG_ERRORS = (ConfigurationError, UnsupportedOrderError, DimensionMismatchError, DegenerateInputError, KeyError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="megpr", description="Model-embedded GP parameter estimation")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="Estimate parameters of a system from a dataset CSV")
    fit.add_argument("--system", required=True, help="Registered system name")
    fit.add_argument("--data", required=True, help="Dataset CSV (t,y1,...,yD)")
    fit.add_argument("--config", help="Estimator key=value file")
    fit.add_argument("--t-max", type=float, help="Observation horizon (defaults to the system's)")
    fit.add_argument("--out", default="fit.json", help="Fit record JSON")
    fit.add_argument("--trace", help="Optional trace CSV")
    fit.add_argument("--anchors", help="Optional anchor CSV for linearized systems")

    experiment = commands.add_parser("experiment", help="Run repeated-trial experiments")
    source = experiment.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", help="Experiment key=value file")
    source.add_argument("--preset", choices=PRESETS, help="Named reference grid")
    experiment.add_argument("--trials", type=int, help="Override the trial count")
    experiment.add_argument("--workers", type=int, help="Concurrent trial workers")
    experiment.add_argument("--seed", type=int, help="Override the master seed")
    experiment.add_argument("--check", action="store_true", help="Fail when reproduction gates are not met")
    experiment.add_argument("--out-dir", default="reports", help="Directory for report files")
    experiment.add_argument(
        "--format", action="append", choices=FORMATS, help="Report format (repeatable; default csv, json, markdown)"
    )

    generate = commands.add_parser("generate", help="Write a synthetic dataset CSV")
    generate.add_argument("--system", required=True)
    generate.add_argument("--n", type=int, required=True)
    generate.add_argument("--sigma", type=float, required=True)
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--t-max", type=float)
    generate.add_argument("--theta", help="Comma-separated true parameters")
    generate.add_argument("--out", required=True)

    pred = commands.add_parser("predict", help="Posterior curve of a component derivative from a fit record")
    pred.add_argument("--fit", required=True, help="Fit record JSON written by `megpr fit`")
    pred.add_argument("--component", type=int, required=True, help="Component index, starting at 1")
    pred.add_argument("--order", type=int, default=0, help="Derivative order")
    pred.add_argument("--grid", help="start:stop:count (default 0:t_max:200)")
    pred.add_argument("--out", required=True, help="Output .csv or .svg")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    handlers = {
        "fit": run_fit,
        "experiment": run_experiments,
        "generate": run_generate,
        "predict": run_predict,
    }
    try:
        return handlers[args.command](args)
    except AcceptanceFailure as exc:
        console.print(f"[red]{exc}[/red]")
        return EXIT_ACCEPTANCE
    except CONFIG_ERRORS as exc:
        console.print(f"[red]Configuration error:[/red] {exc}")
        return EXIT_CONFIG
    except MegprError as exc:
        console.print(f"[red]Numerical failure:[/red] {exc}")
        return EXIT_NUMERICAL


def run() -> None:
    sys.exit(main())


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, MegprConfig.from_env().log_level, logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _load_dataset(path: str, definition: SystemDefinition, t_max: float | None) -> Dataset:
    dataset = read_dataset_csv(path, t_max=t_max)
    if t_max is None and dataset.times.max() <= definition.t_max:
        dataset = Dataset(dataset.times, dataset.observations, definition.t_max)
    return dataset


def run_fit(args: argparse.Namespace) -> int:
    definition = default_registry().get(args.system)
    dataset = _load_dataset(args.data, definition, args.t_max)
    config = EstimatorConfig.from_file(args.config) if args.config else MegprConfig.from_env().estimator
    model = definition.build_model(dataset, mode=config.fixed_points)
    problems = validate_dataset(model, dataset)
    if problems:
        raise ConfigurationError("Dataset does not fit the model:\n" + "\n".join(f"- {p}" for p in problems))

    result = semi_adam_fit(model, dataset, config)
    table = Table(title=f"{definition.name} estimate")
    table.add_column("Parameter")
    table.add_column("Estimate", justify="right")
    for name, value in zip(result.param_names, result.theta_hat):
        table.add_row(name, f"{value:.5f}")
    table.add_row("beta_amplitude", f"{result.hyper_hat.amplitude:.5f}")
    table.add_row("beta_length", f"{result.hyper_hat.length_scale:.5f}")
    for index, sigma in enumerate(result.hyper_hat.obs_noise):
        table.add_row(f"sigma_y{model.observed_components[index] + 1}", f"{sigma:.5f}")
    console.print(table)
    console.print(
        f"{result.diagnostics.iterations} iterations, stopped by {result.diagnostics.reason}, "
        f"final jitter {result.diagnostics.final_jitter:.1e}"
    )

    save_fit(args.out, system=definition.name, dataset=dataset, result=result, fixed_points=model.fixed_points)
    console.print(f"Fit record written to {args.out}")
    if args.trace:
        write_trace_csv(result.trace, args.trace, result.param_names)
    if args.anchors and model.fixed_points is not None:
        write_anchor_csv(model.fixed_points, args.anchors)
    return EXIT_OK


def _experiment_specs(args: argparse.Namespace) -> list[ExperimentSpec]:
    workers = args.workers if args.workers is not None else MegprConfig.from_env().workers
    if args.preset:
        return preset_specs(
            args.preset,
            trials=args.trials if args.trials is not None else 100,
            seed=args.seed if args.seed is not None else 0,
            workers=workers,
        )
    spec = ExperimentSpec.from_file(args.spec)
    if args.trials is not None:
        spec.trials = args.trials
    if args.seed is not None:
        spec.seed = args.seed
    if args.workers is not None or spec.workers == 1:
        spec.workers = workers
    return [spec]


def run_experiments(args: argparse.Namespace) -> int:
    registry = default_registry()
    specs = _experiment_specs(args)
    for spec in specs:
        problems = validate_experiment(spec, registry)
        if problems:
            raise ConfigurationError("Invalid experiment:\n" + "\n".join(f"- {p}" for p in problems))

    reports: list[TrialReport] = []
    for spec in specs:
        reports.extend(run_experiment(spec))
    _print_reports(reports)

    out_dir = Path(args.out_dir)
    stem = args.preset or Path(args.spec).stem
    formats = args.format or ["csv", "json", "markdown"]
    for fmt in formats:
        for path in emit_report(reports, fmt, out_dir / f"{stem}{SUFFIXES[fmt]}"):
            console.print(f"Wrote {path}")

    if args.check:
        issues = run_checklist(reports)
        for issue in issues:
            colour = "red" if issue.severity == "error" else "yellow"
            console.print(f"[{colour}][{issue.severity.upper()}][/{colour}] {issue.message}")
        errors = [issue for issue in issues if issue.severity == "error"]
        if errors:
            raise AcceptanceFailure(f"{len(errors)} reproduction gate(s) failed")
        console.print("All reproduction gates passed")
    return EXIT_OK


def _print_reports(reports: Sequence[TrialReport]) -> None:
    table = Table(title="Parameter estimates")
    for column in ("System", "n", "sigma", "sigma_v", "Trials", "Mean", "SD", "Covers truth"):
        table.add_column(column)
    for report in reports:
        table.add_row(
            report.spec.system,
            str(report.spec.n),
            f"{report.spec.noise_sigma:g}",
            f"{report.sigma_v:g}",
            f"{len(report.rows)} (+{report.failures} failed)" if report.failures else str(len(report.rows)),
            ", ".join(f"{v:.4f}" for v in report.mean),
            ", ".join(f"{v:.4f}" for v in report.sd) + (" (single trial)" if report.single_trial else ""),
            ", ".join("yes" if flag else "no" for flag in report.coverage),
        )
    console.print(table)


def run_generate(args: argparse.Namespace) -> int:
    theta = tuple(float(v) for v in args.theta.split(",")) if args.theta else None
    spec = ExperimentSpec(args.system, n=args.n, noise_sigma=args.sigma, trials=1, theta_true=theta,
                          t_max=args.t_max, seed=args.seed)
    problems = validate_experiment(spec, default_registry())
    if problems:
        raise ConfigurationError("Invalid dataset request:\n" + "\n".join(f"- {p}" for p in problems))
    dataset = generate_dataset(spec)
    write_dataset_csv(dataset, args.out)
    console.print(f"Wrote {dataset.n} rows to {args.out}")
    return EXIT_OK


def _parse_grid(raw: str | None, t_max: float) -> np.ndarray:
    if raw is None:
        return np.linspace(0.0, t_max, 200)
    parts = raw.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"Grid must be start:stop:count, got {raw!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigurationError(f"Grid must be start:stop:count, got {raw!r}") from exc
    if count < 1 or stop < start:
        raise ConfigurationError("Grid needs count >= 1 and stop >= start")
    return np.linspace(start, stop, count)


def run_predict(args: argparse.Namespace) -> int:
    record = load_fit(args.fit)
    model = record.model(default_registry())
    grid = _parse_grid(args.grid, record.dataset.t_max)
    curve = predict(
        model, record.dataset, record.constraints, record.theta_hat, record.hyper,
        args.component - 1, args.order, grid,
    )
    out = Path(args.out)
    if out.suffix.lower() == ".svg":
        observations = None
        if args.order == 0:
            times, values = record.dataset.component(args.component - 1)
            observations = (times, values) if times.size else None
        emit_curves_svg([curve], out, observations=observations)
    elif out.suffix.lower() == ".csv":
        write_curve_csv(curve, out)
    else:
        raise ConfigurationError(f"Output must end in .csv or .svg, got {out.name}")
    console.print(f"Wrote {curve.label} on {grid.size} points to {out}")
    return EXIT_OK


if __name__ == "__main__":
    run()
