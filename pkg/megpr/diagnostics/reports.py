"""Report emission: csv, json, markdown tables and SVG curve plots."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path
from typing import Literal, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..domain.exceptions import ConfigurationError  # noqa: E402
from ..domain.prediction import PosteriorCurve  # noqa: E402
from .experiments import MSE_QUANTITIES, CurveSet, TrialReport, TrialRow  # noqa: E402

ReportFormat = Literal["csv", "json", "markdown", "svg"]
FORMATS: tuple[str, ...] = ("csv", "json", "markdown", "svg")
SUFFIXES = {"csv": ".csv", "json": ".json", "markdown": ".md", "svg": ".svg"}
MSE_METHODS = (("predictor", "Proposed"), ("ode", "ODE solver"), ("gpr", "GPR"))

CSV_HEADER = ("system", "n", "noise_sigma", "sigma_v", "trial", "objective", "iterations", "reason")


def _fmt(value: float) -> str:
    return repr(float(value))


def emit_report(reports: Sequence[TrialReport], fmt: ReportFormat, path: str | Path) -> list[Path]:
    """Write ``reports`` to ``path`` in one format; returns the written files."""
    if not reports:
        raise ConfigurationError("Nothing to report")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            return [write_csv(reports, path)]
        if fmt == "json":
            path.write_text(render_json(reports), encoding="utf-8")
            return [path]
        if fmt == "markdown":
            path.write_text(render_markdown(reports), encoding="utf-8")
            return [path]
        if fmt == "svg":
            return write_svg(reports, path)
    except OSError as exc:
        raise ConfigurationError(f"Cannot write report to {path}: {exc}") from exc
    raise ConfigurationError(f"Unknown report format {fmt!r}")


def write_csv(reports: Sequence[TrialReport], path: Path) -> Path:
    param_names = reports[0].param_names
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([*CSV_HEADER, *param_names])
        for report in reports:
            for row in report.rows:
                writer.writerow(
                    [
                        report.spec.system,
                        report.spec.n,
                        _fmt(report.spec.noise_sigma),
                        _fmt(report.sigma_v),
                        row.trial,
                        _fmt(row.objective),
                        row.iterations,
                        row.reason,
                        *(_fmt(v) for v in row.theta_hat),
                    ]
                )
    return path


def read_csv_rows(path: str | Path) -> dict[tuple[str, int, float, float], list[TrialRow]]:
    """Parse a csv report back into trial rows keyed by (system, n, noise, sigma_v)."""
    grouped: dict[tuple[str, int, float, float], list[TrialRow]] = defaultdict(list)
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        n_fixed = len(CSV_HEADER)
        if tuple(header[:n_fixed]) != CSV_HEADER:
            raise ConfigurationError(f"{path} is not a trial report")
        for cells in reader:
            key = (cells[0], int(cells[1]), float(cells[2]), float(cells[3]))
            grouped[key].append(
                TrialRow(
                    trial=int(cells[4]),
                    theta_hat=tuple(float(v) for v in cells[n_fixed:]),
                    objective=float(cells[5]),
                    iterations=int(cells[6]),
                    reason=cells[7],
                )
            )
    return dict(grouped)


def report_to_dict(report: TrialReport) -> dict:
    low, high = report.interval
    return {
        "spec": report.spec.as_dict(),
        "param_names": list(report.param_names),
        "theta_true": list(report.theta_true),
        "sigma_v": report.sigma_v,
        "rows": [
            {
                "trial": row.trial,
                "theta_hat": list(row.theta_hat),
                "objective": row.objective,
                "iterations": row.iterations,
                "reason": row.reason,
            }
            for row in report.rows
        ],
        "failures": report.failures,
        "mean": report.mean.tolist(),
        "sd": report.sd.tolist(),
        "single_trial": report.single_trial,
        "interval": {"low": low.tolist(), "high": high.tolist()},
        "coverage": [bool(flag) for flag in report.coverage],
        "mse": [{"quantity": r.quantity, "method": r.method, "value": r.value} for r in report.mse],
    }


def render_json(reports: Sequence[TrialReport]) -> str:
    return json.dumps([report_to_dict(r) for r in reports], indent=2, sort_keys=True) + "\n"


def _group_title(report: TrialReport) -> str:
    truth = ", ".join(f"{v:g}" for v in report.theta_true)
    title = f"{report.spec.system} (truth {truth})"
    if report.spec.sigma_v_sweep:
        title += f", sigma_v={report.sigma_v:g}"
    return title


def render_markdown(reports: Sequence[TrialReport]) -> str:
    """Mean/SD rows per n, one column group per noise level."""
    groups: dict[str, list[TrialReport]] = defaultdict(list)
    for report in reports:
        groups[_group_title(report)].append(report)
    lines: list[str] = []
    for title, members in groups.items():
        param_names = members[0].param_names
        noises = sorted({r.spec.noise_sigma for r in members})
        sizes = sorted({r.spec.n for r in members})
        by_cell = {(r.spec.n, r.spec.noise_sigma): r for r in members}
        lines.append(f"### {title}")
        lines.append("")
        header = ["n", "Statistic"] + [f"σ={sigma:g} {name}" for sigma in noises for name in param_names]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join(["---"] * len(header)) + "|")
        for n in sizes:
            for label in ("Mean", "SD"):
                cells = [f"n={n}" if label == "Mean" else "", label]
                for sigma in noises:
                    report = by_cell.get((n, sigma))
                    if report is None:
                        cells.extend([""] * len(param_names))
                        continue
                    values = report.mean if label == "Mean" else report.sd
                    cells.extend(f"{v:.4f}" for v in values)
                lines.append("| " + " | ".join(cells) + " |")
        lines.append("")
        for report in members:
            if report.mse:
                lines.extend(_mse_table(report))
    return "\n".join(lines)


def _mse_table(report: TrialReport) -> list[str]:
    lines = [f"MSE (n={report.spec.n}, σ={report.spec.noise_sigma:g})", ""]
    lines.append("| Quantity | " + " | ".join(label for _, label in MSE_METHODS) + " |")
    lines.append("|" + "|".join(["---"] * (len(MSE_METHODS) + 1)) + "|")
    for quantity in MSE_QUANTITIES:
        values = [report.mse_value(quantity, method) for method, _ in MSE_METHODS]
        lines.append(
            f"| {quantity} | " + " | ".join("" if v is None else f"{v:.4f}" for v in values) + " |"
        )
    lines.append("")
    return lines


def write_svg(reports: Sequence[TrialReport], path: Path) -> list[Path]:
    with_curves = [report for report in reports if report.curves]
    if not with_curves:
        raise ConfigurationError("SVG output needs a report with curves (enable mse)")
    written = []
    for index, report in enumerate(with_curves):
        tag = f"_{index + 1}" if len(with_curves) > 1 else ""
        for curves in report.curves:
            target = path.with_name(f"{path.stem}{tag}_order{curves.order}{path.suffix or '.svg'}")
            written.append(
                emit_curves_svg(
                    [curves.predictor, curves.baseline], target, truth=curves.truth, observations=_observations(curves)
                )
            )
    return written


def _observations(curves: CurveSet):
    if curves.observation_times is None:
        return None
    return curves.observation_times, curves.observations


def emit_curves_svg(
    curves: Sequence[PosteriorCurve],
    path: str | Path,
    *,
    truth=None,
    observations=None,
    title: str | None = None,
) -> Path:
    """Mean ± 2σ bands for each curve, plus optional truth and data points."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": "megpr", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7, 4))
        for curve in curves:
            low, high = curve.band()
            (line,) = ax.plot(curve.query_times, curve.mean, label=curve.label or f"order {curve.order}")
            ax.fill_between(curve.query_times, low, high, color=line.get_color(), alpha=0.2, linewidth=0)
        if truth is not None:
            ax.plot(curves[0].query_times, truth, "k--", linewidth=1, label="truth")
        if observations is not None:
            times, values = observations
            ax.plot(times, values, "o", color="gray", markersize=3, label="observations")
        ax.set_xlabel("t")
        ax.set_title(title or ", ".join(c.label for c in curves if c.label))
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
