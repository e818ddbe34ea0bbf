"""Reproduction gates for `megpr experiment --check`."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .experiments import TrialReport


@dataclass(slots=True)
class ChecklistIssue:
    severity: str
    message: str


@dataclass(frozen=True, slots=True)
class ReferenceCell:
    """Reference mean (and optionally SD) for one experiment cell."""

    mean: tuple[float, ...]
    mean_tol: float
    sd: tuple[float, ...] | None = None
    sd_ratio: float = 2.0
    sd_max: float | None = None
    severity: str = "error"


# (system, n, noise_sigma, theta_true) -> reference
REFERENCE_CELLS: dict[tuple[str, int, float, tuple[float, ...]], ReferenceCell] = {
    ("linear-chain", 50, 0.01, (1.0, 1.0)): ReferenceCell((0.970, 0.991), 0.10, (0.013, 0.021)),
    ("linear-chain", 50, 0.05, (1.0, 1.0)): ReferenceCell((0.859, 0.851), 0.10, (0.054, 0.062)),
    ("linear-chain", 50, 0.1, (1.0, 1.0)): ReferenceCell((0.768, 0.972), 0.10, (0.150, 0.311)),
    ("linear-chain", 100, 0.01, (1.0, 1.0)): ReferenceCell((0.951, 1.027), 0.10, (0.017, 0.020)),
    ("linear-chain", 100, 0.05, (1.0, 1.0)): ReferenceCell((0.890, 0.943), 0.10, (0.040, 0.050)),
    ("linear-chain", 100, 0.1, (1.0, 1.0)): ReferenceCell((0.853, 0.918), 0.10, (0.085, 0.100)),
    ("van-der-pol", 50, 0.1, (0.5,)): ReferenceCell((0.445,), 0.06, sd_max=0.12),
    ("van-der-pol", 100, 0.1, (0.5,)): ReferenceCell((0.447,), 0.06, sd_max=0.12),
    ("fitzhugh-nagumo", 250, 0.3, (0.2, 0.2, 3.0)): ReferenceCell((0.1998, 0.2511, 2.7465), 0.3),
    ("fitzhugh-nagumo", 250, 0.1, (5.0, 1.0, 0.5)): ReferenceCell((4.9987, 0.9997, 0.4781), 0.15),
    ("fitzhugh-nagumo", 250, 0.2, (5.0, 1.0, 0.5)): ReferenceCell(
        (4.9954, 1.0006, 0.4671), 0.15, severity="warning"
    ),
    ("fitzhugh-nagumo", 250, 0.3, (5.0, 1.0, 0.5)): ReferenceCell(
        (4.9275, 0.9723, 0.4716), 0.15, severity="warning"
    ),
}

REFERENCE_MSE = {"u": 0.0008, "du": 0.0023, "d2u": 0.0130}
MSE_RATIO = 3.0
GPR_GAP = 10.0


def reference_for(report: TrialReport) -> ReferenceCell | None:
    key = (
        report.spec.system,
        report.spec.n,
        round(report.spec.noise_sigma, 10),
        tuple(round(v, 10) for v in report.theta_true),
    )
    return REFERENCE_CELLS.get(key)


def _label(report: TrialReport) -> str:
    return f"{report.spec.system} n={report.spec.n} sigma={report.spec.noise_sigma:g}"


def check_report(report: TrialReport) -> list[ChecklistIssue]:
    issues: list[ChecklistIssue] = []
    cell = reference_for(report)
    if cell is not None:
        mean, sd = report.mean, report.sd
        for index, name in enumerate(report.param_names):
            gap = abs(mean[index] - cell.mean[index])
            if gap > cell.mean_tol:
                issues.append(
                    ChecklistIssue(
                        cell.severity,
                        f"{_label(report)}: mean {name}={mean[index]:.4f} is {gap:.4f} from "
                        f"{cell.mean[index]} (tolerance {cell.mean_tol})",
                    )
                )
            if cell.sd is not None and not report.single_trial:
                target = cell.sd[index]
                if not target / cell.sd_ratio <= sd[index] <= target * cell.sd_ratio:
                    issues.append(
                        ChecklistIssue(
                            cell.severity,
                            f"{_label(report)}: SD {name}={sd[index]:.4f} outside x{cell.sd_ratio:g} of {target}",
                        )
                    )
            if cell.sd_max is not None and sd[index] > cell.sd_max:
                issues.append(
                    ChecklistIssue(
                        cell.severity, f"{_label(report)}: SD {name}={sd[index]:.4f} exceeds {cell.sd_max}"
                    )
                )
    elif not report.mse:
        issues.append(ChecklistIssue("warning", f"{_label(report)}: no reference values for this cell"))

    if report.mse:
        issues.extend(_check_mse(report))
    return issues


def _check_mse(report: TrialReport) -> list[ChecklistIssue]:
    issues: list[ChecklistIssue] = []
    for quantity, target in REFERENCE_MSE.items():
        value = report.mse_value(quantity, "predictor")
        if value is None or not np.isfinite(value):
            issues.append(ChecklistIssue("error", f"{_label(report)}: missing predictor MSE for {quantity}"))
            continue
        if not target / MSE_RATIO <= value <= target * MSE_RATIO:
            issues.append(
                ChecklistIssue(
                    "error",
                    f"{_label(report)}: predictor MSE({quantity})={value:.4g} outside x{MSE_RATIO:g} of {target}",
                )
            )
    predictor = report.mse_value("d2u", "predictor")
    baseline = report.mse_value("d2u", "gpr")
    if predictor is not None and baseline is not None and baseline < GPR_GAP * predictor:
        issues.append(
            ChecklistIssue(
                "error",
                f"{_label(report)}: GPR MSE(d2u)={baseline:.4g} is less than {GPR_GAP:g}x the predictor's",
            )
        )
    return issues


def run_checklist(reports: Sequence[TrialReport]) -> list[ChecklistIssue]:
    issues: list[ChecklistIssue] = []
    if not reports:
        issues.append(ChecklistIssue("error", "No experiment reports to check."))
    for report in reports:
        issues.extend(check_report(report))
        if report.failures:
            issues.append(
                ChecklistIssue("warning", f"{_label(report)}: {report.failures} trial(s) failed and were excluded")
            )
    return issues
