import json

import numpy as np
import pytest

from megpr.config import ExperimentSpec
from megpr.diagnostics.checklist import check_report, run_checklist
from megpr.diagnostics.experiments import CurveSet, MseRow, TrialReport, TrialRow
from megpr.diagnostics.reports import emit_curves_svg, emit_report, read_csv_rows, render_markdown
from megpr.domain.exceptions import ConfigurationError
from megpr.domain.prediction import PosteriorCurve


def _report(n=100, sigma=0.05, estimates=((0.88, 0.95), (0.92, 0.97), (0.86, 0.91))):
    spec = ExperimentSpec("linear-chain", n=n, noise_sigma=sigma, trials=len(estimates))
    report = TrialReport(spec, ("theta1", "theta2"), (1.0, 1.0), 1e-4)
    report.rows = [TrialRow(i, tuple(e), -12.5 + i, 300, "plateau") for i, e in enumerate(estimates)]
    return report


def _mse_report(predictor=(0.0009, 0.002, 0.012), gpr=(0.001, 0.01, 0.6)):
    spec = ExperimentSpec("van-der-pol", n=100, noise_sigma=0.1, trials=1, mse=True)
    report = TrialReport(spec, ("theta",), (0.5,), 1e-4, rows=[TrialRow(0, (0.45,), 1.0, 10, "plateau")])
    for quantity, p, g in zip(("u", "du", "d2u"), predictor, gpr):
        report.mse.extend([MseRow(quantity, "predictor", p), MseRow(quantity, "ode", p), MseRow(quantity, "gpr", g)])
    grid = np.linspace(0, 1, 5)
    curve = PosteriorCurve(grid, np.sin(grid), np.full(5, 0.01), 0, 0, "x1^(0)")
    report.curves.append(CurveSet(0, np.sin(grid), curve, curve, grid, np.sin(grid)))
    return report


def test_csv_report_reads_back(tmp_path):
    reports = [_report(), _report(n=50, sigma=0.01)]
    (path,) = emit_report(reports, "csv", tmp_path / "chain.csv")
    grouped = read_csv_rows(path)
    assert set(grouped) == {("linear-chain", 100, 0.05, 1e-4), ("linear-chain", 50, 0.01, 1e-4)}
    rows = grouped[("linear-chain", 100, 0.05, 1e-4)]
    assert [row.theta_hat for row in rows] == [(0.88, 0.95), (0.92, 0.97), (0.86, 0.91)]
    assert rows[1].objective == -11.5


def test_json_report_carries_summary(tmp_path):
    (path,) = emit_report([_report()], "json", tmp_path / "out.json")
    (payload,) = json.loads(path.read_text(encoding="utf-8"))
    assert payload["mean"] == pytest.approx([0.8867, 0.9433], abs=1e-4)
    assert payload["spec"]["system"] == "linear-chain"
    assert payload["single_trial"] is False
    assert payload["coverage"] == [False, True]


def test_markdown_groups_noise_levels():
    text = render_markdown([_report(sigma=0.01), _report(sigma=0.05), _report(n=50, sigma=0.01)])
    assert "### linear-chain (truth 1, 1)" in text
    assert "| n | Statistic | σ=0.01 theta1 | σ=0.01 theta2 | σ=0.05 theta1 | σ=0.05 theta2 |" in text
    assert "| n=50 | Mean | 0.8867 | 0.9433 |  |  |" in text


def test_markdown_includes_mse_table():
    text = render_markdown([_mse_report()])
    assert "| Quantity | Proposed | ODE solver | GPR |" in text
    assert "| d2u | 0.0120 | 0.0120 | 0.6000 |" in text


def test_svg_needs_curves(tmp_path):
    with pytest.raises(ConfigurationError):
        emit_report([_report()], "svg", tmp_path / "plot.svg")
    (path,) = emit_report([_mse_report()], "svg", tmp_path / "plot.svg")
    assert path.name == "plot_order0.svg"
    assert path.read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_curve_svg_is_reproducible(tmp_path):
    grid = np.linspace(0, 2, 20)
    curve = PosteriorCurve(grid, np.cos(grid), np.full(20, 0.04), 0, 1, "x1^(1)")
    first = emit_curves_svg([curve], tmp_path / "a.svg").read_bytes()
    second = emit_curves_svg([curve], tmp_path / "b.svg").read_bytes()
    assert first == second


def test_unknown_format_and_empty_reports(tmp_path):
    with pytest.raises(ConfigurationError):
        emit_report([_report()], "xlsx", tmp_path / "x")
    with pytest.raises(ConfigurationError):
        emit_report([], "csv", tmp_path / "x.csv")


def test_checklist_accepts_published_cell():
    assert check_report(_report()) == []


def test_checklist_flags_mean_and_sd():
    issues = check_report(_report(estimates=((0.6, 0.95), (0.6, 0.97), (0.6, 0.91))))
    messages = [issue.message for issue in issues]
    assert any("mean theta1" in message for message in messages)
    assert any("SD theta1" in message for message in messages)
    assert all(issue.severity == "error" for issue in issues)


def test_checklist_warns_without_reference():
    (issue,) = check_report(_report(n=70))
    assert issue.severity == "warning"


def test_checklist_mse_gates():
    assert check_report(_mse_report()) == []
    issues = check_report(_mse_report(gpr=(0.001, 0.01, 0.05)))
    assert any("GPR MSE(d2u)" in issue.message for issue in issues)
    issues = check_report(_mse_report(predictor=(0.0009, 0.002, 0.2)))
    assert any("MSE(d2u)" in issue.message for issue in issues)


def test_run_checklist_reports_failures_and_empty_input():
    report = _report()
    report.failures = 2
    issues = run_checklist([report])
    assert [issue.severity for issue in issues] == ["warning"]
    assert run_checklist([])[0].severity == "error"
