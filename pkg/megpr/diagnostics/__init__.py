"""Experiment runner, report writers and reproduction checks."""

from .checklist import ChecklistIssue, run_checklist
from .experiments import TrialReport, generate_dataset, preset_specs, run_experiment
from .reports import emit_curves_svg, emit_report

__all__ = [
    "ChecklistIssue",
    "TrialReport",
    "emit_curves_svg",
    "emit_report",
    "generate_dataset",
    "preset_specs",
    "run_checklist",
    "run_experiment",
]
