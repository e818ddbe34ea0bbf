"""CSV schemas: datasets ``t,y1..yD``, anchors ``t,s1..sD``, traces and curves."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..domain.exceptions import ConfigurationError
from ..domain.linearization import FixedPointTable
from ..domain.optimizer import TraceRecord
from ..domain.prediction import PosteriorCurve
from ..domain.systems import Dataset


def _format_errors(prefix: str, errors: Iterable[str]) -> str:
    return prefix + ":\n" + "\n".join(f"- {error}" for error in errors)


def _cell(value: float) -> str:
    return "" if value is None or (isinstance(value, float) and math.isnan(value)) else repr(float(value))


def _write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def validate_dataset_rows(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    errors: list[str] = []
    if not header or header[0].strip() != "t":
        errors.append("first column must be 't'")
    expected = [f"y{index}" for index in range(1, len(header))]
    if [name.strip() for name in header[1:]] != expected:
        errors.append(f"value columns must be {','.join(expected) or 'y1'}")
    if len(header) < 2:
        errors.append("at least one value column is required")
    previous = -math.inf
    for number, row in enumerate(rows, start=2):
        if len(row) != len(header):
            errors.append(f"line {number}: expected {len(header)} cells, got {len(row)}")
            continue
        try:
            t = float(row[0])
            values = [float(cell) for cell in row[1:] if cell.strip()]
        except ValueError:
            errors.append(f"line {number}: non-numeric cell")
            continue
        if not math.isfinite(t) or not all(math.isfinite(v) for v in values):
            errors.append(f"line {number}: non-finite value")
        if t <= previous:
            errors.append(f"line {number}: times must be strictly increasing")
        previous = t
    if not rows:
        errors.append("no data rows")
    return errors


def read_dataset_csv(path: str | Path, *, t_max: float | None = None) -> Dataset:
    """Read a dataset; empty cells mark absent observations."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, [])
        rows = [row for row in reader if row]
    errors = validate_dataset_rows(header, rows)
    if errors:
        raise ConfigurationError(_format_errors(f"Dataset {path.name} is invalid", errors))
    times = np.array([float(row[0]) for row in rows])
    observations = np.array(
        [[float(cell) if cell.strip() else np.nan for cell in row[1:]] for row in rows]
    )
    horizon = t_max if t_max is not None else float(times.max()) or 1.0
    return Dataset(times, observations, horizon)


def write_dataset_csv(dataset: Dataset, path: str | Path) -> Path:
    header = ["t", *(f"y{index + 1}" for index in range(dataset.dim))]
    rows = (
        [_cell(t), *(_cell(value) if flag else "" for value, flag in zip(values, flags))]
        for t, values, flags in zip(dataset.times, dataset.observations, dataset.present)
    )
    return _write_rows(path, header, rows)


def write_anchor_csv(table: FixedPointTable, path: str | Path) -> Path:
    header = ["t", *(f"s{index + 1}" for index in range(table.dim))]
    rows = ([_cell(t), *(_cell(v) for v in state)] for t, state in zip(table.times, table.states))
    return _write_rows(path, header, rows)


def write_trace_csv(
    trace: Sequence[TraceRecord], path: str | Path, param_names: Sequence[str]
) -> Path:
    n_hyper = len(trace[0].hyper) if trace else 2
    hyper_names = ["beta_amplitude", "beta_length"] + [f"sigma_y{i + 1}" for i in range(n_hyper - 2)]
    header = ["iter", "objective", "grad_norm", *param_names, *hyper_names]
    rows = (
        [str(record.iteration), _cell(record.objective), _cell(record.grad_norm),
         *(_cell(v) for v in record.theta), *(_cell(v) for v in record.hyper)]
        for record in trace
    )
    return _write_rows(path, header, rows)


def write_curve_csv(curve: PosteriorCurve, path: str | Path) -> Path:
    rows = (
        [_cell(t), _cell(m), _cell(v)]
        for t, m, v in zip(curve.query_times, curve.mean, curve.variance)
    )
    return _write_rows(path, ["t", "mean", "variance"], rows)
