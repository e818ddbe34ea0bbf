"""Readers and writers for datasets, anchors, traces, curves and fit records."""

from .csv_loader import (
    read_dataset_csv,
    write_anchor_csv,
    write_curve_csv,
    write_dataset_csv,
    write_trace_csv,
)
from .fit_loader import FitRecord, load_fit, save_fit

__all__ = [
    "FitRecord",
    "load_fit",
    "read_dataset_csv",
    "save_fit",
    "write_anchor_csv",
    "write_curve_csv",
    "write_dataset_csv",
    "write_trace_csv",
]
