"""Fit records: everything `megpr predict` needs to rebuild a posterior."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..domain.exceptions import ConfigurationError
from ..domain.gram import ConstraintSet, HyperParameters
from ..domain.linearization import FixedPointTable
from ..domain.optimizer import EstimationResult
from ..domain.systems import Dataset, SystemModel
from ..registry import SystemRegistry

FORMAT_VERSION = 1


@dataclass(slots=True)
class FitRecord:
    system: str
    dataset: Dataset
    theta_hat: np.ndarray
    hyper: HyperParameters
    constraints: ConstraintSet
    fixed_points: FixedPointTable | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def model(self, registry: SystemRegistry) -> SystemModel:
        return registry.get(self.system).build_model(self.dataset, fixed_points=self.fixed_points)


def _nan_to_none(values: np.ndarray) -> list:
    return [[None if np.isnan(v) else float(v) for v in row] for row in values]


def save_fit(
    path: str | Path,
    *,
    system: str,
    dataset: Dataset,
    result: EstimationResult,
    fixed_points: FixedPointTable | None = None,
) -> Path:
    payload: dict[str, Any] = {
        "version": FORMAT_VERSION,
        "system": system,
        "param_names": list(result.param_names),
        "theta_hat": [float(v) for v in result.theta_hat],
        "hyper": {
            "amplitude": result.hyper_hat.amplitude,
            "length_scale": result.hyper_hat.length_scale,
            "obs_noise": list(result.hyper_hat.obs_noise),
            "sigma_v": result.hyper_hat.sigma_v,
        },
        "constraints": {
            "times": [float(t) for t in result.constraints.times],
            "provenance": result.constraints.provenance,
        },
        "dataset": {
            "t_max": dataset.t_max,
            "times": [float(t) for t in dataset.times],
            "observations": _nan_to_none(dataset.observations),
        },
        "diagnostics": asdict(result.diagnostics),
    }
    if fixed_points is not None:
        payload["fixed_points"] = {
            "times": [float(t) for t in fixed_points.times],
            "states": fixed_points.states.tolist(),
            "source": fixed_points.source,
        }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_fit(path: str | Path) -> FitRecord:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Fit record not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("version") != FORMAT_VERSION:
            raise ConfigurationError(f"Unsupported fit record version {data.get('version')!r}")
        raw = data["dataset"]
        observations = np.array(
            [[np.nan if v is None else v for v in row] for row in raw["observations"]], dtype=float
        )
        dataset = Dataset(np.array(raw["times"], dtype=float), observations, raw["t_max"])
        hyper_data = data["hyper"]
        hyper = HyperParameters.create(
            hyper_data["amplitude"], hyper_data["length_scale"], hyper_data["obs_noise"], hyper_data["sigma_v"]
        )
        constraints = ConstraintSet(
            np.array(data["constraints"]["times"], dtype=float), data["constraints"]["provenance"], dataset.t_max
        )
        fixed_points = None
        if "fixed_points" in data:
            fp = data["fixed_points"]
            fixed_points = FixedPointTable(
                np.array(fp["times"], dtype=float), np.array(fp["states"], dtype=float), source=fp["source"]
            )
        return FitRecord(
            system=data["system"],
            dataset=dataset,
            theta_hat=np.array(data["theta_hat"], dtype=float),
            hyper=hyper,
            constraints=constraints,
            fixed_points=fixed_points,
            diagnostics=data.get("diagnostics", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"Fit record {path.name} is malformed: {exc}") from exc
