"""Configuration models for megpr."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Literal, Mapping

from dotenv import dotenv_values, load_dotenv

from .domain.exceptions import ConfigurationError

ConstraintMode = Literal["uniform", "rejection"]
FixedPointMode = Literal["auto", "observations", "gpr"]

ENV_PREFIX = "MEGPR_"
TRUTHY = {"1", "true", "yes", "on"}
FALSY = {"0", "false", "no", "off"}


@dataclass(slots=True)
class EstimatorConfig:
    """Semi-ADAM settings and constraint sampling options."""

    iterations: int = 2000
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    n_constraints: int | None = None
    constraint_mode: ConstraintMode = "uniform"
    sigma_v: float = 1e-4
    seed: int = 0
    theta_init: tuple[float, ...] | None = None
    theta_bounds: tuple[tuple[float, float], ...] | None = None
    sigma_y_init: float | None = None
    refresh_every: int = 100
    plateau_window: int = 200
    plateau_tol: float = 1e-6
    ema_decay: float = 0.9
    max_retries: int = 5
    mc_samples: int = 1
    fixed_points: FixedPointMode = "auto"

    def problems(self) -> list[str]:
        issues: list[str] = []
        for name in ("iterations", "refresh_every", "plateau_window", "mc_samples"):
            if getattr(self, name) < 1:
                issues.append(f"{name} must be at least 1")
        if self.max_retries < 0:
            issues.append("max_retries must be non-negative")
        for name in ("learning_rate", "epsilon", "sigma_v", "plateau_tol"):
            if not getattr(self, name) > 0:
                issues.append(f"{name} must be positive")
        for name in ("beta1", "beta2", "ema_decay"):
            if not 0 <= getattr(self, name) < 1:
                issues.append(f"{name} must lie in [0, 1)")
        if self.n_constraints is not None and self.n_constraints < 1:
            issues.append("n_constraints must be at least 1")
        if self.constraint_mode not in ("uniform", "rejection"):
            issues.append(f"constraint_mode must be uniform or rejection, got {self.constraint_mode!r}")
        if self.fixed_points not in ("auto", "observations", "gpr"):
            issues.append(f"fixed_points must be auto, observations or gpr, got {self.fixed_points!r}")
        if self.sigma_y_init is not None and not self.sigma_y_init > 0:
            issues.append("sigma_y_init must be positive")
        if self.theta_bounds and any(low > high for low, high in self.theta_bounds):
            issues.append("theta_bounds intervals must satisfy low <= high")
        return issues

    def validate(self) -> "EstimatorConfig":
        _raise_if("estimator config", self.problems())
        return self

    def with_overrides(self, **changes: Any) -> "EstimatorConfig":
        return replace(self, **changes).validate()

    @classmethod
    def from_mapping(cls, values: Mapping[str, str | None]) -> "EstimatorConfig":
        parsed, errors = _parse_fields(cls, values, _ESTIMATOR_PARSERS)
        _raise_if("estimator config", errors)
        return cls(**parsed).validate()

    @classmethod
    def from_env(cls, *, dotenv: bool = True) -> "EstimatorConfig":
        """Create config from environment variables prefixed with MEGPR_."""
        if dotenv:
            load_dotenv()
        values = {
            key[len(ENV_PREFIX):].lower(): value
            for key, value in os.environ.items()
            if key.startswith(ENV_PREFIX) and key[len(ENV_PREFIX):].lower() in _ESTIMATOR_PARSERS
        }
        return cls.from_mapping(values)

    @classmethod
    def from_file(cls, path: str | Path) -> "EstimatorConfig":
        return cls.from_mapping(_read_key_values(path))


@dataclass(slots=True)
class ExperimentSpec:
    """A repeated-trial experiment on one registered system."""

    system: str
    n: int = 100
    noise_sigma: float = 0.01
    trials: int = 100
    theta_true: tuple[float, ...] | None = None
    t_max: float | None = None
    initial_state: tuple[float, ...] | None = None
    seed: int = 0
    workers: int = 1
    mse: bool = False
    sigma_v_sweep: tuple[float, ...] = ()
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)

    def problems(self) -> list[str]:
        issues = list(self.estimator.problems())
        if self.trials < 1:
            issues.append("trials must be at least 1")
        if self.noise_sigma < 0:
            issues.append("noise_sigma must be non-negative")
        if self.n < 3:
            issues.append("n must be at least 3")
        if self.workers < 1:
            issues.append("workers must be at least 1")
        if self.t_max is not None and not self.t_max > 0:
            issues.append("t_max must be positive")
        if any(value <= 0 for value in self.sigma_v_sweep):
            issues.append("sigma_v_sweep values must be positive")
        return issues

    def validate(self) -> "ExperimentSpec":
        _raise_if("experiment spec", self.problems())
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, str | None]) -> "ExperimentSpec":
        own = {key: value for key, value in values.items() if key in _EXPERIMENT_PARSERS}
        rest = {key: value for key, value in values.items() if key not in _EXPERIMENT_PARSERS}
        parsed, errors = _parse_fields(cls, own, _EXPERIMENT_PARSERS)
        if "system" not in parsed:
            errors.append("system: required")
        try:
            estimator = EstimatorConfig.from_mapping(rest)
        except ConfigurationError as exc:
            errors.extend(str(exc).splitlines()[1:])
            estimator = EstimatorConfig()
        _raise_if("experiment spec", errors)
        return cls(estimator=estimator, **parsed).validate()

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_mapping(_read_key_values(path))

    def as_dict(self) -> dict[str, Any]:
        data = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "estimator"}
        data["estimator"] = {f.name: getattr(self.estimator, f.name) for f in fields(self.estimator)}
        return data


@dataclass(slots=True)
class MegprConfig:
    """Top-level configuration container."""

    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    workers: int = 1
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "MegprConfig":
        load_dotenv()
        workers = os.getenv(f"{ENV_PREFIX}WORKERS", "1")
        try:
            worker_count = int(workers)
        except ValueError as exc:
            raise ConfigurationError(f"{ENV_PREFIX}WORKERS must be an integer, got {workers!r}") from exc
        return cls(
            estimator=EstimatorConfig.from_env(dotenv=False),
            workers=max(1, worker_count),
            log_level=os.getenv(f"{ENV_PREFIX}LOG_LEVEL", "INFO").upper(),
        )


def _raise_if(subject: str, errors: list[str]) -> None:
    if errors:
        raise ConfigurationError(_format_errors(f"Invalid {subject}", errors))


def _format_errors(prefix: str, errors: list[str]) -> str:
    return prefix + ":\n" + "\n".join(f"- {error}" for error in errors)


def _read_key_values(path: str | Path) -> dict[str, str | None]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}")
    return {key.strip().lower(): value for key, value in dotenv_values(path).items()}


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in TRUTHY:
        return True
    if lowered in FALSY:
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(item) for item in raw.split(",") if item.strip())


def _parse_bounds(raw: str) -> tuple[tuple[float, float], ...]:
    bounds = []
    for item in raw.split(","):
        if not item.strip():
            continue
        low, sep, high = item.partition(":")
        if not sep:
            raise ValueError(f"bounds must be lo:hi pairs, got {item!r}")
        bounds.append((float(low), float(high)))
    return tuple(bounds)


def _optional(parser: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(raw: str) -> Any:
        if raw.strip().lower() in {"", "none", "auto"}:
            return None
        return parser(raw)

    return parse


def _parse_fields(
    cls: type, values: Mapping[str, str | None], parsers: Mapping[str, Callable[[str], Any]]
) -> tuple[dict[str, Any], list[str]]:
    parsed: dict[str, Any] = {}
    errors: list[str] = []
    for key, raw in values.items():
        parser = parsers.get(key)
        if parser is None:
            errors.append(f"{key}: unknown key for {cls.__name__}")
            continue
        if raw is None:
            errors.append(f"{key}: missing value")
            continue
        try:
            parsed[key] = parser(raw)
        except ValueError as exc:
            errors.append(f"{key}: {exc}")
    return parsed, errors


_ESTIMATOR_PARSERS: dict[str, Callable[[str], Any]] = {
    "iterations": int,
    "learning_rate": float,
    "beta1": float,
    "beta2": float,
    "epsilon": float,
    "n_constraints": _optional(int),
    "constraint_mode": str.strip,
    "sigma_v": float,
    "seed": int,
    "theta_init": _optional(_parse_float_list),
    "theta_bounds": _optional(_parse_bounds),
    "sigma_y_init": _optional(float),
    "refresh_every": int,
    "plateau_window": int,
    "plateau_tol": float,
    "ema_decay": float,
    "max_retries": int,
    "mc_samples": int,
    "fixed_points": str.strip,
}

_EXPERIMENT_PARSERS: dict[str, Callable[[str], Any]] = {
    "system": str.strip,
    "n": int,
    "noise_sigma": float,
    "trials": int,
    "theta_true": _optional(_parse_float_list),
    "t_max": _optional(float),
    "initial_state": _optional(_parse_float_list),
    "seed": int,
    "workers": int,
    "mse": _parse_bool,
    "sigma_v_sweep": _parse_float_list,
}
