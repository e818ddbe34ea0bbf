"""Registry of named dynamical systems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping

from .domain.exceptions import ConfigurationError
from .domain.fields import FitzHughNagumoField, LinearChainField, VanDerPolField, VectorField
from .domain.linearization import FixedPointTable, choose_fixed_points
from .domain.systems import (
    Dataset,
    SystemModel,
    build_fitzhugh_nagumo,
    build_linear_chain,
    build_van_der_pol,
)

ModelBuilder = Callable[[FixedPointTable | None], SystemModel]


@dataclass(slots=True)
class SystemDefinition:
    """A vector field, its default experiment setup and its model builder."""

    name: str
    field: VectorField
    theta_true: tuple[float, ...]
    initial_state: tuple[float, ...]
    observed: tuple[bool, ...]
    t_max: float
    builder: ModelBuilder
    uses_fixed_points: bool = False
    derived: Mapping[int, tuple[int, int]] = field(default_factory=dict)
    aliases: tuple[str, ...] = ()
    description: str = ""

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.field.param_names

    def build_model(
        self,
        dataset: Dataset | None = None,
        *,
        mode: str = "auto",
        noise_sigma: float | None = None,
        fixed_points: FixedPointTable | None = None,
    ) -> SystemModel:
        """Build the latent-variable model, choosing anchors from the data if needed."""
        if not self.uses_fixed_points:
            return self.builder(None)
        if fixed_points is None:
            if dataset is None:
                raise ConfigurationError(f"System {self.name} needs a dataset to place its anchors")
            if mode == "auto" and self.derived:
                mode = "gpr"
            fixed_points = choose_fixed_points(
                dataset, mode=mode, derived=self.derived, noise_sigma=noise_sigma
            )
        return self.builder(fixed_points)


class SystemRegistry:
    """Register and look up systems by name or alias."""

    def __init__(self) -> None:
        self._systems: Dict[str, SystemDefinition] = {}
        self._aliases: Dict[str, str] = {}

    def register(self, system: SystemDefinition) -> None:
        if system.name in self._systems:
            raise ValueError(f"System {system.name} already registered")
        for alias in system.aliases:
            if alias in self._aliases or alias in self._systems:
                raise ValueError(f"Alias '{alias}' already used by system {self._aliases.get(alias, alias)}")
            self._aliases[alias] = system.name
        self._systems[system.name] = system

    def get(self, name: str) -> SystemDefinition:
        key = self._aliases.get(name, name)
        try:
            return self._systems[key]
        except KeyError as exc:
            raise KeyError(f"System {name} not found") from exc

    def all(self) -> list[SystemDefinition]:
        return list(self._systems.values())

    def names(self) -> list[str]:
        return list(self._systems)


def default_registry() -> SystemRegistry:
    registry = SystemRegistry()
    registry.register(
        SystemDefinition(
            name="linear-chain",
            field=LinearChainField(),
            theta_true=(1.0, 1.0),
            initial_state=(1.0, 0.0, 0.0),
            observed=(False, True, False),
            t_max=10.0,
            builder=lambda _: build_linear_chain(),
            aliases=("chain",),
            description="x1 -> x2 -> x3 first-order reactions, x2 observed",
        )
    )
    registry.register(
        SystemDefinition(
            name="van-der-pol",
            field=VanDerPolField(),
            theta_true=(0.5,),
            initial_state=(2.0, 0.0),
            observed=(True, False),
            t_max=20.0,
            builder=build_van_der_pol,
            uses_fixed_points=True,
            derived={1: (0, 1)},
            aliases=("vdp",),
            description="u'' - theta(1-u^2)u' + u = 0, u observed",
        )
    )
    registry.register(
        SystemDefinition(
            name="fitzhugh-nagumo",
            field=FitzHughNagumoField(),
            theta_true=(0.2, 0.2, 3.0),
            initial_state=(-1.0, 1.0),
            observed=(True, True),
            t_max=20.0,
            builder=build_fitzhugh_nagumo,
            uses_fixed_points=True,
            aliases=("fn", "fhn"),
            description="FitzHugh-Nagumo neuron model, both components observed",
        )
    )
    return registry
