import pytest

from megpr.domain.exceptions import ConfigurationError
from megpr.domain.fields import LinearChainField
from megpr.registry import SystemDefinition, SystemRegistry, default_registry
from megpr.domain.systems import build_linear_chain


def _definition(name="chain-copy", aliases=()):
    return SystemDefinition(
        name=name,
        field=LinearChainField(),
        theta_true=(1.0, 1.0),
        initial_state=(1.0, 0.0, 0.0),
        observed=(False, True, False),
        t_max=10.0,
        builder=lambda _: build_linear_chain(),
        aliases=aliases,
    )


def test_default_registry_lists_three_systems():
    registry = default_registry()
    assert registry.names() == ["linear-chain", "van-der-pol", "fitzhugh-nagumo"]
    assert registry.get("vdp").name == "van-der-pol"
    assert registry.get("fhn").param_names == registry.get("fn").param_names


def test_unknown_system():
    with pytest.raises(KeyError, match="lorenz"):
        default_registry().get("lorenz")


def test_duplicates_are_rejected():
    registry = SystemRegistry()
    registry.register(_definition(aliases=("copy",)))
    with pytest.raises(ValueError):
        registry.register(_definition())
    with pytest.raises(ValueError):
        registry.register(_definition(name="other", aliases=("copy",)))


def test_linearized_systems_need_data_for_anchors():
    with pytest.raises(ConfigurationError):
        default_registry().get("van-der-pol").build_model()
    assert default_registry().get("linear-chain").build_model().fixed_points is None
