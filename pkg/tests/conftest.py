from megpr.testing.fixtures import chain_dataset, registry, rng  # noqa: F401
