"""Shared fixtures: tiny networks and budgets so loop tests stay fast on CPU."""

import os

import pytest

from core.experiment_config import DoConfig, GaussianMixtureConfig, NetworkConfig, OracleConfig
from infrastructure.repositories.run_repository import RunRepository
from services.data import GaussianMixtureSource


def pytest_collection_modifyitems(config, items):
    if os.getenv("RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set RUN_SLOW=1 to run long seeded acceptance runs")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def tiny_network() -> NetworkConfig:
    return NetworkConfig(hidden_dim=8, hidden_layers=1)


@pytest.fixture
def tiny_oracle() -> OracleConfig:
    return OracleConfig(iterations=3, batch_size=16, payoff_batches=2, lr=1e-3)


@pytest.fixture
def mixture() -> GaussianMixtureConfig:
    return GaussianMixtureConfig(modes=8)


@pytest.fixture
def data_source(mixture) -> GaussianMixtureSource:
    return GaussianMixtureSource(mixture)


@pytest.fixture
def make_do_config(tiny_network, tiny_oracle):
    def factory(**overrides) -> DoConfig:
        values = dict(
            variant="plain",
            max_epochs=3,
            oracle=tiny_oracle,
            network=tiny_network,
            bootstrap_iterations=5,
            gan_iterations=6,
            fisher_samples=32,
            seed=0,
        )
        values.update(overrides)
        return DoConfig(**values)

    return factory


@pytest.fixture
def output_root(tmp_path, monkeypatch):
    root = tmp_path / "runs"
    monkeypatch.setenv("DOGAN_OUTPUT_ROOT", str(root))
    return root


@pytest.fixture
def repository(output_root) -> RunRepository:
    return RunRepository(output_root)


@pytest.fixture
def tiny_run_keys() -> dict[str, str]:
    """Flat config keys for a run that finishes in well under a second."""

    return {
        "hidden_dim": "8",
        "hidden_layers": "1",
        "oracle_iterations": "3",
        "bootstrap_iterations": "5",
        "gan_iterations": "6",
        "batch_size": "16",
        "payoff_batches": "2",
        "fisher_samples": "32",
        "eval_samples": "64",
        "lr": "0.001",
    }
