"""
Seeded end-to-end runs on the 8-mode ring. Each run takes minutes on CPU;
enable with RUN_SLOW=1.
"""
import pytest

from core.config import load_experiment_config
from services.experiment import ExperimentService

pytestmark = pytest.mark.slow

SEEDS = range(1, 6)
GENERATOR_UPDATES = 20_000


def _train(repository, **overrides):
    cfg = load_experiment_config(overrides={"modes": 8, "oracle_iterations": 50, **overrides})
    return ExperimentService(repository).train(cfg, run_name=f"{cfg.variant}-s{cfg.s}-seed{cfg.seed}")


def test_pruned_double_oracle_recovers_every_mode(repository):
    recovered = [
        _train(repository, variant="do-p", s=10, epsilon=5e-5, seed=seed, max_epochs=GENERATOR_UPDATES // 50)
        .summary.coverage.modes_recovered
        for seed in SEEDS
    ]

    assert sum(count == 8 for count in recovered) >= 4


def test_vanilla_baseline_misses_modes(repository):
    recovered = [
        _train(repository, variant="gan", gan_iterations=GENERATOR_UPDATES, seed=seed).summary.coverage.modes_recovered
        for seed in SEEDS
    ]

    assert sum(count <= 7 for count in recovered) >= 3


def test_small_capacity_run_completes(repository):
    result = _train(repository, variant="do-p", s=5, epsilon=5e-5, seed=1, max_epochs=100)

    assert result.summary.status in ("converged", "max_epochs")
    assert len(result.summary.support_g) <= 5
