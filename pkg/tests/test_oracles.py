import math

import numpy as np
import pytest
import torch

from core.exceptions import DimensionError, RoleMismatchError, SupportSetError
from core.experiment_config import NetworkConfig, OracleConfig
from infrastructure.models.game import MixedStrategy, PayoffMatrix
from infrastructure.models.network import NetworkSnapshot, SupportSet
from services import neural
from services.meta_game import expected_utility
from services.oracles import (
    OracleTrace,
    discriminator_oracle,
    draw_strategies,
    estimate_payoff,
    estimate_payoffs,
    generator_oracle,
    sample_generator_mixture,
    train_canonical_gan,
)
from services.seeding import spawn_rng, torch_generator

NETWORK = NetworkConfig(hidden_dim=8, hidden_layers=1)


def _discriminators(count: int, ids: neural.SnapshotIds, seed: int = 0) -> SupportSet:
    gen = torch.Generator().manual_seed(seed)
    return SupportSet(tuple(neural.snapshot(neural.build_discriminator(NETWORK, gen), ids) for _ in range(count)))


def _generators(count: int, ids: neural.SnapshotIds, seed: int = 0) -> SupportSet:
    gen = torch.Generator().manual_seed(seed)
    return SupportSet(tuple(neural.snapshot(neural.build_generator(NETWORK, gen), ids) for _ in range(count)))


def _constant_generator(point: tuple[float, float], snapshot_id: int) -> NetworkSnapshot:
    arch = neural.generator_architecture(NETWORK)
    params = np.zeros(arch.parameter_count)
    params[-2:] = point
    return NetworkSnapshot(role="generator", arch=arch, params=params, id=snapshot_id)


def _constant_discriminator(snapshot_id: int) -> NetworkSnapshot:
    arch = neural.discriminator_architecture(NETWORK)
    return NetworkSnapshot(role="discriminator", arch=arch, params=np.zeros(arch.parameter_count), id=snapshot_id)


def test_zero_probability_strategy_is_never_drawn():
    draws = draw_strategies(MixedStrategy(np.array([1.0, 0.0])), 1000, np.random.default_rng(0))
    assert np.all(draws == 0)


def test_draw_frequencies_match_strategy():
    probs = np.array([0.2, 0.5, 0.3])
    n = 10_000
    draws = draw_strategies(MixedStrategy(probs), n, np.random.default_rng(1))
    freq = np.bincount(draws, minlength=3) / n
    standard_error = np.sqrt(probs * (1 - probs) / n)

    assert np.all(np.abs(freq - probs) <= 4 * standard_error)


def test_generator_oracle_against_single_discriminator(data_source):
    ids = neural.SnapshotIds()
    d_set = _discriminators(1, ids)
    trace = OracleTrace()
    cfg = OracleConfig(iterations=5, batch_size=8)

    generator_oracle(MixedStrategy.pure(0, 1), d_set, cfg, data_source, network=NETWORK, ids=ids, trace=trace)

    assert trace.draws == [0] * 5


def test_generator_oracle_never_samples_zero_probability_discriminator(data_source):
    ids = neural.SnapshotIds()
    d_set = _discriminators(2, ids)
    trace = OracleTrace()
    cfg = OracleConfig(iterations=1000, batch_size=2)

    generator_oracle(MixedStrategy(np.array([1.0, 0.0])), d_set, cfg, data_source, network=NETWORK, ids=ids, trace=trace)

    assert len(trace.draws) == 1000
    assert 1 not in trace.draws


def test_oracle_returns_fresh_trained_snapshot(data_source):
    ids = neural.SnapshotIds()
    d_set = _discriminators(2, ids)
    cfg = OracleConfig(iterations=5, batch_size=8, lr=1e-2)

    snap = generator_oracle(
        MixedStrategy.uniform(2), d_set, cfg, data_source, network=NETWORK, ids=ids, rng=spawn_rng(3, 1)
    )
    initial = neural.build_generator(NETWORK, torch_generator(spawn_rng(3, 1)))

    assert snap.role == "generator"
    assert snap.id > max(d_set.ids)
    assert not np.allclose(snap.params, initial.flat_parameters().numpy())


def test_generator_oracle_improves_against_frozen_discriminator(data_source):
    improved = 0
    for seed in range(5):
        ids = neural.SnapshotIds()
        d_set = _discriminators(1, ids, seed=seed)
        trace = OracleTrace()
        cfg = OracleConfig(iterations=50, batch_size=64, lr=1e-2)

        generator_oracle(
            MixedStrategy.pure(0, 1), d_set, cfg, data_source, network=NETWORK, ids=ids, rng=spawn_rng(seed, 2), trace=trace
        )
        improved += np.mean(trace.losses[-5:]) < np.mean(trace.losses[:5])

    assert improved >= 4


def test_discriminator_oracle_lowers_its_loss(data_source):
    improved = 0
    for seed in range(5):
        ids = neural.SnapshotIds()
        g_set = _generators(2, ids, seed=seed)
        trace = OracleTrace()
        cfg = OracleConfig(iterations=50, batch_size=64, lr=1e-2)

        discriminator_oracle(
            MixedStrategy.uniform(2), g_set, cfg, data_source, network=NETWORK, ids=ids, rng=spawn_rng(seed, 3), trace=trace
        )
        improved += np.mean(trace.losses[-5:]) < np.mean(trace.losses[:5])

    assert improved >= 4


def test_discriminator_separates_far_away_generator(data_source):
    far = _constant_generator((10.0, 10.0), snapshot_id=0)
    cfg = OracleConfig(iterations=50, batch_size=64, lr=1e-2)

    d_snap = discriminator_oracle(
        MixedStrategy.pure(0, 1), SupportSet((far,)), cfg, data_source, network=NETWORK, ids=neural.SnapshotIds(1)
    )
    D = neural.restore(d_snap)
    rng = np.random.default_rng(0)
    real_score = neural.forward(D, data_source.sample(256, rng)).mean()
    fake_score = neural.forward(D, np.full((256, 2), 10.0)).mean()

    assert float(fake_score) < float(real_score)


def test_point_mass_mixture_uses_one_generator(data_source):
    ids = neural.SnapshotIds()
    g_set = SupportSet((_constant_generator((0.0, 0.0), 0), _constant_generator((5.0, 5.0), 1)))
    trace = OracleTrace()
    cfg = OracleConfig(iterations=3, batch_size=16)

    discriminator_oracle(
        MixedStrategy(np.array([0.0, 1.0])), g_set, cfg, data_source, network=NETWORK, ids=neural.SnapshotIds(2), trace=trace
    )

    assert set(trace.draws) == {1}
    points, draws = sample_generator_mixture(g_set, MixedStrategy(np.array([0.0, 1.0])), 32, np.random.default_rng(0))
    np.testing.assert_allclose(points, 5.0)
    assert np.all(draws == 1)


def test_oracle_input_errors(data_source):
    ids = neural.SnapshotIds()
    cfg = OracleConfig(iterations=1, batch_size=4)
    d_set = _discriminators(2, ids)

    with pytest.raises(SupportSetError):
        generator_oracle(MixedStrategy.pure(0, 1), SupportSet(), cfg, data_source, network=NETWORK)
    with pytest.raises(DimensionError):
        generator_oracle(MixedStrategy.pure(0, 1), d_set, cfg, data_source, network=NETWORK)
    with pytest.raises(RoleMismatchError):
        discriminator_oracle(MixedStrategy.uniform(2), d_set, cfg, data_source, network=NETWORK)


def test_support_set_requires_ascending_ids():
    ids = neural.SnapshotIds()
    a, b = _discriminators(2, ids).members

    with pytest.raises(SupportSetError):
        SupportSet((b, a))
    assert SupportSet((a,), capacity=1).append(b).over_capacity


def test_constant_discriminator_payoff_is_two_log_two(data_source):
    ids = neural.SnapshotIds()
    g = _generators(1, ids)[0]
    value = estimate_payoff(g, _constant_discriminator(5), data_source, OracleConfig(payoff_batches=3))

    assert value == pytest.approx(2 * math.log(2), abs=1e-12)


def test_payoff_is_deterministic_and_consistent(data_source):
    ids = neural.SnapshotIds()
    g = _generators(1, ids)[0]
    d = _discriminators(1, ids)[0]
    cfg = OracleConfig(payoff_batches=4, batch_size=32)

    first = estimate_payoff(g, d, data_source, cfg, seed=11)
    second = estimate_payoff(g, d, data_source, cfg, seed=11)

    assert first == second
    one_by_one = PayoffMatrix(np.array([[first]]))
    assert expected_utility(one_by_one, MixedStrategy.pure(0, 1), MixedStrategy.pure(0, 1)) == first


def test_payoff_rejects_swapped_roles(data_source):
    ids = neural.SnapshotIds()
    g = _generators(1, ids)[0]
    d = _discriminators(1, ids)[0]

    with pytest.raises(RoleMismatchError):
        estimate_payoff(d, g, data_source, OracleConfig())


def test_threaded_payoffs_match_sequential(data_source):
    ids = neural.SnapshotIds()
    g_set = _generators(2, ids)
    d_set = _discriminators(2, ids)
    pairs = [(g, d) for g in g_set for d in d_set]

    sequential = estimate_payoffs(pairs, data_source, OracleConfig(payoff_batches=2, payoff_workers=1))
    threaded = estimate_payoffs(pairs, data_source, OracleConfig(payoff_batches=2, payoff_workers=4))

    assert sequential == threaded


def test_more_payoff_batches_shrink_standard_error(data_source):
    ids = neural.SnapshotIds()
    g = _generators(1, ids)[0]
    d = _discriminators(1, ids, seed=1)[0]

    def spread(batches: int) -> float:
        cfg = OracleConfig(payoff_batches=batches, batch_size=64)
        return float(np.std([estimate_payoff(g, d, data_source, cfg, seed=rep) for rep in range(30)], ddof=1))

    ratio = spread(1) / spread(64)
    assert 4.0 <= ratio <= 16.0


def test_canonical_training_calls_back_and_orders_ids(data_source):
    calls = []
    ids = neural.SnapshotIds()

    G, D = train_canonical_gan(
        NETWORK,
        OracleConfig(batch_size=8),
        data_source,
        10,
        np.random.default_rng(0),
        ids=ids,
        every=5,
        callback=lambda iteration, g, d: calls.append(iteration),
    )

    assert calls == [5, 10]
    assert (G.role, D.role) == ("generator", "discriminator")
    assert G.id < D.id


def test_canonical_training_rejects_zero_iterations(data_source):
    with pytest.raises(DimensionError):
        train_canonical_gan(NETWORK, OracleConfig(), data_source, 0, np.random.default_rng(0))
