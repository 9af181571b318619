"""
Best-response oracles and payoff estimation.

Key Components:
1. generator_oracle / discriminator_oracle: train a fresh network against a
   fixed opponent mixture and return it frozen as a new pure strategy.
2. estimate_payoff / estimate_payoffs: fill meta-matrix entries with the
   discriminator loss averaged over a few seeded batches.
3. train_canonical_gan: plain alternating GAN training (bootstrap pair and
   the vanilla baseline).
4. sample_generator_mixture: draw points from the equilibrium mixture of
   stored generators.

Opponent sampling: the generator oracle draws one
discriminator per iteration, the discriminator oracle draws a generator for
every fake sample in the minibatch.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np
import torch

from core.exceptions import DimensionError, NonFiniteError, RoleMismatchError, SupportSetError
from core.experiment_config import NetworkConfig, OracleConfig
from core.logger import get_logger
from infrastructure.models.game import MixedStrategy
from infrastructure.models.network import NetworkSnapshot, Role, SupportSet
from services import neural
from services.data import DataSource
from services.seeding import DISCRIMINATOR_ORACLE, GENERATOR_ORACLE, PAYOFF, spawn_rng, torch_generator

logger = get_logger(__name__)

GeneratorLoss = Literal["saturating", "non_saturating"]


@dataclass
class OracleTrace:
    """Per-iteration losses and opponent draws of one oracle call."""

    losses: list[float] = field(default_factory=list)
    draws: list[int] = field(default_factory=list)


def draw_strategies(sigma: MixedStrategy, size: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of `size` independent draws from sigma."""

    return rng.choice(len(sigma), size=size, p=sigma.probs)


def _check_opponents(sigma: MixedStrategy, support: SupportSet, role: Role) -> None:
    if len(support) == 0:
        raise SupportSetError(detail=f"no {role} snapshots to train against")
    if len(sigma) != len(support):
        raise DimensionError(detail=f"strategy of length {len(sigma)} over {len(support)} {role} snapshots")
    for snap in support:
        if snap.role != role:
            raise RoleMismatchError(detail=f"{snap.name} used as a {role}")


def _check_data_source(data_source: DataSource, network: NetworkConfig) -> None:
    if data_source.dim != network.data_dim:
        raise DimensionError(detail=f"data source of dim {data_source.dim}, networks expect {network.data_dim}")


def _opponents(support: SupportSet) -> list[neural.Mlp]:
    nets = [neural.restore(snap) for snap in support]
    for net in nets:
        net.requires_grad_(False)
    return nets


def _fresh_or_warm(
    role: Role,
    network: NetworkConfig,
    rng: np.random.Generator,
    init_from: Optional[NetworkSnapshot],
) -> neural.Mlp:
    if init_from is not None:
        if init_from.role != role:
            raise RoleMismatchError(detail=f"{init_from.name} used to initialize a {role}")
        return neural.restore(init_from)
    builder = neural.build_generator if role == "generator" else neural.build_discriminator
    return builder(network, torch_generator(rng))


def _apply_adam(net: neural.Mlp, grads: torch.Tensor, state: neural.AdamState) -> neural.AdamState:
    params, state = neural.adam_step(net.flat_parameters(), grads, state)
    net.load_flat_parameters(params)
    return state


def _mixture_outputs(generators: Sequence[neural.Mlp], draws: np.ndarray, z: np.ndarray) -> torch.Tensor:
    """Row i is generators[draws[i]] applied to z[i]."""

    z_batch = torch.as_tensor(z, dtype=neural.DTYPE)
    width = generators[0].arch.layer_dims[-1]
    out = torch.empty((z_batch.shape[0], width), dtype=neural.DTYPE)
    for index in np.unique(draws):
        rows = torch.as_tensor(np.flatnonzero(draws == index))
        out[rows] = neural.forward(generators[int(index)], z_batch[rows])
    return out


def generator_oracle(
    sigma_d: MixedStrategy,
    d_set: SupportSet,
    cfg: OracleConfig,
    data_source: DataSource,
    *,
    network: NetworkConfig = NetworkConfig(),
    ids: Optional[neural.SnapshotIds] = None,
    rng: Optional[np.random.Generator] = None,
    init_from: Optional[NetworkSnapshot] = None,
    ewc: Optional[neural.EwcState] = None,
    trace: Optional[OracleTrace] = None,
) -> NetworkSnapshot:
    """
    Approximate best response of the generator to sigma_d over d_set.

    Each of the k iterations samples noise and ONE discriminator from sigma_d,
    then takes an Adam step on the saturating loss (or the EWC loss when
    `ewc` is given).
    """
    _check_opponents(sigma_d, d_set, "discriminator")
    _check_data_source(data_source, network)
    rng = rng if rng is not None else spawn_rng(cfg.seed, GENERATOR_ORACLE)

    G = _fresh_or_warm("generator", network, rng, init_from)
    discriminators = _opponents(d_set)
    state = neural.AdamState.initial(G.arch.parameter_count, cfg)

    for _ in range(cfg.iterations):
        z = rng.standard_normal((cfg.batch_size, network.noise_dim))
        j = int(draw_strategies(sigma_d, 1, rng)[0])
        if ewc is None:
            loss, grads = neural.g_loss_saturating(discriminators[j], G, z)
        else:
            loss, grads = neural.g_loss_ewc(discriminators[j], G, z, ewc)
        state = _apply_adam(G, grads, state)
        if trace is not None:
            trace.losses.append(loss)
            trace.draws.append(j)

    return neural.snapshot(G, ids)


def discriminator_oracle(
    sigma_g: MixedStrategy,
    g_set: SupportSet,
    cfg: OracleConfig,
    data_source: DataSource,
    *,
    network: NetworkConfig = NetworkConfig(),
    ids: Optional[neural.SnapshotIds] = None,
    rng: Optional[np.random.Generator] = None,
    init_from: Optional[NetworkSnapshot] = None,
    trace: Optional[OracleTrace] = None,
) -> NetworkSnapshot:
    """Approximate best response of the discriminator to the generator mixture sigma_g."""

    _check_opponents(sigma_g, g_set, "generator")
    _check_data_source(data_source, network)
    rng = rng if rng is not None else spawn_rng(cfg.seed, DISCRIMINATOR_ORACLE)

    D = _fresh_or_warm("discriminator", network, rng, init_from)
    generators = _opponents(g_set)
    state = neural.AdamState.initial(D.arch.parameter_count, cfg)

    for _ in range(cfg.iterations):
        real = data_source.sample(cfg.batch_size, rng)
        z = rng.standard_normal((cfg.batch_size, network.noise_dim))
        draws = draw_strategies(sigma_g, cfg.batch_size, rng)
        fake = _mixture_outputs(generators, draws, z)
        loss, grads = neural.d_loss(D, real, fake)
        state = _apply_adam(D, grads, state)
        if trace is not None:
            trace.losses.append(loss)
            trace.draws.extend(int(i) for i in draws)

    return neural.snapshot(D, ids)


def estimate_payoff(
    g: NetworkSnapshot,
    d: NetworkSnapshot,
    data_source: DataSource,
    cfg: OracleConfig,
    seed: Optional[int] = None,
) -> float:
    """
    L_D of the pair averaged over payoff_batches batches.

    The noise and data stream is keyed by (seed, g.id, d.id), so an entry is
    reproducible regardless of the order in which entries are estimated.
    """
    if g.role != "generator" or d.role != "discriminator":
        raise RoleMismatchError(detail=f"payoff requested for ({g.name}, {d.name})")

    rng = spawn_rng(cfg.seed if seed is None else seed, PAYOFF, g.id, d.id)
    G = neural.restore(g)
    D = neural.restore(d)
    noise_dim = g.arch.layer_dims[0]

    total = 0.0
    for _ in range(cfg.payoff_batches):
        real = data_source.sample(cfg.batch_size, rng)
        fake = neural.forward(G, rng.standard_normal((cfg.batch_size, noise_dim)))
        total += neural.d_loss_value(D, real, fake)
    value = total / cfg.payoff_batches

    if not np.isfinite(value):
        raise NonFiniteError(detail=f"payoff of ({g.name}, {d.name}) is {value}")
    return value


def estimate_payoffs(
    pairs: Sequence[tuple[NetworkSnapshot, NetworkSnapshot]],
    data_source: DataSource,
    cfg: OracleConfig,
    seed: Optional[int] = None,
) -> list[float]:
    """Entries for several pairs, in order; threaded when payoff_workers > 1."""

    if cfg.payoff_workers <= 1 or len(pairs) <= 1:
        return [estimate_payoff(g, d, data_source, cfg, seed) for g, d in pairs]
    with ThreadPoolExecutor(max_workers=cfg.payoff_workers) as pool:
        return list(pool.map(lambda pair: estimate_payoff(pair[0], pair[1], data_source, cfg, seed), pairs))


def sample_generator_mixture(
    g_set: SupportSet,
    sigma_g: MixedStrategy,
    n: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """n points, each from a generator drawn independently from sigma_g; also returns the draws."""

    _check_opponents(sigma_g, g_set, "generator")
    generators = _opponents(g_set)
    draws = draw_strategies(sigma_g, n, rng)
    z = rng.standard_normal((n, generators[0].arch.layer_dims[0]))
    return _mixture_outputs(generators, draws, z).numpy(), draws


def train_canonical_gan(
    network: NetworkConfig,
    cfg: OracleConfig,
    data_source: DataSource,
    iterations: int,
    rng: np.random.Generator,
    *,
    ids: Optional[neural.SnapshotIds] = None,
    generator_loss: GeneratorLoss = "non_saturating",
    every: Optional[int] = None,
    callback: Optional[Callable[[int, neural.Mlp, neural.Mlp], None]] = None,
) -> tuple[NetworkSnapshot, NetworkSnapshot]:
    """
    Alternating updates: one discriminator step on a fresh real/fake batch,
    then one generator step. `callback(iteration, G, D)` runs every `every`
    iterations and after the last one.
    """
    if iterations < 1:
        raise DimensionError(detail=f"canonical training needs at least one iteration, got {iterations}")
    _check_data_source(data_source, network)

    G = neural.build_generator(network, torch_generator(rng))
    D = neural.build_discriminator(network, torch_generator(rng))
    g_state = neural.AdamState.initial(G.arch.parameter_count, cfg)
    d_state = neural.AdamState.initial(D.arch.parameter_count, cfg)
    g_step = neural.g_loss_non_saturating if generator_loss == "non_saturating" else neural.g_loss_saturating

    for iteration in range(1, iterations + 1):
        real = data_source.sample(cfg.batch_size, rng)
        fake = neural.forward(G, rng.standard_normal((cfg.batch_size, network.noise_dim)))
        _, d_grads = neural.d_loss(D, real, fake)
        d_state = _apply_adam(D, d_grads, d_state)

        D.requires_grad_(False)
        _, g_grads = g_step(D, G, rng.standard_normal((cfg.batch_size, network.noise_dim)))
        D.requires_grad_(True)
        g_state = _apply_adam(G, g_grads, g_state)

        if callback is not None and ((every and iteration % every == 0) or iteration == iterations):
            callback(iteration, G, D)

    logger.debug("Canonical GAN trained", iterations=iterations, generator_loss=generator_loss)
    return neural.snapshot(G, ids), neural.snapshot(D, ids)


__all__ = [
    "OracleTrace",
    "draw_strategies",
    "generator_oracle",
    "discriminator_oracle",
    "estimate_payoff",
    "estimate_payoffs",
    "sample_generator_mixture",
    "train_canonical_gan",
]
