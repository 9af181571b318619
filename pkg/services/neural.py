"""
Feed-forward networks, GAN losses, Fisher information, EWC penalty and the
Adam step used by every oracle.

Loss functions return `(loss, grads)` where `grads` is the flat gradient with
respect to the trained network's parameters, in `parameters_to_vector` order.
"""
from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch import nn
from torch.func import functional_call, grad, vmap
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from core.exceptions import (
    ArchitectureMismatchError,
    ConfigError,
    DimensionError,
    EmptyBatchError,
    NonFiniteError,
)
from core.experiment_config import NetworkConfig, OracleConfig
from infrastructure.models.network import Architecture, NetworkSnapshot, Role

DTYPE = torch.float64
LOG_CLAMP = 1e-7

_ACTIVATIONS = {
    "identity": nn.Identity,
    "tanh": nn.Tanh,
    "relu": nn.ReLU,
    "sigmoid": nn.Sigmoid,
}


class Mlp(nn.Module):
    """Affine layers with a hidden activation and a separate output activation."""

    def __init__(
        self,
        arch: Architecture,
        role: Optional[Role] = None,
        generator: Optional[torch.Generator] = None,
    ) -> None:
        super().__init__()
        self.arch = arch
        self.role: Role = role or ("discriminator" if arch.output_activation == "sigmoid" else "generator")

        dims = arch.layer_dims
        layers: list[nn.Module] = []
        for l in range(len(dims) - 1):
            layers.append(nn.Linear(dims[l], dims[l + 1], dtype=DTYPE))
            is_output = l == len(dims) - 2
            layers.append(_ACTIVATIONS[arch.output_activation if is_output else arch.hidden_activation]())
        self.layers = nn.Sequential(*layers)
        self.reset_parameters(generator)

    def reset_parameters(self, generator: Optional[torch.Generator] = None) -> None:
        """Weights uniform in [-a, a], a = sqrt(6 / (fan_in + fan_out)); biases zero."""

        with torch.no_grad():
            for module in self.layers:
                if isinstance(module, nn.Linear):
                    fan_out, fan_in = module.weight.shape
                    bound = math.sqrt(6.0 / (fan_in + fan_out))
                    noise = torch.rand(module.weight.shape, generator=generator, dtype=DTYPE)
                    module.weight.copy_(noise * 2 * bound - bound)
                    module.bias.zero_()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)

    def flat_parameters(self) -> torch.Tensor:
        return parameters_to_vector(self.parameters()).detach().clone()

    def load_flat_parameters(self, flat: torch.Tensor | np.ndarray) -> None:
        flat = torch.as_tensor(flat, dtype=DTYPE).reshape(-1)
        if flat.numel() != self.arch.parameter_count:
            raise ArchitectureMismatchError(
                detail=f"{flat.numel()} parameters for an architecture expecting {self.arch.parameter_count}"
            )
        with torch.no_grad():
            vector_to_parameters(flat.clone(), self.parameters())


def generator_architecture(cfg: NetworkConfig) -> Architecture:
    dims = (cfg.noise_dim, *([cfg.hidden_dim] * cfg.hidden_layers), cfg.data_dim)
    return Architecture(layer_dims=dims, hidden_activation=cfg.generator_activation, output_activation="identity")


def discriminator_architecture(cfg: NetworkConfig) -> Architecture:
    dims = (cfg.data_dim, *([cfg.hidden_dim] * cfg.hidden_layers), 1)
    return Architecture(layer_dims=dims, hidden_activation=cfg.discriminator_activation, output_activation="sigmoid")


def build_generator(cfg: NetworkConfig, generator: Optional[torch.Generator] = None) -> Mlp:
    return Mlp(generator_architecture(cfg), role="generator", generator=generator)


def build_discriminator(cfg: NetworkConfig, generator: Optional[torch.Generator] = None) -> Mlp:
    return Mlp(discriminator_architecture(cfg), role="discriminator", generator=generator)


def as_batch(x: torch.Tensor | np.ndarray, width: int, what: str = "batch") -> torch.Tensor:
    batch = torch.as_tensor(x, dtype=DTYPE)
    if batch.ndim != 2 or batch.shape[1] != width:
        raise DimensionError(detail=f"{what} of shape {tuple(batch.shape)}, expected (n, {width})")
    if batch.shape[0] == 0:
        raise EmptyBatchError(detail=f"{what} is empty")
    return batch


def forward(net: Mlp, x: torch.Tensor | np.ndarray) -> torch.Tensor:
    """Deterministic forward pass without gradient tracking."""

    batch = as_batch(x, net.arch.layer_dims[0], "input")
    with torch.no_grad():
        return net(batch)


def _clamp(probs: torch.Tensor) -> torch.Tensor:
    return probs.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP)


def _flat_grad(loss: torch.Tensor, net: Mlp) -> torch.Tensor:
    grads = torch.autograd.grad(loss, list(net.parameters()))
    return torch.cat([g.reshape(-1) for g in grads]).detach()


def d_loss(D: Mlp, real_batch, fake_batch) -> tuple[float, torch.Tensor]:
    """L_D = E[-log D(x)] + E[-log(1 - D(G(z)))], gradients w.r.t. D."""

    width = D.arch.layer_dims[0]
    real = as_batch(real_batch, width, "real batch")
    fake = as_batch(fake_batch, width, "fake batch")
    loss = -torch.log(_clamp(D(real))).mean() - torch.log(1.0 - _clamp(D(fake))).mean()
    return float(loss.detach()), _flat_grad(loss, D)


def d_loss_value(D: Mlp, real_batch, fake_batch) -> float:
    """L_D without gradient tracking (payoff estimation)."""

    width = D.arch.layer_dims[0]
    real = as_batch(real_batch, width, "real batch")
    fake = as_batch(fake_batch, width, "fake batch")
    with torch.no_grad():
        loss = -torch.log(_clamp(D(real))).mean() - torch.log(1.0 - _clamp(D(fake))).mean()
    return float(loss)


def g_loss_saturating(D: Mlp, G: Mlp, z_batch) -> tuple[float, torch.Tensor]:
    """L_G = E[log(1 - D(G(z)))], gradients w.r.t. G only."""

    z = as_batch(z_batch, G.arch.layer_dims[0], "noise batch")
    loss = torch.log(1.0 - _clamp(D(G(z)))).mean()
    return float(loss.detach()), _flat_grad(loss, G)


def g_loss_non_saturating(D: Mlp, G: Mlp, z_batch) -> tuple[float, torch.Tensor]:
    """E[-log D(G(z))], gradients w.r.t. G only."""

    z = as_batch(z_batch, G.arch.layer_dims[0], "noise batch")
    loss = -torch.log(_clamp(D(G(z)))).mean()
    return float(loss.detach()), _flat_grad(loss, G)


@dataclass(frozen=True, eq=False)
class EwcState:
    """Fisher diagonal, anchor parameters, penalty strength and task weight."""

    fisher: torch.Tensor
    anchor: torch.Tensor
    lam: float
    task_weight: float = 1.0

    def __post_init__(self) -> None:
        fisher = torch.as_tensor(self.fisher, dtype=DTYPE).reshape(-1).detach().clone()
        anchor = torch.as_tensor(self.anchor, dtype=DTYPE).reshape(-1).detach().clone()
        if fisher.numel() != anchor.numel():
            raise DimensionError(detail=f"fisher length {fisher.numel()} != anchor length {anchor.numel()}")
        if torch.any(fisher < 0):
            raise ConfigError("Fisher diagonal must be non-negative.")
        if self.lam < 0:
            raise ConfigError("EWC lambda must be non-negative.")
        if not 0.0 <= self.task_weight <= 1.0:
            raise ConfigError("EWC task weight must lie in [0, 1].")
        object.__setattr__(self, "fisher", fisher)
        object.__setattr__(self, "anchor", anchor)


def ewc_penalty(params: torch.Tensor, ewc: EwcState) -> torch.Tensor:
    """lambda * task_weight * sum_i F_i (params_i - anchor_i)^2 (differentiable in params)."""

    if params.numel() != ewc.anchor.numel():
        raise DimensionError(detail=f"{params.numel()} parameters against an anchor of {ewc.anchor.numel()}")
    return ewc.lam * ewc.task_weight * torch.sum(ewc.fisher * (params - ewc.anchor) ** 2)


def g_loss_ewc(D: Mlp, G: Mlp, z_batch, ewc: EwcState) -> tuple[float, torch.Tensor]:
    """E[-log D(G(z))] plus the EWC penalty, gradients w.r.t. G only."""

    z = as_batch(z_batch, G.arch.layer_dims[0], "noise batch")
    params = parameters_to_vector(G.parameters())
    penalty = ewc_penalty(params, ewc)
    loss = -torch.log(_clamp(D(G(z)))).mean() + penalty
    return float(loss.detach()), _flat_grad(loss, G)


def _unflatten(net: Mlp, flat: torch.Tensor) -> dict[str, torch.Tensor]:
    tensors: dict[str, torch.Tensor] = {}
    offset = 0
    for name, param in net.named_parameters():
        size = param.numel()
        tensors[name] = flat[offset : offset + size].view_as(param)
        offset += size
    return tensors


def fisher_diag(
    D: Mlp,
    G: Mlp,
    z_samples,
    params: Optional[torch.Tensor] = None,
    chunk_size: int = 1024,
) -> torch.Tensor:
    """
    Empirical mean over z of the squared per-sample gradient of log D(G(z))
    with respect to the generator parameters (G's own when `params` is None).
    """
    z = as_batch(z_samples, G.arch.layer_dims[0], "noise samples")
    flat = G.flat_parameters() if params is None else torch.as_tensor(params, dtype=DTYPE).reshape(-1)
    if flat.numel() != G.arch.parameter_count:
        raise DimensionError(detail=f"{flat.numel()} parameters for a generator of {G.arch.parameter_count}")

    g_params = _unflatten(G, flat.detach())
    d_params = {name: p.detach() for name, p in D.named_parameters()}

    def log_score(generator_params: dict[str, torch.Tensor], sample: torch.Tensor) -> torch.Tensor:
        fake = functional_call(G, generator_params, (sample.unsqueeze(0),))
        score = functional_call(D, d_params, (fake,))
        return torch.log(_clamp(score)).sum()

    per_sample_grad = vmap(grad(log_score), in_dims=(None, 0))
    total = torch.zeros_like(flat)
    for chunk in z.split(chunk_size):
        grads = per_sample_grad(g_params, chunk)
        stacked = torch.cat([grads[name].reshape(chunk.shape[0], -1) for name in g_params], dim=1)
        total += (stacked**2).sum(dim=0)
    return (total / z.shape[0]).detach()


@dataclass(frozen=True, eq=False)
class AdamState:
    """Moment estimates and hyperparameters of one Adam-optimized parameter vector."""

    exp_avg: torch.Tensor
    exp_avg_sq: torch.Tensor
    step: int = 0
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def initial(cls, size: int, cfg: Optional[OracleConfig] = None) -> "AdamState":
        cfg = cfg or OracleConfig()
        zeros = torch.zeros(size, dtype=DTYPE)
        return cls(
            exp_avg=zeros,
            exp_avg_sq=zeros.clone(),
            lr=cfg.lr,
            beta1=cfg.beta1,
            beta2=cfg.beta2,
            eps=cfg.adam_eps,
        )


def adam_step(params: torch.Tensor, grads: torch.Tensor, state: AdamState) -> tuple[torch.Tensor, AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""

    params = torch.as_tensor(params, dtype=DTYPE).reshape(-1)
    grads = torch.as_tensor(grads, dtype=DTYPE).reshape(-1)
    if params.numel() != grads.numel() or params.numel() != state.exp_avg.numel():
        raise DimensionError(
            detail=f"params {params.numel()}, grads {grads.numel()}, state {state.exp_avg.numel()}"
        )
    if not torch.all(torch.isfinite(grads)):
        raise NonFiniteError(detail="non-finite gradient passed to adam_step")

    param = nn.Parameter(params.detach().clone())
    param.grad = grads.detach().clone()
    optimizer = torch.optim.Adam(
        [param], lr=state.lr, betas=(state.beta1, state.beta2), eps=state.eps, foreach=False
    )
    optimizer.state[param] = {
        "step": torch.tensor(float(state.step), dtype=DTYPE),
        "exp_avg": state.exp_avg.detach().clone(),
        "exp_avg_sq": state.exp_avg_sq.detach().clone(),
    }
    optimizer.step()

    updated = optimizer.state[param]
    new_state = AdamState(
        exp_avg=updated["exp_avg"].detach().clone(),
        exp_avg_sq=updated["exp_avg_sq"].detach().clone(),
        step=state.step + 1,
        lr=state.lr,
        beta1=state.beta1,
        beta2=state.beta2,
        eps=state.eps,
    )
    return param.detach().clone(), new_state


class SnapshotIds:
    """Thread-safe, strictly increasing snapshot id source."""

    def __init__(self, start: int = 0) -> None:
        self._counter = itertools.count(start)
        self._lock = threading.Lock()

    def next(self) -> int:
        with self._lock:
            return next(self._counter)


_default_ids = SnapshotIds()


def snapshot(net: Mlp, ids: Optional[SnapshotIds] = None) -> NetworkSnapshot:
    """Freeze the network's current parameters under a fresh id."""

    source = ids or _default_ids
    return NetworkSnapshot(
        role=net.role,
        arch=net.arch,
        params=net.flat_parameters().numpy(),
        id=source.next(),
    )


def restore(snap: NetworkSnapshot) -> Mlp:
    """Rebuild a network holding exactly the snapshot's parameters."""

    net = Mlp(snap.arch, role=snap.role)
    net.load_flat_parameters(torch.from_numpy(np.array(snap.params)))
    return net
