"""
Experiment configuration models.

`ExperimentConfig` is the flat view read from config files and CLI flags; every
default is a named key so ablations are one-flag changes. The nested models
(`OracleConfig`, `NetworkConfig`, `GaussianMixtureConfig`, `DoConfig`) are what
services consume.
"""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

Variant = Literal["plain", "prune", "continual", "gan"]

VARIANT_ALIASES: dict[str, str] = {
    "plain": "plain",
    "do": "plain",
    "do-gan": "plain",
    "prune": "prune",
    "do-p": "prune",
    "continual": "continual",
    "do-c": "continual",
    "gan": "gan",
    "vanilla": "gan",
}


class OracleConfig(BaseModel):
    """Best-response training and payoff estimation settings."""

    model_config = ConfigDict(frozen=True)

    iterations: int = Field(50, ge=1, description="Training iterations k per oracle call")
    batch_size: int = Field(64, ge=1)
    lr: float = Field(2e-4, gt=0)
    beta1: float = Field(0.5, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    payoff_batches: int = Field(16, ge=1, description="Batches averaged per payoff entry")
    payoff_workers: int = Field(1, ge=1, description="Threads used for payoff estimation")
    warm_start: bool = Field(False, description="Start best responses from the latest support member")
    seed: int = Field(0, ge=0)


class NetworkConfig(BaseModel):
    """Generator / discriminator MLP shapes for the 2D task."""

    model_config = ConfigDict(frozen=True)

    noise_dim: int = Field(2, ge=1)
    data_dim: int = Field(2, ge=1)
    hidden_dim: int = Field(64, ge=1)
    hidden_layers: int = Field(2, ge=0)
    generator_activation: Literal["tanh", "relu"] = "tanh"
    discriminator_activation: Literal["tanh", "relu"] = "relu"


class GaussianMixtureConfig(BaseModel):
    """Ring of isotropic Gaussians."""

    model_config = ConfigDict(frozen=True)

    modes: int = Field(8, ge=1)
    ring_radius: float = Field(2.0, ge=0)
    cluster_std: float = Field(0.1, gt=0)
    seed: int = Field(0, ge=0)


class DoConfig(BaseModel):
    """Settings of one double-oracle run."""

    model_config = ConfigDict(frozen=True)

    variant: Variant = "plain"
    epsilon: float = Field(5e-5, gt=0)
    s: int = Field(10, ge=2, description="Support-set capacity (prune variant)")
    max_epochs: int = Field(400, ge=1)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    bootstrap_iterations: Optional[int] = Field(None, ge=1)
    gan_iterations: Optional[int] = Field(None, ge=1)
    ewc_lambda: float = Field(100.0, ge=0)
    fisher_samples: int = Field(1024, ge=1)
    sample_every: int = Field(25, ge=1)
    seed: int = Field(0, ge=0)

    @property
    def bootstrap_budget(self) -> int:
        return self.bootstrap_iterations or 10 * self.oracle.iterations

    @property
    def gan_budget(self) -> int:
        return self.gan_iterations or self.max_epochs * self.oracle.iterations


class ExperimentConfig(BaseModel):
    """Flat experiment configuration (config file keys == CLI flags)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    variant: Variant = "plain"
    epsilon: float = Field(5e-5, gt=0)
    s: int = Field(10, ge=2)
    max_epochs: int = Field(400, ge=1)
    seed: int = Field(0, ge=0)

    oracle_iterations: int = Field(50, ge=1)
    bootstrap_iterations: Optional[int] = Field(None, ge=1)
    gan_iterations: Optional[int] = Field(None, ge=1)
    batch_size: int = Field(64, ge=1)
    lr: float = Field(2e-4, gt=0)
    beta1: float = Field(0.5, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    payoff_batches: int = Field(16, ge=1)
    payoff_workers: int = Field(1, ge=1)
    warm_start: bool = False

    ewc_lambda: float = Field(100.0, ge=0)
    fisher_samples: int = Field(1024, ge=1)

    modes: int = Field(8, ge=1)
    ring_radius: float = Field(2.0, ge=0)
    cluster_std: float = Field(0.1, gt=0)

    noise_dim: int = Field(2, ge=1)
    hidden_dim: int = Field(64, ge=1)
    hidden_layers: int = Field(2, ge=0)
    generator_activation: Literal["tanh", "relu"] = "tanh"
    discriminator_activation: Literal["tanh", "relu"] = "relu"

    eval_samples: int = Field(512, ge=1)
    sample_every: int = Field(25, ge=1)
    assign_radius_mult: float = Field(3.0, gt=0)
    min_count: int = Field(20, ge=1)

    @field_validator("variant", mode="before")
    @classmethod
    def resolve_variant_alias(cls, value: object) -> object:
        if isinstance(value, str):
            key = value.strip().lower()
            if key not in VARIANT_ALIASES:
                raise ValueError(f"unknown variant {value!r}; expected one of {sorted(VARIANT_ALIASES)}")
            return VARIANT_ALIASES[key]
        return value

    def oracle_config(self) -> OracleConfig:
        return OracleConfig(
            iterations=self.oracle_iterations,
            batch_size=self.batch_size,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            adam_eps=self.adam_eps,
            payoff_batches=self.payoff_batches,
            payoff_workers=self.payoff_workers,
            warm_start=self.warm_start,
            seed=self.seed,
        )

    def network_config(self) -> NetworkConfig:
        return NetworkConfig(
            noise_dim=self.noise_dim,
            hidden_dim=self.hidden_dim,
            hidden_layers=self.hidden_layers,
            generator_activation=self.generator_activation,
            discriminator_activation=self.discriminator_activation,
        )

    def mixture_config(self) -> GaussianMixtureConfig:
        return GaussianMixtureConfig(
            modes=self.modes,
            ring_radius=self.ring_radius,
            cluster_std=self.cluster_std,
            seed=self.seed,
        )

    def do_config(self) -> DoConfig:
        return DoConfig(
            variant=self.variant,
            epsilon=self.epsilon,
            s=self.s,
            max_epochs=self.max_epochs,
            oracle=self.oracle_config(),
            network=self.network_config(),
            bootstrap_iterations=self.bootstrap_iterations,
            gan_iterations=self.gan_iterations,
            ewc_lambda=self.ewc_lambda,
            fisher_samples=self.fisher_samples,
            sample_every=self.sample_every,
            seed=self.seed,
        )
