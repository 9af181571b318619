"""Deterministic random streams derived from a run seed and a stream key."""

from __future__ import annotations

import numpy as np
import torch

# Stream keys; combined with epoch / snapshot ids they name one private stream
BOOTSTRAP = 1
GENERATOR_ORACLE = 2
DISCRIMINATOR_ORACLE = 3
PAYOFF = 4
FISHER = 5
SAMPLES = 6
EVALUATION = 7
FINITE = 8


def spawn_rng(seed: int, *keys: int) -> np.random.Generator:
    """numpy Generator for the stream (seed, *keys)."""

    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def torch_generator(rng: np.random.Generator) -> torch.Generator:
    """torch Generator seeded from a numpy stream."""

    generator = torch.Generator()
    generator.manual_seed(int(rng.integers(0, 2**63 - 1)))
    return generator
