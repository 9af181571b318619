"""Gaussian-ring data, noise sources and mode-coverage evaluation."""

from __future__ import annotations

import math
from typing import Optional, Protocol

import numpy as np

from core.exceptions import DimensionError, EmptyBatchError
from core.experiment_config import GaussianMixtureConfig
from infrastructure.models.run import CoverageReport

DEFAULT_ASSIGN_RADIUS_MULT = 3.0
DEFAULT_MIN_COUNT = 20
REFERENCE_EVAL_SAMPLES = 512


class DataSource(Protocol):
    """Anything that can draw a batch of real samples from a private stream."""

    dim: int

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray: ...


def mode_centers(cfg: GaussianMixtureConfig) -> np.ndarray:
    """K centers at angles 2*pi*k/K on a circle of ring_radius."""

    angles = 2.0 * math.pi * np.arange(cfg.modes) / cfg.modes
    return cfg.ring_radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def sample_real_labeled(
    cfg: GaussianMixtureConfig, n: int, rng: Optional[np.random.Generator] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Points and the mode each was drawn from."""

    if n < 1:
        raise EmptyBatchError(detail=f"requested {n} samples")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    modes = rng.integers(0, cfg.modes, size=n)
    points = mode_centers(cfg)[modes] + cfg.cluster_std * rng.standard_normal((n, 2))
    return points, modes


def sample_real(cfg: GaussianMixtureConfig, n: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Uniform mode choice, then isotropic Gaussian noise around the mode center."""

    return sample_real_labeled(cfg, n, rng)[0]


def sample_noise(dim: int, n: int, seed: int | np.random.Generator) -> np.ndarray:
    """i.i.d. standard normal noise of shape (n, dim)."""

    if dim < 1 or n < 1:
        raise DimensionError(detail=f"noise shape ({n}, {dim})")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.standard_normal((n, dim))


class GaussianMixtureSource:
    """DataSource over the Gaussian ring."""

    dim = 2

    def __init__(self, cfg: GaussianMixtureConfig) -> None:
        self.cfg = cfg

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_real(self.cfg, n, rng)


def scaled_min_count(n_samples: int, base: int = DEFAULT_MIN_COUNT) -> int:
    """min_count calibrated at 512 samples, scaled with the sample count."""

    return max(1, round(base * n_samples / REFERENCE_EVAL_SAMPLES))


def assign_modes(
    samples: np.ndarray,
    cfg: GaussianMixtureConfig,
    assign_radius_mult: float = DEFAULT_ASSIGN_RADIUS_MULT,
) -> np.ndarray:
    """Index of the nearest mode for each sample, or -1 outside the assignment radius."""

    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise DimensionError(detail=f"samples of shape {samples.shape}, expected (n, 2)")
    distances = np.linalg.norm(samples[:, None, :] - mode_centers(cfg)[None, :, :], axis=2)
    nearest = distances.argmin(axis=1)
    within = distances[np.arange(samples.shape[0]), nearest] <= assign_radius_mult * cfg.cluster_std
    return np.where(within, nearest, -1)


def mode_coverage(
    samples: np.ndarray,
    cfg: GaussianMixtureConfig,
    assign_radius_mult: float = DEFAULT_ASSIGN_RADIUS_MULT,
    min_count: int = DEFAULT_MIN_COUNT,
) -> CoverageReport:
    """
    Assign each sample to its nearest mode when within
    assign_radius_mult * cluster_std of the center; a mode counts as
    recovered once it holds at least min_count samples.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise DimensionError(detail=f"samples of shape {samples.shape}, expected (n, 2)")
    if samples.shape[0] == 0:
        raise EmptyBatchError(detail="no samples to evaluate")

    labels = assign_modes(samples, cfg, assign_radius_mult)
    assigned = labels >= 0
    counts = np.bincount(labels[assigned], minlength=cfg.modes)

    return CoverageReport(
        modes=cfg.modes,
        modes_recovered=int(np.sum(counts >= min_count)),
        mode_counts=[int(c) for c in counts],
        high_quality_fraction=float(assigned.mean()),
        sample_count=int(samples.shape[0]),
    )

