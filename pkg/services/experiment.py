"""
Experiment orchestration shared by the CLI and the HTTP surface.

ExperimentService wires configuration, the double-oracle runner and the run
repository: `train` executes one configured run into a fresh run directory,
`evaluate` scores the equilibrium generator mixture of a finished run, and
`solve_finite` compares double oracle against the full LP on a matrix game.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Optional

import numpy as np
from pydantic import BaseModel

from core.config import settings
from core.exceptions import RunDirectoryError
from core.experiment_config import ExperimentConfig
from core.logger import get_logger
from infrastructure.models.game import MixedStrategy, PayoffMatrix
from infrastructure.models.network import SupportSet
from infrastructure.models.run import CoverageReport, EpochRecord, RunManifest, RunRecord, RunSummary
from infrastructure.repositories.run_repository import RunDirectory, RunRepository
from services.data import GaussianMixtureSource, assign_modes, mode_coverage, scaled_min_count
from services.do_loop import DoubleOracleRunner, LoopState, run_do_finite
from services.meta_game import solve_zero_sum
from services.oracles import sample_generator_mixture
from services.seeding import EVALUATION, SAMPLES, spawn_rng

logger = get_logger(__name__)


@dataclass
class TrainResult:
    run_dir: RunDirectory
    record: RunRecord
    summary: RunSummary


class FiniteReport(BaseModel):
    """Double oracle against the full-matrix LP on one finite game."""

    do_value: float
    lp_value: float
    difference: float
    epsilon: float
    support_g: int
    support_d: int
    iterations: int
    status: str
    sigma_g: list[float]
    sigma_d: list[float]

    @property
    def within_epsilon(self) -> bool:
        return self.difference <= self.epsilon


def default_run_name(cfg: ExperimentConfig) -> str:
    return f"{cfg.variant}-seed{cfg.seed}-{datetime.now():%Y%m%d-%H%M%S}"


class ExperimentService:
    def __init__(self, repository: Optional[RunRepository] = None) -> None:
        self.repository = repository or RunRepository(settings.output_root())

    # Training
    def _mixture_samples(self, cfg: ExperimentConfig, state: LoopState, rng: np.random.Generator):
        points, _ = sample_generator_mixture(state.g_set, state.solution.sigma_g, cfg.eval_samples, rng)
        return points, assign_modes(points, cfg.mixture_config(), cfg.assign_radius_mult)

    def _coverage(self, cfg: ExperimentConfig, points: np.ndarray, n_samples: int) -> CoverageReport:
        return mode_coverage(
            points,
            cfg.mixture_config(),
            assign_radius_mult=cfg.assign_radius_mult,
            min_count=scaled_min_count(n_samples, cfg.min_count),
        )

    def train(
        self,
        cfg: ExperimentConfig,
        run_name: Optional[str] = None,
        overwrite: bool = False,
    ) -> TrainResult:
        """Run the configured variant and write its run directory."""

        run_dir = self.repository.create(run_name or default_run_name(cfg), overwrite=overwrite)
        run_dir.write_manifest(
            RunManifest(
                config=cfg,
                seed=cfg.seed,
                variant=cfg.variant,
                dataset=cfg.mixture_config(),
                output_dir=str(run_dir.path),
                version=settings.APP_VERSION,
            )
        )
        logger.info("Run directory created", run=run_dir.name, variant=cfg.variant, seed=cfg.seed)

        dumped: set[int] = set()

        def on_epoch(record: EpochRecord, state: LoopState) -> None:
            run_dir.append_epoch(record)
            if record.t % cfg.sample_every == 0:
                points, modes = self._mixture_samples(cfg, state, spawn_rng(cfg.seed, SAMPLES, record.t))
                run_dir.write_samples(record.t, points, modes)
                dumped.add(record.t)

        runner = DoubleOracleRunner(
            cfg.do_config(),
            GaussianMixtureSource(cfg.mixture_config()),
            store=run_dir,
            on_epoch=on_epoch,
        )
        record = runner.run()
        final = runner.final_state
        if final.t not in dumped:
            points, modes = self._mixture_samples(cfg, final, spawn_rng(cfg.seed, SAMPLES, final.t))
            run_dir.write_samples(final.t, points, modes)

        points, _ = sample_generator_mixture(
            final.g_set, final.solution.sigma_g, cfg.eval_samples, spawn_rng(cfg.seed, EVALUATION)
        )
        summary = RunSummary(
            variant=record.variant,
            status=record.status,
            epochs=record.loop_epochs,
            solution=record.solution,
            support_g=record.support_g,
            support_d=record.support_d,
            coverage=self._coverage(cfg, points, cfg.eval_samples),
        )
        run_dir.write_summary(summary)
        logger.info(
            "Run finished",
            run=run_dir.name,
            status=summary.status,
            epochs=summary.epochs,
            modes_recovered=summary.coverage.modes_recovered,
        )
        return TrainResult(run_dir=run_dir, record=record, summary=summary)

    # Evaluation
    def evaluate(
        self,
        run_dir: RunDirectory,
        n_samples: Optional[int] = None,
        seed: Optional[int] = None,
        write_samples: bool = True,
    ) -> CoverageReport:
        """Mode coverage of samples drawn from the run's final generator mixture."""

        manifest = run_dir.read_manifest()
        summary = run_dir.read_summary()
        if summary.solution is None or len(summary.solution.sigma_g) != len(summary.support_g):
            raise RunDirectoryError("Summary has no usable generator mixture.", detail=str(run_dir.path))

        cfg = manifest.config
        n = n_samples or cfg.eval_samples
        g_set = SupportSet(tuple(run_dir.load_snapshot("generator", i) for i in summary.support_g))
        sigma_g = MixedStrategy.from_weights(summary.solution.sigma_g)
        rng = spawn_rng(manifest.seed if seed is None else seed, EVALUATION)
        points, _ = sample_generator_mixture(g_set, sigma_g, n, rng)

        if write_samples:
            run_dir.write_eval_samples(points, assign_modes(points, cfg.mixture_config(), cfg.assign_radius_mult))
        report = self._coverage(cfg, points, n)
        logger.info("Run evaluated", run=run_dir.name, samples=n, modes_recovered=report.modes_recovered)
        return report

    # Finite games
    def solve_finite(self, matrix: PayoffMatrix, epsilon: float, seed: int = 0) -> FiniteReport:
        solution, record = run_do_finite(matrix, epsilon, seed)
        lp = solve_zero_sum(matrix)
        report = FiniteReport(
            do_value=solution.value,
            lp_value=lp.value,
            difference=abs(solution.value - lp.value),
            epsilon=epsilon,
            support_g=len(record.support_g),
            support_d=len(record.support_d),
            iterations=len(record.epochs),
            status=record.status,
            sigma_g=solution.sigma_g.tolist(),
            sigma_d=solution.sigma_d.tolist(),
        )
        logger.info("Finite game solved", shape=matrix.shape, difference=report.difference, iterations=report.iterations)
        return report
