"""
Double-oracle training loops.

Key Components:
1. DoubleOracleRunner: DO-GAN and its pruning (/P) and continual (/C)
   variants over one data source, plus the vanilla GAN baseline.
2. run_do_gan / run_do_gan_p / run_do_gan_c / run_vanilla_gan: one-call
   entry points over an in-memory snapshot store.
3. run_do_finite: double oracle on an explicit matrix game with exact
   best responses (ground truth for the meta-game machinery).

Snapshots are kept in a `SnapshotStore`; the store's count is what the
per-epoch records report as snapshots on disk.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np
import torch

from core.exceptions import ConfigError, NonFiniteError
from core.experiment_config import DoConfig
from core.logger import get_logger
from infrastructure.models.game import MetaSolution, MixedStrategy, PayoffMatrix
from infrastructure.models.network import NetworkSnapshot, SupportSet
from infrastructure.models.run import EpochRecord, RunRecord, SolutionPayload
from services import neural
from services.data import DataSource
from services.meta_game import (
    augment,
    prune,
    solve_zero_sum,
    termination_check,
    termination_increments,
)
from services.oracles import (
    discriminator_oracle,
    estimate_payoffs,
    generator_oracle,
    train_canonical_gan,
)
from services.seeding import (
    BOOTSTRAP,
    DISCRIMINATOR_ORACLE,
    FINITE,
    FISHER,
    GENERATOR_ORACLE,
    spawn_rng,
)

logger = get_logger(__name__)

TerminationCheck = Callable[[PayoffMatrix, MixedStrategy, MixedStrategy, float], bool]


class SnapshotStore(Protocol):
    """Where retained snapshots live (memory or a run directory)."""

    def save_snapshot(self, snap: NetworkSnapshot) -> None: ...

    def delete_snapshot(self, snap: NetworkSnapshot) -> None: ...

    def snapshot_count(self) -> int: ...


class InMemorySnapshotStore:
    def __init__(self) -> None:
        self.snapshots: dict[str, NetworkSnapshot] = {}

    def save_snapshot(self, snap: NetworkSnapshot) -> None:
        self.snapshots[snap.name] = snap

    def delete_snapshot(self, snap: NetworkSnapshot) -> None:
        self.snapshots.pop(snap.name, None)

    def snapshot_count(self) -> int:
        return len(self.snapshots)


@dataclass
class LoopState:
    """Restricted game after an epoch: support sets, meta-matrix and its equilibrium."""

    t: int
    g_set: SupportSet
    d_set: SupportSet
    matrix: PayoffMatrix
    solution: MetaSolution


EpochHook = Callable[[EpochRecord, LoopState], None]


@dataclass
class _EpochOutcome:
    state: LoopState
    converged: bool
    gen_inc: float
    dis_inc: float
    pruned_g: list[int] = field(default_factory=list)
    pruned_d: list[int] = field(default_factory=list)


def _best_response_gap(
    matrix: PayoffMatrix, sigma_g: MixedStrategy, sigma_d: MixedStrategy
) -> tuple[float, float]:
    """
    How far the newest row (column) falls short of the best stored row
    (column) against the opponent mixture it was trained on. Both are 0 for
    an exact best response.
    """
    entries = matrix.entries
    m_old, n_old = len(sigma_g), len(sigma_d)
    rows = entries[:, :n_old] @ sigma_d.probs
    cols = sigma_g.probs @ entries[:m_old, :]
    gap_g = max(0.0, float(rows[:-1].max()) - float(rows[-1])) if rows.size > 1 else 0.0
    gap_d = max(0.0, float(cols[-1]) - float(cols[:-1].min())) if cols.size > 1 else 0.0
    return gap_g, gap_d


def _solution_payload(solution: MetaSolution) -> SolutionPayload:
    return SolutionPayload(
        sigma_g=solution.sigma_g.tolist(),
        sigma_d=solution.sigma_d.tolist(),
        value=float(solution.value),
    )


class DoubleOracleRunner:
    """
    One double-oracle run.

    `termination` replaces the meta-game termination check (tests force it);
    `on_epoch` sees every record, including the bootstrap record at t = 0,
    together with the restricted game it describes.
    """

    def __init__(
        self,
        cfg: DoConfig,
        data_source: DataSource,
        *,
        store: Optional[SnapshotStore] = None,
        termination: TerminationCheck = termination_check,
        on_epoch: Optional[EpochHook] = None,
    ) -> None:
        self.cfg = cfg
        self.data_source = data_source
        self.store: SnapshotStore = store if store is not None else InMemorySnapshotStore()
        self.termination = termination
        self.on_epoch = on_epoch
        self.ids = neural.SnapshotIds()
        self._payoffs: dict[tuple[int, int], float] = {}
        self.final_state: Optional[LoopState] = None

    # Payoffs
    def _payoff_entries(self, pairs: list[tuple[NetworkSnapshot, NetworkSnapshot]], cached: bool) -> list[float]:
        missing = [pair for pair in pairs if not cached or (pair[0].id, pair[1].id) not in self._payoffs]
        values = estimate_payoffs(missing, self.data_source, self.cfg.oracle, seed=self.cfg.seed)
        for (g, d), value in zip(missing, values):
            if not np.isfinite(value):
                raise NonFiniteError(detail=f"payoff of ({g.name}, {d.name}) is {value}")
            if cached:
                self._payoffs[(g.id, d.id)] = value
        if not cached:
            return values
        return [self._payoffs[(g.id, d.id)] for g, d in pairs]

    # Bootstrap
    def _bootstrap(self) -> LoopState:
        G0, D0 = train_canonical_gan(
            self.cfg.network,
            self.cfg.oracle,
            self.data_source,
            self.cfg.bootstrap_budget,
            spawn_rng(self.cfg.seed, BOOTSTRAP),
            ids=self.ids,
        )
        self.store.save_snapshot(G0)
        self.store.save_snapshot(D0)
        (value,) = self._payoff_entries([(G0, D0)], cached=self.cfg.variant != "continual")
        matrix = PayoffMatrix(np.array([[value]]), row_ids=(G0.id,), col_ids=(D0.id,))
        solution = MetaSolution(MixedStrategy.pure(0, 1), MixedStrategy.pure(0, 1), value, value, value)
        capacity = self.cfg.s if self.cfg.variant == "prune" else None
        return LoopState(0, SupportSet((G0,), capacity), SupportSet((D0,), capacity), matrix, solution)

    # Oracles
    def _continual_ewc(self, state: LoopState, anchor: NetworkSnapshot) -> neural.EwcState:
        """Fisher of the anchor task, averaged over retained discriminators with sigma_d weights."""

        G = neural.restore(anchor)
        z = spawn_rng(self.cfg.seed, FISHER, state.t + 1).standard_normal(
            (self.cfg.fisher_samples, self.cfg.network.noise_dim)
        )
        fisher = torch.zeros(anchor.arch.parameter_count, dtype=neural.DTYPE)
        for weight, d_snap in zip(state.solution.sigma_d.probs, state.d_set):
            if weight > 0:
                fisher += float(weight) * neural.fisher_diag(neural.restore(d_snap), G, z)
        anchor_index = state.g_set.ids.index(anchor.id)
        return neural.EwcState(
            fisher=fisher,
            anchor=torch.from_numpy(np.array(anchor.params)),
            lam=self.cfg.ewc_lambda,
            task_weight=float(state.solution.sigma_g.probs[anchor_index]),
        )

    def _best_responses(self, state: LoopState) -> tuple[NetworkSnapshot, NetworkSnapshot]:
        t = state.t + 1
        continual = self.cfg.variant == "continual"
        warm = continual or self.cfg.oracle.warm_start
        g_init = state.g_set[-1] if warm else None
        d_init = state.d_set[-1] if warm else None
        ewc = self._continual_ewc(state, state.g_set[-1]) if continual else None

        g_new = generator_oracle(
            state.solution.sigma_d,
            state.d_set,
            self.cfg.oracle,
            self.data_source,
            network=self.cfg.network,
            ids=self.ids,
            rng=spawn_rng(self.cfg.seed, GENERATOR_ORACLE, t),
            init_from=g_init,
            ewc=ewc,
        )
        # sigma_g still describes the generators stored before this epoch
        d_new = discriminator_oracle(
            state.solution.sigma_g,
            state.g_set,
            self.cfg.oracle,
            self.data_source,
            network=self.cfg.network,
            ids=self.ids,
            rng=spawn_rng(self.cfg.seed, DISCRIMINATOR_ORACLE, t),
            init_from=d_init,
        )
        if continual:
            # Tasks before t-1 leave the store before the new pair enters it
            for dropped in state.g_set.members[:-1] + state.d_set.members[:-1]:
                self.store.delete_snapshot(dropped)
        self.store.save_snapshot(g_new)
        self.store.save_snapshot(d_new)
        return g_new, d_new

    # Epochs
    def _expand(self, state: LoopState, g_new: NetworkSnapshot, d_new: NetworkSnapshot) -> tuple[SupportSet, SupportSet, PayoffMatrix]:
        g_set, d_set = state.g_set, state.d_set
        pairs = [(g_new, d) for d in d_set] + [(g, d_new) for g in g_set] + [(g_new, d_new)]
        entries = self._payoff_entries(pairs, cached=True)
        n, m = len(d_set), len(g_set)
        matrix = augment(
            state.matrix,
            entries[:n],
            entries[n : n + m],
            entries[-1],
            row_id=g_new.id,
            col_id=d_new.id,
        )
        return g_set.append(g_new), d_set.append(d_new), matrix

    def _retain_latest(self, state: LoopState, g_new: NetworkSnapshot, d_new: NetworkSnapshot) -> tuple[SupportSet, SupportSet, PayoffMatrix]:
        """Keep tasks t-1 and t per player and rebuild the meta-matrix over them."""

        g_set = SupportSet((state.g_set[-1], g_new))
        d_set = SupportSet((state.d_set[-1], d_new))
        values = self._payoff_entries([(g, d) for g in g_set for d in d_set], cached=False)
        matrix = PayoffMatrix(np.array(values).reshape(2, 2), row_ids=tuple(g_set.ids), col_ids=tuple(d_set.ids))
        return g_set, d_set, matrix

    def _prune(self, state: LoopState) -> tuple[LoopState, list[int], list[int]]:
        result = prune(state.matrix, state.solution.sigma_g, state.solution.sigma_d, self.cfg.s)
        if len(result.kept_rows) == state.matrix.m and len(result.kept_cols) == state.matrix.n:
            return state, [], []

        g_set = state.g_set.select(result.kept_rows)
        d_set = state.d_set.select(result.kept_cols)
        pruned_g = [snap for snap in state.g_set if snap.id not in set(g_set.ids)]
        pruned_d = [snap for snap in state.d_set if snap.id not in set(d_set.ids)]
        for snap in pruned_g + pruned_d:
            self.store.delete_snapshot(snap)
        # Remaining strategies need an equilibrium of the pruned game for the next oracles
        solution = solve_zero_sum(result.matrix)
        pruned = LoopState(state.t, g_set, d_set, result.matrix, solution)
        return pruned, [snap.id for snap in pruned_g], [snap.id for snap in pruned_d]

    def _epoch(self, state: LoopState) -> _EpochOutcome:
        g_new, d_new = self._best_responses(state)
        if self.cfg.variant == "continual":
            g_set, d_set, matrix = self._retain_latest(state, g_new, d_new)
        else:
            g_set, d_set, matrix = self._expand(state, g_new, d_new)
            gap_g, gap_d = _best_response_gap(matrix, state.solution.sigma_g, state.solution.sigma_d)
            logger.debug("Best-response gap", t=state.t + 1, delta_g=gap_g, delta_d=gap_d)

        solution = solve_zero_sum(matrix)
        increments = termination_increments(matrix, solution.sigma_g, solution.sigma_d)
        converged = self.termination(matrix, solution.sigma_g, solution.sigma_d, self.cfg.epsilon)
        outcome = _EpochOutcome(
            state=LoopState(state.t + 1, g_set, d_set, matrix, solution),
            converged=converged,
            gen_inc=increments.gen_inc,
            dis_inc=increments.dis_inc,
        )
        if self.cfg.variant == "prune" and (g_set.over_capacity or d_set.over_capacity):
            outcome.state, outcome.pruned_g, outcome.pruned_d = self._prune(outcome.state)
        return outcome

    def _record(self, state: LoopState, gen_inc: float, dis_inc: float, pruned_g=(), pruned_d=()) -> EpochRecord:
        record = EpochRecord(
            t=state.t,
            m=state.matrix.m,
            n=state.matrix.n,
            value=float(state.solution.value),
            gen_inc=float(gen_inc),
            dis_inc=float(dis_inc),
            support_g=state.g_set.ids,
            support_d=state.d_set.ids,
            snapshots_on_disk=self.store.snapshot_count(),
            pruned_g=list(pruned_g),
            pruned_d=list(pruned_d),
        )
        logger.info(
            "Epoch complete",
            t=record.t,
            shape=(record.m, record.n),
            value=record.value,
            genInc=record.gen_inc,
            disInc=record.dis_inc,
            support_g=record.support_g,
            support_d=record.support_d,
            snapshots_on_disk=record.snapshots_on_disk,
        )
        if self.on_epoch is not None:
            self.on_epoch(record, state)
        return record

    def run(self) -> RunRecord:
        if self.cfg.variant == "gan":
            return self._run_vanilla()

        logger.info("Double oracle run started", variant=self.cfg.variant, seed=self.cfg.seed, epsilon=self.cfg.epsilon)
        state = self._bootstrap()
        epochs = [self._record(state, 0.0, 0.0)]
        status = "max_epochs"

        for _ in range(self.cfg.max_epochs):
            outcome = self._epoch(state)
            state = outcome.state
            epochs.append(self._record(state, outcome.gen_inc, outcome.dis_inc, outcome.pruned_g, outcome.pruned_d))
            if outcome.converged:
                status = "converged"
                break

        self.final_state = state
        logger.info("Double oracle run finished", variant=self.cfg.variant, status=status, epochs=state.t)
        return RunRecord(
            variant=self.cfg.variant,
            epochs=epochs,
            status=status,
            solution=_solution_payload(state.solution),
            support_g=state.g_set.ids,
            support_d=state.d_set.ids,
        )

    def _run_vanilla(self) -> RunRecord:
        """Alternating GAN training; one record per oracle-sized chunk of iterations."""

        oracle = self.cfg.oracle
        chunk_ids = neural.SnapshotIds(start=1_000_000_000)
        epochs: list[EpochRecord] = []

        def checkpoint(iteration: int, G: neural.Mlp, D: neural.Mlp) -> None:
            g = neural.snapshot(G, chunk_ids)
            d = neural.snapshot(D, chunk_ids)
            (value,) = self._payoff_entries([(g, d)], cached=False)
            state = LoopState(
                t=-(-iteration // oracle.iterations),
                g_set=SupportSet((g,)),
                d_set=SupportSet((d,)),
                matrix=PayoffMatrix(np.array([[value]]), row_ids=(g.id,), col_ids=(d.id,)),
                solution=MetaSolution(MixedStrategy.pure(0, 1), MixedStrategy.pure(0, 1), value),
            )
            epochs.append(self._record(state, 0.0, 0.0))

        logger.info("Vanilla GAN run started", seed=self.cfg.seed, iterations=self.cfg.gan_budget)
        G, D = train_canonical_gan(
            self.cfg.network,
            oracle,
            self.data_source,
            self.cfg.gan_budget,
            spawn_rng(self.cfg.seed, BOOTSTRAP),
            ids=self.ids,
            every=oracle.iterations,
            callback=checkpoint,
        )
        self.store.save_snapshot(G)
        self.store.save_snapshot(D)
        solution = MetaSolution(MixedStrategy.pure(0, 1), MixedStrategy.pure(0, 1), epochs[-1].value)
        self.final_state = LoopState(
            t=epochs[-1].t,
            g_set=SupportSet((G,)),
            d_set=SupportSet((D,)),
            matrix=PayoffMatrix(np.array([[solution.value]]), row_ids=(G.id,), col_ids=(D.id,)),
            solution=solution,
        )
        return RunRecord(
            variant="gan",
            epochs=epochs,
            status="completed",
            solution=_solution_payload(solution),
            support_g=[G.id],
            support_d=[D.id],
        )


def _run_variant(cfg: DoConfig, data_source: DataSource, variant: str, **kwargs) -> RunRecord:
    if cfg.variant != variant:
        raise ConfigError(f"Configured variant {cfg.variant!r} cannot run as {variant!r}.")
    return DoubleOracleRunner(cfg, data_source, **kwargs).run()


def run_do_gan(cfg: DoConfig, data_source: DataSource, **kwargs) -> RunRecord:
    return _run_variant(cfg, data_source, "plain", **kwargs)


def run_do_gan_p(cfg: DoConfig, data_source: DataSource, **kwargs) -> RunRecord:
    return _run_variant(cfg, data_source, "prune", **kwargs)


def run_do_gan_c(cfg: DoConfig, data_source: DataSource, **kwargs) -> RunRecord:
    return _run_variant(cfg, data_source, "continual", **kwargs)


def run_vanilla_gan(cfg: DoConfig, data_source: DataSource, **kwargs) -> RunRecord:
    return _run_variant(cfg, data_source, "gan", **kwargs)


def _embed(strategy: MixedStrategy, indices: list[int], size: int) -> MixedStrategy:
    probs = np.zeros(size)
    probs[indices] = strategy.probs
    return MixedStrategy(probs)


def run_do_finite(full_game: PayoffMatrix, epsilon: float, seed: int = 0) -> tuple[MetaSolution, RunRecord]:
    """
    Double oracle on an explicit matrix game.

    Starts from one random row and column; each iteration solves the
    restricted game and adds the exact best-response row and column of the
    full game. Stops once neither best response improves on the restricted
    value by epsilon. The returned strategies are over the full game.
    """
    if epsilon <= 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}.")

    rng = spawn_rng(seed, FINITE)
    A = full_game.entries
    rows = [int(rng.integers(full_game.m))]
    cols = [int(rng.integers(full_game.n))]
    epochs: list[EpochRecord] = []
    status = "max_epochs"

    for t in range(full_game.m + full_game.n):
        restricted = PayoffMatrix(A[np.ix_(rows, cols)], row_ids=tuple(rows), col_ids=tuple(cols))
        solution = solve_zero_sum(restricted)
        row_payoffs = A[:, cols] @ solution.sigma_d.probs
        col_payoffs = solution.sigma_g.probs @ A[rows, :]
        best_row = int(np.argmax(row_payoffs))
        best_col = int(np.argmin(col_payoffs))
        gen_inc = float(row_payoffs[best_row]) - solution.value
        dis_inc = solution.value - float(col_payoffs[best_col])

        epochs.append(
            EpochRecord(
                t=t,
                m=restricted.m,
                n=restricted.n,
                value=solution.value,
                gen_inc=gen_inc,
                dis_inc=dis_inc,
                support_g=list(rows),
                support_d=list(cols),
                snapshots_on_disk=0,
            )
        )
        grew = False
        if gen_inc >= epsilon and best_row not in rows:
            rows.append(best_row)
            grew = True
        if dis_inc >= epsilon and best_col not in cols:
            cols.append(best_col)
            grew = True
        if not grew:
            status = "converged"
            break

    full_solution = MetaSolution(
        sigma_g=_embed(solution.sigma_g, rows[: solution.sigma_g.probs.size], full_game.m),
        sigma_d=_embed(solution.sigma_d, cols[: solution.sigma_d.probs.size], full_game.n),
        value=solution.value,
        row_value=solution.row_value,
        col_value=solution.col_value,
    )
    logger.debug("Finite double oracle finished", status=status, iterations=len(epochs), value=solution.value)
    record = RunRecord(
        variant="finite",
        epochs=epochs,
        status=status,
        solution=_solution_payload(full_solution),
        support_g=list(rows),
        support_d=list(cols),
    )
    return full_solution, record


__all__ = [
    "SnapshotStore",
    "InMemorySnapshotStore",
    "LoopState",
    "DoubleOracleRunner",
    "run_do_gan",
    "run_do_gan_p",
    "run_do_gan_c",
    "run_vanilla_gan",
    "run_do_finite",
]
