"""
Restricted zero-sum meta-game: equilibrium solving, augmentation, termination
and pruning. Every function is pure; inputs are never mutated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from core.exceptions import ConfigError, DimensionError, SolverError
from core.logger import get_logger
from infrastructure.models.game import MetaSolution, MixedStrategy, PayoffMatrix

logger = get_logger(__name__)

# HiGHS accepts 1e-10 as its tightest feasibility tolerance
_LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}
_TIE_TOLERANCE = 1e-12


def _check_lengths(U: PayoffMatrix, sigma_g: MixedStrategy, sigma_d: MixedStrategy) -> None:
    if len(sigma_g) != U.m or len(sigma_d) != U.n:
        raise DimensionError(
            detail=f"strategies of length ({len(sigma_g)}, {len(sigma_d)}) for a {U.m}x{U.n} matrix"
        )


def expected_utility(U: PayoffMatrix, sigma_g: MixedStrategy, sigma_d: MixedStrategy) -> float:
    """Generator's expected payoff sigma_g^T U sigma_d."""

    _check_lengths(U, sigma_g, sigma_d)
    return float(sigma_g.probs @ U.entries @ sigma_d.probs)


def exploitability(U: PayoffMatrix, sigma_g: MixedStrategy, sigma_d: MixedStrategy) -> float:
    """Largest gain a pure deviation of either player achieves against the profile."""

    value = expected_utility(U, sigma_g, sigma_d)
    generator_gain = float(np.max(U.entries @ sigma_d.probs)) - value
    discriminator_gain = value - float(np.min(sigma_g.probs @ U.entries))
    return max(generator_gain, discriminator_gain)


def _solve_lp(c: np.ndarray, A_ub: np.ndarray, b_ub: np.ndarray) -> np.ndarray:
    result = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method="highs-ds", options=_LP_OPTIONS)
    if result.status != 0:
        raise SolverError(detail=f"linprog status {result.status}: {result.message}")
    return np.asarray(result.x, dtype=np.float64)


def solve_zero_sum(U: PayoffMatrix) -> MetaSolution:
    """
    Exact mixed equilibrium of a zero-sum matrix game.

    Payoffs are shifted to be strictly positive so the classical minimax LP
    (min 1^T x s.t. A^T x >= 1, x >= 0, value 1/sum(x)) is bounded and
    feasible; the shift is removed from the values afterwards. The column
    player's LP is solved separately so both objective values are reported.
    """
    A = U.entries
    shift = 1.0 - float(A.min())
    shifted = A + shift
    m, n = shifted.shape

    x = _solve_lp(np.ones(m), -shifted.T, -np.ones(n))
    y = _solve_lp(-np.ones(n), shifted, np.ones(m))

    row_value = 1.0 / x.sum() - shift
    col_value = 1.0 / y.sum() - shift
    sigma_g = MixedStrategy.from_weights(x)
    sigma_d = MixedStrategy.from_weights(y)
    value = expected_utility(U, sigma_g, sigma_d)

    logger.debug("Solved meta-game", shape=U.shape, value=value, row_value=row_value, col_value=col_value)
    return MetaSolution(sigma_g=sigma_g, sigma_d=sigma_d, value=value, row_value=row_value, col_value=col_value)


def augment(
    U: PayoffMatrix,
    new_row: Sequence[float] | np.ndarray,
    new_col: Sequence[float] | np.ndarray,
    corner: float,
    row_id: Optional[int] = None,
    col_id: Optional[int] = None,
) -> PayoffMatrix:
    """
    Append one generator row and one discriminator column.

    new_row holds the new generator against each existing discriminator
    (length n), new_col each existing generator against the new
    discriminator (length m), corner the new pair.
    """
    new_row = np.asarray(new_row, dtype=np.float64).reshape(-1)
    new_col = np.asarray(new_col, dtype=np.float64).reshape(-1)
    if new_row.size != U.n or new_col.size != U.m:
        raise DimensionError(
            detail=f"row of length {new_row.size} and column of length {new_col.size} for a {U.m}x{U.n} matrix"
        )

    entries = np.empty((U.m + 1, U.n + 1))
    entries[: U.m, : U.n] = U.entries
    entries[U.m, : U.n] = new_row
    entries[: U.m, U.n] = new_col
    entries[U.m, U.n] = corner

    row_ids = U.row_ids + (max(U.row_ids) + 1 if row_id is None else row_id,)
    col_ids = U.col_ids + (max(U.col_ids) + 1 if col_id is None else col_id,)
    return PayoffMatrix(entries, row_ids=row_ids, col_ids=col_ids)


@dataclass(frozen=True)
class TerminationIncrements:
    """Utility increments of the newest best responses."""

    gen_inc: float
    dis_inc: float

    def converged(self, epsilon: float) -> bool:
        # The second test is on -disInc, exactly as the termination rule states it
        return self.gen_inc < epsilon and -self.dis_inc < epsilon


def termination_increments(
    U: PayoffMatrix, sigma_g: MixedStrategy, sigma_d: MixedStrategy
) -> TerminationIncrements:
    """genInc and disInc for the last row and column of U."""

    equilibrium = expected_utility(U, sigma_g, sigma_d)
    newest_generator = float(U.entries[U.m - 1, :] @ sigma_d.probs)
    newest_discriminator = float(sigma_g.probs @ U.entries[:, U.n - 1])
    return TerminationIncrements(
        gen_inc=newest_generator - equilibrium,
        dis_inc=-newest_discriminator + equilibrium,
    )


def termination_check(
    U: PayoffMatrix, sigma_g: MixedStrategy, sigma_d: MixedStrategy, epsilon: float
) -> bool:
    """True when neither newest best response improves on the equilibrium by epsilon."""

    return termination_increments(U, sigma_g, sigma_d).converged(epsilon)


def selection_matrix(removed: Sequence[int], b: int) -> np.ndarray:
    """J_{I,b}: identity of size b with the rows listed in `removed` deleted."""

    removed_set = set(removed)
    keep = [i for i in range(b) if i not in removed_set]
    return np.eye(b)[keep]


def _indices_to_prune(probs: np.ndarray, s: int) -> list[int]:
    size = probs.size
    if size <= s:
        return []
    floor = max(2, s - 1)
    lowest = probs.min()
    ties = [i for i in range(size) if probs[i] <= lowest + _TIE_TOLERANCE]
    return ties[: max(0, size - floor)]


class PruneResult(NamedTuple):
    matrix: PayoffMatrix
    kept_rows: tuple[int, ...]
    kept_cols: tuple[int, ...]


def prune(U: PayoffMatrix, sigma_g: MixedStrategy, sigma_d: MixedStrategy, s: int) -> PruneResult:
    """
    Drop minimum-probability strategies of any player whose support exceeds s.

    Ties are removed oldest first, never leaving fewer than max(2, s - 1)
    strategies. The returned index lists are positions in U, so callers can
    drop the same members from their support sets.
    """
    if s < 2:
        raise ConfigError(f"Support capacity s must be at least 2, got {s}.")
    _check_lengths(U, sigma_g, sigma_d)

    removed_rows = _indices_to_prune(sigma_g.probs, s)
    removed_cols = _indices_to_prune(sigma_d.probs, s)
    if not removed_rows and not removed_cols:
        return PruneResult(U, tuple(range(U.m)), tuple(range(U.n)))

    J_g = selection_matrix(removed_rows, U.m)
    J_d = selection_matrix(removed_cols, U.n)
    kept_rows = tuple(i for i in range(U.m) if i not in removed_rows)
    kept_cols = tuple(j for j in range(U.n) if j not in removed_cols)
    pruned = PayoffMatrix(
        J_g @ U.entries @ J_d.T,
        row_ids=tuple(U.row_ids[i] for i in kept_rows),
        col_ids=tuple(U.col_ids[j] for j in kept_cols),
    )
    logger.debug("Pruned meta-game", removed_rows=removed_rows, removed_cols=removed_cols, shape=pruned.shape)
    return PruneResult(pruned, kept_rows, kept_cols)
