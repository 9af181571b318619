import numpy as np
import pytest

from core.exceptions import ConfigError, DimensionError, InvalidStrategyError, NonFiniteError
from infrastructure.models.game import MetaSolution, MixedStrategy, PayoffMatrix
from services.meta_game import (
    augment,
    expected_utility,
    exploitability,
    prune,
    selection_matrix,
    solve_zero_sum,
    termination_check,
    termination_increments,
)

MATCHING_PENNIES = [[1.0, -1.0], [-1.0, 1.0]]


def test_matching_pennies_equilibrium():
    solution = solve_zero_sum(PayoffMatrix(np.array(MATCHING_PENNIES)))

    assert solution.value == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(solution.sigma_g.probs, [0.5, 0.5], atol=1e-9)
    np.testing.assert_allclose(solution.sigma_d.probs, [0.5, 0.5], atol=1e-9)


def test_pure_saddle_point():
    solution = solve_zero_sum(PayoffMatrix(np.array([[2.0, 3.0], [0.0, 1.0]])))

    assert solution.value == pytest.approx(2.0, abs=1e-9)
    np.testing.assert_allclose(solution.sigma_g.probs, [1.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(solution.sigma_d.probs, [1.0, 0.0], atol=1e-9)


def test_one_by_one_game():
    solution = solve_zero_sum(PayoffMatrix(np.array([[-3.5]])))

    assert solution.value == pytest.approx(-3.5)
    assert solution.sigma_g.tolist() == [1.0]
    assert solution.sigma_d.tolist() == [1.0]


def test_random_games_are_solved_exactly():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        m, n = rng.integers(1, 11, size=2)
        U = PayoffMatrix(rng.uniform(-10, 10, size=(m, n)))
        solution = solve_zero_sum(U)

        assert exploitability(U, solution.sigma_g, solution.sigma_d) <= 1e-6
        assert solution.row_value == pytest.approx(solution.col_value, abs=1e-8)
        assert solution.value == pytest.approx(solution.row_value, abs=1e-6)


def test_constant_shift_moves_value_only():
    rng = np.random.default_rng(7)
    entries = rng.uniform(-1, 1, size=(4, 3))
    base = solve_zero_sum(PayoffMatrix(entries))
    shifted = solve_zero_sum(PayoffMatrix(entries + 5.0))

    assert shifted.value == pytest.approx(base.value + 5.0, abs=1e-8)


def test_payoff_matrix_rejects_non_finite_entries():
    with pytest.raises(NonFiniteError):
        PayoffMatrix(np.array([[1.0, np.nan]]))


def test_payoff_matrix_rejects_empty_grid():
    with pytest.raises(DimensionError):
        PayoffMatrix(np.zeros((0, 2)))


def test_mixed_strategy_validation():
    with pytest.raises(InvalidStrategyError):
        MixedStrategy(np.array([0.6, 0.6]))
    with pytest.raises(InvalidStrategyError):
        MixedStrategy(np.array([1.2, -0.2]))
    assert MixedStrategy.from_weights([2.0, -1e-12, 2.0]).tolist() == [0.5, 0.0, 0.5]


def test_expected_utility_checks_lengths():
    U = PayoffMatrix(np.array(MATCHING_PENNIES))
    with pytest.raises(DimensionError):
        expected_utility(U, MixedStrategy.uniform(3), MixedStrategy.uniform(2))


def test_augment_appends_row_column_and_corner():
    U = PayoffMatrix(np.array([[1.0, 2.0]]), row_ids=(4,), col_ids=(5, 7))
    augmented = augment(U, new_row=[3.0, 4.0], new_col=[5.0], corner=6.0, row_id=8, col_id=9)

    np.testing.assert_array_equal(augmented.entries, [[1.0, 2.0, 5.0], [3.0, 4.0, 6.0]])
    assert augmented.row_ids == (4, 8)
    assert augmented.col_ids == (5, 7, 9)
    np.testing.assert_array_equal(U.entries, [[1.0, 2.0]])


def test_augment_rejects_wrong_lengths():
    U = PayoffMatrix(np.eye(2))
    with pytest.raises(DimensionError):
        augment(U, new_row=[1.0], new_col=[1.0, 2.0], corner=0.0)


@pytest.mark.parametrize("epsilon", [1e-6, 1e-3, 1.0])
def test_termination_when_newest_strategies_copy_support(epsilon):
    U = PayoffMatrix(np.array(MATCHING_PENNIES))
    augmented = augment(U, new_row=U.entries[0], new_col=U.entries[:, 0], corner=U.entries[0, 0])
    solution = solve_zero_sum(augmented)

    assert termination_check(augmented, solution.sigma_g, solution.sigma_d, epsilon)


@pytest.mark.parametrize("epsilon", [0.1, 0.25, 0.5])
def test_no_termination_when_new_row_improves(epsilon):
    delta = 0.5
    U = PayoffMatrix(np.array([[0.0], [delta]]))
    sigma_g = MixedStrategy.pure(0, 2)
    sigma_d = MixedStrategy.pure(0, 1)

    increments = termination_increments(U, sigma_g, sigma_d)
    assert increments.gen_inc == pytest.approx(delta)
    assert not termination_check(U, sigma_g, sigma_d, epsilon)


def test_termination_increment_signs():
    U = PayoffMatrix(np.array([[1.0, 3.0], [2.0, 0.0]]))
    sigma_g = MixedStrategy(np.array([0.5, 0.5]))
    sigma_d = MixedStrategy(np.array([0.5, 0.5]))

    increments = termination_increments(U, sigma_g, sigma_d)
    # equilibrium utility 1.5; newest row 1.0; newest column 1.5
    assert increments.gen_inc == pytest.approx(-0.5)
    assert increments.dis_inc == pytest.approx(0.0)


def test_selection_matrix_removes_rows():
    np.testing.assert_array_equal(selection_matrix([1], 3), [[1, 0, 0], [0, 0, 1]])


def test_prune_drops_minimum_probability_strategies():
    rng = np.random.default_rng(0)
    U = PayoffMatrix(rng.uniform(-1, 1, size=(3, 3)), row_ids=(10, 11, 12), col_ids=(20, 21, 22))
    sigma_g = MixedStrategy(np.array([0.5, 0.1, 0.4]))
    sigma_d = MixedStrategy(np.array([0.2, 0.3, 0.5]))

    result = prune(U, sigma_g, sigma_d, s=2)

    assert result.kept_rows == (0, 2)
    assert result.kept_cols == (1, 2)
    assert result.matrix.row_ids == (10, 12)
    assert result.matrix.col_ids == (21, 22)
    np.testing.assert_array_equal(result.matrix.entries, U.entries[np.ix_([0, 2], [1, 2])])


def test_prune_ties_remove_oldest_first_and_keep_floor():
    U = PayoffMatrix(np.zeros((4, 1)))
    sigma_g = MixedStrategy(np.array([0.0, 0.0, 0.0, 1.0]))
    sigma_d = MixedStrategy.pure(0, 1)

    result = prune(U, sigma_g, sigma_d, s=3)

    # floor max(2, s - 1) = 2 survivors; the oldest tied strategies go first
    assert result.kept_rows == (2, 3)
    assert result.kept_cols == (0,)


def test_prune_within_capacity_is_identity():
    U = PayoffMatrix(np.eye(2))
    result = prune(U, MixedStrategy.uniform(2), MixedStrategy.uniform(2), s=2)

    assert result.matrix is U


def test_prune_rejects_small_capacity():
    U = PayoffMatrix(np.eye(2))
    with pytest.raises(ConfigError):
        prune(U, MixedStrategy.uniform(2), MixedStrategy.uniform(2), s=1)


def test_matrix_csv_and_solution_json_round_trip():
    U = PayoffMatrix(np.array([[0.1, -2.5], [3.0, 1e-17]]), col_ids=(3, 9))
    parsed = PayoffMatrix.from_csv(U.to_csv(), header=True)

    np.testing.assert_array_equal(parsed.entries, U.entries)
    assert parsed.col_ids == (3, 9)

    solution = solve_zero_sum(U)
    restored = MetaSolution.from_json(solution.to_json())
    assert restored.value == solution.value
    assert restored.sigma_g.tolist() == solution.sigma_g.tolist()


@pytest.mark.parametrize(
    ("entries", "sigma_g", "sigma_d", "epsilon", "expected"),
    [
        ([[0.0, 0.0], [0.0, 0.0]], [0.5, 0.5], [0.5, 0.5], 1e-3, True),
        ([[0.0, 0.0], [1.0, 0.0]], [0.0, 1.0], [0.0, 1.0], 1e-6, True),
        ([[0.0, -5.0], [10.0, 0.0]], [1.0, 0.0], [1.0, 0.0], 1e-6, False),
    ],
)
def test_termination_hand_evaluated(entries, sigma_g, sigma_d, epsilon, expected):
    U = PayoffMatrix(np.array(entries))
    g = MixedStrategy(np.array(sigma_g))
    d = MixedStrategy(np.array(sigma_d))

    assert bool(termination_check(U, g, d, epsilon)) == expected


def test_termination_rejects_mismatched_strategies():
    with pytest.raises(DimensionError):
        termination_check(PayoffMatrix(np.eye(2)), MixedStrategy.uniform(3), MixedStrategy.uniform(2), 1e-6)


@pytest.mark.parametrize(("scale", "offset"), [(0.5, -2.0), (3.0, 4.0), (10.0, 0.0)])
def test_positive_affine_payoffs_keep_strategies(scale, offset):
    rng = np.random.default_rng(31)
    for _ in range(20):
        entries = rng.uniform(-1, 1, size=(5, 4))
        base = solve_zero_sum(PayoffMatrix(entries))
        scaled = solve_zero_sum(PayoffMatrix(scale * entries + offset))

        np.testing.assert_allclose(scaled.sigma_g.probs, base.sigma_g.probs, atol=1e-6)
        np.testing.assert_allclose(scaled.sigma_d.probs, base.sigma_d.probs, atol=1e-6)
        assert scaled.value == pytest.approx(scale * base.value + offset, abs=1e-6)


def test_pruning_an_unplayed_augmentation_restores_the_matrix():
    U = PayoffMatrix(np.array([[0.2, -0.4], [0.7, 0.1]]), row_ids=(0, 2), col_ids=(1, 3))
    augmented = augment(U, new_row=[0.5, 0.5], new_col=[-1.0, 1.0], corner=0.0, row_id=4, col_id=5)
    sigma = MixedStrategy(np.array([0.5, 0.5, 0.0]))

    result = prune(augmented, sigma, sigma, s=2)

    np.testing.assert_array_equal(result.matrix.entries, U.entries)
    assert result.matrix.row_ids == U.row_ids
    assert result.matrix.col_ids == U.col_ids


def test_termination_is_monotone_in_epsilon():
    rng = np.random.default_rng(5)
    epsilons = [1e-6, 1e-3, 1e-2, 1e-1, 1.0]
    for _ in range(200):
        m, n = rng.integers(1, 6, size=2)
        U = PayoffMatrix(rng.uniform(-1, 1, size=(m, n)))
        sigma_g = MixedStrategy.from_weights(rng.uniform(0, 1, size=m))
        sigma_d = MixedStrategy.from_weights(rng.uniform(0, 1, size=n))

        verdicts = [termination_check(U, sigma_g, sigma_d, epsilon) for epsilon in epsilons]
        # once true, stays true for every larger epsilon
        assert verdicts == sorted(verdicts)


def test_prune_uniform_three_to_capacity_two():
    U = PayoffMatrix(np.arange(9.0).reshape(3, 3))
    uniform = MixedStrategy.uniform(3)

    result = prune(U, uniform, uniform, s=2)

    assert result.kept_rows == (1, 2)
    assert result.kept_cols == (1, 2)
    assert result.matrix.shape == (2, 2)
