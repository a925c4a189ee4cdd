"""
Tests for the exact quantile LP solvers.

The weighted quantile regression is checked against exhaustive enumeration of
basic solutions and against scikit-learn's QuantileRegressor; the simplex
combination against a dense grid of the probability simplex.
"""

import itertools
import time

import numpy as np
import pytest
from sklearn.linear_model import QuantileRegressor

from jvcqma.core.exceptions import (
    EmptyCandidateSetError,
    ShapeError,
    SolverError,
    UnboundedProblemError,
    UnderdeterminedLocalFit,
    ValidationError,
)
from jvcqma.services.evaluation import simplex_grid
from jvcqma.services.qr import (
    SimplexWeightProblem,
    SolutionStatus,
    WeightedQrProblem,
    WeightVector,
    evaluate_combination_loss,
    solve_simplex_weights,
    solve_standard_form,
    solve_weighted_qr,
)

TAUS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


def enumerate_basic_solutions(problem: WeightedQrProblem) -> float:
    """Smallest objective over every coefficient vector interpolating d observations."""
    X, y = problem.design, problem.responses
    d = X.shape[1]
    best = np.inf
    for rows in itertools.combinations(range(X.shape[0]), d):
        sub = X[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        beta = np.linalg.solve(sub, y[list(rows)])
        best = min(best, problem.objective(beta))
    return best


def random_qr_problem(rng: np.random.Generator) -> WeightedQrProblem:
    d = int(rng.integers(1, 4))
    m = int(rng.integers(d, 9))
    design = np.column_stack([np.ones(m), rng.standard_normal((m, d - 1))])
    responses = design @ rng.standard_normal(d) + rng.standard_normal(m)
    weights = rng.uniform(0.1, 2.0, m)
    return WeightedQrProblem(responses, design, weights, TAUS[int(rng.integers(len(TAUS)))])


class TestWeightedQr:
    """solve_weighted_qr."""

    def test_matches_basic_solution_enumeration(self, rng):
        for _ in range(200):
            problem = random_qr_problem(rng)
            solution = solve_weighted_qr(problem)
            oracle = enumerate_basic_solutions(problem)
            assert solution.objective == pytest.approx(oracle, abs=1e-8 * max(1.0, oracle))

    def test_intercept_only_returns_sample_quantile(self, rng):
        for _ in range(500):
            m = int(rng.integers(1, 31))
            y = rng.standard_normal(m) * rng.uniform(0.5, 5.0)
            tau = float(rng.uniform(0.05, 0.95))
            problem = WeightedQrProblem.unweighted(y, np.ones((m, 1)), tau)
            solution = solve_weighted_qr(problem)
            breakpoints = min(problem.objective(np.array([c])) for c in y)
            assert solution.objective <= breakpoints + 1e-12 * max(1.0, breakpoints)

    @pytest.mark.parametrize("tau", [0.1, 0.5, 0.9])
    def test_agrees_with_sklearn(self, rng, tau):
        m = 60
        design = np.column_stack([np.ones(m), rng.standard_normal((m, 2))])
        y = design @ np.array([1.0, -2.0, 0.5]) + rng.standard_t(3, m)
        weights = rng.uniform(0.2, 1.5, m)
        problem = WeightedQrProblem(y, design, weights, tau)

        ours = solve_weighted_qr(problem)
        reference = QuantileRegressor(quantile=tau, alpha=0.0, fit_intercept=False, solver="highs")
        reference.fit(design, y, sample_weight=weights)

        oracle = problem.objective(reference.coef_)
        assert ours.objective <= oracle + 1e-7 * (1.0 + oracle)
        assert ours.objective >= oracle - 1e-6 * (1.0 + oracle)

    def test_exact_fit_has_zero_objective(self):
        x = np.linspace(-1, 1, 9)
        design = np.column_stack([np.ones(9), x])
        solution = solve_weighted_qr(WeightedQrProblem.unweighted(3.0 - x, design, 0.4))
        np.testing.assert_allclose(solution.coefficients, [3.0, -1.0], atol=1e-10)
        assert solution.objective == pytest.approx(0.0, abs=1e-12)
        assert solution.dual_infeasibility <= 1e-9

    def test_ties_are_reported_as_degenerate(self):
        # Even sample size at the median: every point between the middle two is optimal.
        problem = WeightedQrProblem.unweighted([1.0, 2.0, 3.0, 4.0], np.ones((4, 1)), 0.5)
        solution = solve_weighted_qr(problem)
        assert solution.status == SolutionStatus.DEGENERATE
        assert 2.0 - 1e-12 <= solution.coefficients[0] <= 3.0 + 1e-12

    def test_drops_zero_weight_rows(self):
        design = np.column_stack([np.ones(4), [0.0, 1.0, 2.0, 3.0]])
        problem = WeightedQrProblem([0.0, 1.0, 100.0, 3.0], design, [1.0, 1.0, 0.0, 1.0], 0.5)
        solution = solve_weighted_qr(problem)
        np.testing.assert_allclose(solution.coefficients, [0.0, 1.0], atol=1e-10)

    def test_underdetermined(self):
        design = np.column_stack([np.ones(3), [0.0, 1.0, 2.0]])
        problem = WeightedQrProblem([1.0, 2.0, 3.0], design, [1.0, 0.0, 0.0], 0.5)
        with pytest.raises(UnderdeterminedLocalFit) as info:
            solve_weighted_qr(problem)
        assert info.value.positive == 1
        assert info.value.required == 2

    def test_problem_validation(self):
        with pytest.raises(ShapeError):
            WeightedQrProblem([1.0, 2.0], np.ones((3, 1)), [1.0, 1.0, 1.0], 0.5)
        with pytest.raises(ValidationError):
            WeightedQrProblem([1.0, 2.0], np.ones((2, 1)), [1.0, -1.0], 0.5)
        with pytest.raises(ValidationError):
            WeightedQrProblem([1.0, np.inf], np.ones((2, 1)), [1.0, 1.0], 0.5)
        with pytest.raises(ValidationError):
            WeightedQrProblem([1.0, 2.0], np.ones((2, 1)), [1.0, 1.0], 1.0)

    def test_scale_equivariance(self, rng):
        m = 40
        design = np.column_stack([np.ones(m), rng.standard_normal((m, 2))])
        y = design @ np.array([0.5, 1.0, -1.5]) + rng.standard_normal(m)
        weights = rng.uniform(0.2, 1.5, m)
        base = solve_weighted_qr(WeightedQrProblem(y, design, weights, 0.3))
        scaled = solve_weighted_qr(WeightedQrProblem(3.7 * y, design, weights, 0.3))
        np.testing.assert_allclose(scaled.coefficients, 3.7 * base.coefficients, rtol=1e-8, atol=1e-10)
        assert scaled.objective == pytest.approx(3.7 * base.objective, rel=1e-10)

    @pytest.mark.parametrize("tau", [0.25, 0.5, 0.9])
    def test_no_coordinate_move_improves(self, rng, tau):
        m = 50
        design = np.column_stack([np.ones(m), rng.standard_normal((m, 3))])
        y = design @ rng.standard_normal(4) + rng.standard_t(4, m)
        problem = WeightedQrProblem(y, design, rng.uniform(0.1, 1.0, m), tau)
        solution = solve_weighted_qr(problem)
        for k in range(4):
            for step in (1e-4, -1e-4):
                moved = solution.coefficients.copy()
                moved[k] += step
                assert problem.objective(moved) >= solution.objective - 1e-9


class TestWarmStart:
    """Starting vertices taken from a neighbouring fit."""

    @pytest.fixture
    def local_problem(self, rng) -> WeightedQrProblem:
        m = 200
        u = rng.uniform(-1.0, 1.0, m)
        others = rng.standard_normal((m, 4))
        design = np.column_stack([np.ones(m), others, u, others * u[:, None]])
        y = np.sin(2.0 * u) + others @ np.array([1.0, -0.5, 0.0, 0.3]) + 0.5 * rng.standard_normal(m)
        return WeightedQrProblem(y, design, np.exp(-0.5 * (u / 0.5) ** 2), 0.5)

    def test_interpolated_rows(self, local_problem):
        solution = solve_weighted_qr(local_problem)
        rows = solution.basic_rows
        assert rows.shape == (local_problem.n_coefficients,)
        residuals = local_problem.responses[rows] - local_problem.design[rows] @ solution.coefficients
        np.testing.assert_allclose(residuals, 0.0, atol=1e-8)

    def test_optimal_rows_need_no_pivots(self, local_problem):
        cold = solve_weighted_qr(local_problem)
        warm = solve_weighted_qr(local_problem, start=cold.basic_rows)
        assert warm.iterations == 0
        assert warm.objective == pytest.approx(cold.objective, rel=1e-12)
        np.testing.assert_allclose(warm.coefficients, cold.coefficients, atol=1e-10)

    def test_neighbouring_problem(self, local_problem):
        first = solve_weighted_qr(local_problem)
        shifted = local_problem.design[:, 5] - 0.1
        weights = np.exp(-0.5 * (shifted / 0.5) ** 2)
        neighbour = WeightedQrProblem(local_problem.responses, local_problem.design, weights, 0.5)
        warm = solve_weighted_qr(neighbour, start=first.basic_rows)
        cold = solve_weighted_qr(neighbour)
        assert warm.objective == pytest.approx(cold.objective, rel=1e-10)
        assert warm.iterations <= cold.iterations

    def test_dropped_and_invalid_start_rows(self, local_problem):
        cold = solve_weighted_qr(local_problem)
        weights = local_problem.obs_weights.copy()
        weights[cold.basic_rows[0]] = 0.0
        reduced = WeightedQrProblem(local_problem.responses, local_problem.design, weights, 0.5)
        start = list(cold.basic_rows) + [-1, 10_000]
        warm = solve_weighted_qr(reduced, start=start)
        assert warm.objective == pytest.approx(solve_weighted_qr(reduced).objective, rel=1e-10)
        assert cold.basic_rows[0] not in warm.basic_rows

    def test_repeated_start_rows(self, local_problem):
        cold = solve_weighted_qr(local_problem)
        warm = solve_weighted_qr(local_problem, start=[cold.basic_rows[0]] * 3)
        assert warm.objective == pytest.approx(cold.objective, rel=1e-10)

    def test_local_fit_size_is_fast(self, local_problem):
        started = time.perf_counter()
        solution = solve_weighted_qr(local_problem)
        assert time.perf_counter() - started < 1.0
        assert solution.iterations < 400


class TestSimplexWeights:
    """solve_simplex_weights."""

    def test_not_worse_than_dense_grid(self, rng):
        grid = simplex_grid(3, 0.01)
        for _ in range(100):
            n = int(rng.integers(3, 31))
            y = rng.standard_normal(n)
            M = y[:, None] + rng.standard_normal((n, 3)) * rng.uniform(0.1, 2.0, 3)
            tau = TAUS[int(rng.integers(len(TAUS)))]
            problem = SimplexWeightProblem(y, M, tau)

            w = solve_simplex_weights(problem)
            residuals = y[:, None] - M @ grid.T
            grid_best = float(np.min(np.mean(residuals * (tau - (residuals <= 0)), axis=0)))

            assert w.objective <= grid_best + 1e-6
            assert w.objective == pytest.approx(evaluate_combination_loss(problem, w), abs=1e-12)
            assert np.all(w.weights >= 0)
            assert w.weights.sum() == pytest.approx(1.0, abs=1e-10)

    def test_beats_vertices_and_equal_weights(self, rng):
        y = rng.standard_normal(25)
        M = rng.standard_normal((25, 4))
        problem = SimplexWeightProblem(y, M, 0.7)
        w = solve_simplex_weights(problem)
        references = [evaluate_combination_loss(problem, np.eye(4)[k]) for k in range(4)]
        references.append(evaluate_combination_loss(problem, np.full(4, 0.25)))
        assert w.objective <= min(references) + 1e-9

    def test_perfect_candidate_takes_all_weight(self, rng):
        y = rng.standard_normal(20)
        M = np.column_stack([y + 1.0, y, y + 0.5])
        w = solve_simplex_weights(SimplexWeightProblem(y, M, 0.5))
        np.testing.assert_allclose(w.weights, [0.0, 1.0, 0.0], atol=1e-10)
        assert w.objective == pytest.approx(0.0, abs=1e-12)

    def test_single_candidate(self):
        w = solve_simplex_weights(SimplexWeightProblem([1.0, 2.0], [[0.5], [1.5]], 0.5))
        assert w.to_list() == [1.0]

    def test_empty_candidate_set(self):
        with pytest.raises(EmptyCandidateSetError):
            SimplexWeightProblem([1.0, 2.0], np.empty((2, 0)), 0.5)

    def test_loss_rejects_wrong_length(self):
        problem = SimplexWeightProblem([1.0, 2.0], [[0.5, 1.0], [1.5, 2.0]], 0.5)
        with pytest.raises(ShapeError):
            evaluate_combination_loss(problem, np.array([1.0]))

    def test_candidate_order_does_not_matter(self, rng):
        y = rng.standard_normal(30)
        M = y[:, None] + rng.standard_normal((30, 3)) * np.array([0.3, 0.8, 1.5])
        order = [2, 0, 1]
        base = solve_simplex_weights(SimplexWeightProblem(y, M, 0.4))
        permuted = solve_simplex_weights(SimplexWeightProblem(y, M[:, order], 0.4))
        assert permuted.objective == pytest.approx(base.objective, abs=1e-10)

    def test_no_exchange_move_improves(self, rng):
        y = rng.standard_normal(40)
        M = y[:, None] + rng.standard_normal((40, 4)) * np.array([0.2, 0.5, 0.5, 1.0])
        problem = SimplexWeightProblem(y, M, 0.6)
        w = solve_simplex_weights(problem)
        for a, b in itertools.permutations(range(4), 2):
            step = min(1e-4, w.weights[b])
            if step <= 0.0:
                continue
            moved = w.weights.copy()
            moved[a] += step
            moved[b] -= step
            assert evaluate_combination_loss(problem, moved) >= w.objective - 1e-9


class TestWeightVector:
    """Simplex points."""

    def test_from_raw_clamps_and_renormalizes(self):
        w = WeightVector.from_raw([0.5, 1e-12, 0.5], clamp_tol=1e-10)
        assert w.to_list() == [0.5, 0.0, 0.5]

    def test_rejects_off_simplex(self):
        with pytest.raises(ValidationError):
            WeightVector(np.array([0.6, 0.6]))
        with pytest.raises(ValidationError):
            WeightVector(np.array([1.5, -0.5]))

    def test_vertex(self):
        assert WeightVector.vertex(3, 1).to_list() == [0.0, 1.0, 0.0]
        assert len(WeightVector.vertex(3, 1)) == 3


class TestStandardForm:
    """solve_standard_form on general LPs."""

    def test_phase_one_finds_optimum(self):
        c = np.array([-1.0, -1.0, 0.0, 0.0])
        A = np.array([[1.0, 2.0, 1.0, 0.0], [3.0, 1.0, 0.0, 1.0]])
        b = np.array([4.0, 6.0])
        result = solve_standard_form(c, A, b)
        np.testing.assert_allclose(result.x[:2], [1.6, 1.2], atol=1e-10)
        assert result.objective == pytest.approx(-2.8)
        assert result.dual_infeasibility <= 1e-12

    def test_duals_satisfy_complementary_slackness(self):
        c = np.array([2.0, 3.0, 0.0])
        A = np.array([[1.0, 1.0, -1.0]])
        b = np.array([2.0])
        result = solve_standard_form(c, A, b)
        assert result.objective == pytest.approx(4.0)
        assert float(result.duals @ b) == pytest.approx(result.objective)
        assert np.all(result.reduced_costs >= -1e-12)

    def test_unbounded(self):
        c = np.array([-1.0, 0.0])
        A = np.array([[1.0, -1.0]])
        with pytest.raises(UnboundedProblemError):
            solve_standard_form(c, A, np.array([0.0]), basis=[0])

    def test_infeasible(self):
        c = np.array([1.0, 1.0])
        A = np.array([[1.0, 1.0]])
        with pytest.raises(SolverError):
            solve_standard_form(c, A, np.array([-1.0]))

    def test_cycling_example_terminates(self):
        c = np.array([0.0, 0.0, 0.0, -0.75, 20.0, -0.5, 6.0])
        A = np.array([
            [1.0, 0.0, 0.0, 0.25, -8.0, -1.0, 9.0],
            [0.0, 1.0, 0.0, 0.5, -12.0, -0.5, 3.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        ])
        b = np.array([0.0, 0.0, 1.0])
        result = solve_standard_form(c, A, b, basis=[0, 1, 2])
        assert result.objective == pytest.approx(-1.25)
        np.testing.assert_allclose(A @ result.x, b, atol=1e-12)
