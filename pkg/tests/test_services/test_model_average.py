"""
Tests for the averaging weight schemes, the averaged model and its predictions.
"""

import numpy as np
import pytest

from jvcqma.core.exceptions import EmptyCandidateSetError, EstimationError, ShapeError
from jvcqma.services.bandwidth import PilotSelection
from jvcqma.services.core_math import check_loss
from jvcqma.services.dataset import Dataset
from jvcqma.services.model_average import (
    AveragedModel,
    WeightScheme,
    bic_values,
    combine_predictions,
    cv_criterion,
    equal_weights,
    fit_averaged_model,
    from_fit_entry,
    loocv_weights,
    predict_averaged,
    smoothed_bic_weights,
    to_fit_entry,
    weights_from_bic,
)
from jvcqma.services.qr import WeightVector
from jvcqma.services.vcm_estimator import CandidateMatrix, candidate_prediction_matrix, in_sample_predictions

GRID = [0.3, 0.6, 1.2]


def loo_matrix(values: np.ndarray, failed: np.ndarray = None, tau: float = 0.5) -> CandidateMatrix:
    values = np.asarray(values, dtype=float)
    mask = np.zeros(values.shape, dtype=bool) if failed is None else failed
    return CandidateMatrix(values, mask, tuple(range(values.shape[1])), tau, leave_one_out=True)


class TestEqualAndBicWeights:
    """Closed-form weight schemes."""

    def test_equal(self):
        assert equal_weights(4).to_list() == [0.25] * 4
        with pytest.raises(EmptyCandidateSetError):
            equal_weights(0)

    def test_bic_values(self):
        bic = bic_values([0.5, 1.0], n=100, width=5)
        expected = 2 * 100 * np.log([0.5, 1.0]) + 4 * np.log(100)
        np.testing.assert_allclose(bic, expected)

    def test_softmax_is_shift_stable(self):
        w = weights_from_bic([1000.0, 1002.0])
        first = 1.0 / (1.0 + np.exp(-1.0))
        np.testing.assert_allclose(w.weights, [first, 1.0 - first])
        np.testing.assert_allclose(weights_from_bic([5000.0, 5002.0]).weights, w.weights)

    def test_zero_loss_candidates_share_weight(self):
        bic = bic_values([0.0, 0.3, 0.0], n=50, width=3)
        assert np.isneginf(bic[[0, 2]]).all()
        assert weights_from_bic(bic).to_list() == [0.5, 0.0, 0.5]

    def test_smoothed_bic_prefers_the_true_index(self, vc_data):
        w = smoothed_bic_weights(vc_data, 0.5, [0.4, 0.6])
        assert w.weights.sum() == pytest.approx(1.0)
        assert w.weights[0] > w.weights[1]

    def test_bic_counts_only_fitted_rows(self, vc_data):
        fitted = in_sample_predictions(vc_data, 0.5, [0.4, 0.6])
        failed = fitted.failed.copy()
        failed[:10, 1] = True
        values = np.where(failed, np.nan, fitted.values)
        partial = CandidateMatrix(values, failed, fitted.column_index_map, 0.5)
        losses = [
            float(np.mean(check_loss(0.5, vc_data.y - fitted.values[:, 0]))),
            float(np.mean(check_loss(0.5, vc_data.y[10:] - fitted.values[10:, 1]))),
        ]
        expected = weights_from_bic(bic_values(losses, [60, 50], vc_data.width))
        w = smoothed_bic_weights(vc_data, 0.5, [0.4, 0.6], fitted=partial)
        np.testing.assert_allclose(w.weights, expected.weights, atol=1e-12)

    def test_bic_values_per_candidate_counts(self):
        bic = bic_values([0.5, 0.5], n=[100, 50], width=5)
        expected = 2 * np.array([100, 50]) * np.log(0.5) + 4 * np.log([100, 50])
        np.testing.assert_allclose(bic, expected)


class TestLoocvWeights:
    """Simplex weights from a leave-one-out matrix."""

    def test_exact_candidate_wins(self, rng):
        y = rng.standard_normal(30)
        loo = loo_matrix(np.column_stack([y + 0.3, y, y + rng.standard_normal(30)]))
        w = loocv_weights(loo, y)
        np.testing.assert_allclose(w.weights, [0.0, 1.0, 0.0], atol=1e-12)
        assert w.objective == pytest.approx(0.0, abs=1e-12)

    def test_not_worse_than_references(self, rng):
        y = rng.standard_normal(40)
        loo = loo_matrix(y[:, None] + rng.standard_normal((40, 3)))
        w = loocv_weights(loo, y)
        assert cv_criterion(loo, y, w) <= cv_criterion(loo, y, equal_weights(3)) + 1e-8
        for k in range(3):
            assert cv_criterion(loo, y, w) <= cv_criterion(loo, y, WeightVector.vertex(3, k)) + 1e-8

    def test_failed_rows_are_left_out(self, rng):
        y = rng.standard_normal(10)
        values = np.column_stack([y, y + 1.0])
        failed = np.zeros((10, 2), dtype=bool)
        values[3, 0] = np.nan
        failed[3, 0] = True
        w = loocv_weights(loo_matrix(values, failed), y)
        assert w.to_list() == [1.0, 0.0]

    def test_candidate_failing_everywhere(self, rng):
        y = rng.standard_normal(5)
        failed = np.zeros((5, 2), dtype=bool)
        failed[:, 1] = True
        with pytest.raises(EstimationError):
            loocv_weights(loo_matrix(np.column_stack([y, np.full(5, np.nan)]), failed), y)

    def test_response_length_checked(self, rng):
        with pytest.raises(ShapeError):
            loocv_weights(loo_matrix(rng.standard_normal((5, 2))), np.zeros(4))


class TestCombinePredictions:
    """Weighted combination with skipped candidates."""

    def test_skips_negligible_failed_candidate(self):
        matrix = CandidateMatrix(
            np.array([[1.0, np.nan], [2.0, 4.0]]),
            np.array([[False, True], [False, False]]),
            (0, 1),
            0.5,
        )
        out = combine_predictions(matrix, np.array([1.0 - 1e-13, 1e-13]))
        np.testing.assert_allclose(out, [1.0, 2.0], atol=1e-12)

    def test_failed_active_candidate_gives_nan(self):
        matrix = CandidateMatrix(
            np.array([[1.0, np.nan], [2.0, 4.0]]),
            np.array([[False, True], [False, False]]),
            (0, 1),
            0.5,
        )
        out = combine_predictions(matrix, np.array([0.5, 0.5]))
        assert np.isnan(out[0])
        assert out[1] == pytest.approx(3.0)

    def test_affine_in_weights(self, rng):
        values = rng.standard_normal((8, 3))
        matrix = CandidateMatrix(values, np.zeros((8, 3), dtype=bool), (0, 1, 2), 0.5)
        w, v = np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.4, 0.0])
        mid = combine_predictions(matrix, (w + v) / 2)
        expected = (combine_predictions(matrix, w) + combine_predictions(matrix, v)) / 2
        np.testing.assert_allclose(mid, expected, atol=1e-12)


class TestAveragedModel:
    """fit_averaged_model and predict_averaged."""

    def test_loocv_fit_records_diagnostics(self, vc_data):
        model = fit_averaged_model(vc_data, 0.5, grid=GRID)
        d = model.diagnostics
        assert model.scheme is WeightScheme.LOOCV
        assert model.weights.weights.sum() == pytest.approx(1.0)
        assert d["cv_objective"] <= d["cv_equal"] + 1e-8
        assert all(d["cv_objective"] <= v + 1e-8 for v in d["cv_vertices"])
        assert d["loo_failures"] == 0
        assert model.candidate_names() == ["X1", "X2"]

    def test_true_index_gets_most_weight(self, vc_data):
        model = fit_averaged_model(vc_data, 0.5, grid=GRID)
        assert model.weights.weights[0] > 0.5

    @pytest.mark.parametrize("scheme", ["equal", "bic"])
    def test_other_schemes(self, vc_data, scheme):
        model = fit_averaged_model(vc_data, 0.5, scheme=scheme, grid=GRID)
        assert model.scheme is WeightScheme(scheme)
        assert model.diagnostics == {}
        if scheme == "equal":
            assert model.weights.to_list() == [0.5, 0.5]

    def test_reuses_pilots(self, vc_data):
        pilots = PilotSelection.fixed(vc_data, [0.4, 0.6])
        model = fit_averaged_model(vc_data, 0.3, scheme="equal", pilots=pilots)
        assert model.bandwidths.pilot == (0.4, 0.6)

    def test_predicts_linear_truth(self, linear_data, rng):
        model = fit_averaged_model(linear_data, 0.5, grid=[0.5, 1.0])
        queries = rng.uniform(-0.8, 0.8, (5, 2))
        np.testing.assert_allclose(
            predict_averaged(model, queries), 1.0 + 2.0 * queries[:, 0] - queries[:, 1], atol=1e-6
        )

    def test_prediction_is_weighted_candidate_matrix(self, vc_data, rng):
        model = fit_averaged_model(vc_data, 0.75, grid=GRID)
        queries = rng.uniform(-0.9, 0.9, (6, 2))
        matrix = candidate_prediction_matrix(vc_data, queries, 0.75, model.bandwidths.adjusted)
        expected = combine_predictions(matrix, model.weights)
        np.testing.assert_allclose(predict_averaged(model, queries), expected, atol=1e-10)

    def test_single_query_row(self, vc_data):
        model = fit_averaged_model(vc_data, 0.5, scheme="equal", grid=GRID)
        assert predict_averaged(model, np.array([0.1, 0.2])).shape == (1,)

    def test_empty_queries(self, vc_data):
        model = fit_averaged_model(vc_data, 0.5, scheme="equal", grid=GRID)
        assert predict_averaged(model, np.empty((0, 2))).shape == (0,)

    def test_query_width_checked(self, vc_data):
        model = fit_averaged_model(vc_data, 0.5, scheme="equal", grid=GRID)
        with pytest.raises(ShapeError):
            predict_averaged(model, np.zeros((2, 3)))

    def test_weight_count_checked(self, vc_data):
        model = fit_averaged_model(vc_data, 0.5, scheme="equal", grid=GRID)
        with pytest.raises(ShapeError):
            AveragedModel(equal_weights(3), model.scheme, model.bandwidths, 0.5, vc_data)

    def test_candidate_order_does_not_matter(self, vc_data, rng):
        swapped = Dataset(vc_data.y, vc_data.x[:, ::-1], continuous_cols=(0, 1))
        model = fit_averaged_model(vc_data, 0.5, pilots=PilotSelection.fixed(vc_data, [0.4, 0.6]))
        mirrored = fit_averaged_model(swapped, 0.5, pilots=PilotSelection.fixed(swapped, [0.6, 0.4]))
        np.testing.assert_allclose(mirrored.weights.weights, model.weights.weights[::-1], atol=1e-8)
        queries = rng.uniform(-0.8, 0.8, (5, 2))
        np.testing.assert_allclose(
            predict_averaged(mirrored, queries[:, ::-1]), predict_averaged(model, queries), atol=1e-8
        )

    def test_fit_entry_rebuilds_the_model(self, mixed_data, rng):
        model = fit_averaged_model(mixed_data, 0.4, grid=GRID)
        entry = to_fit_entry(model)
        rebuilt = from_fit_entry(entry, mixed_data, "loocv", "gauss")
        queries = np.column_stack([rng.uniform(-0.9, 0.9, (4, 2)), [0.0, 1.0, 1.0, 0.0]])
        np.testing.assert_allclose(predict_averaged(rebuilt, queries), predict_averaged(model, queries))
        assert entry.cv_objective == pytest.approx(model.diagnostics["cv_objective"])
