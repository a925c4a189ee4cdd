"""
Model averaging over the varying-coefficient candidates.

Three weighting schemes:

* ``loocv``: simplex weights minimizing the leave-one-out check loss (the
  jackknife estimator);
* ``equal``: 1/p for every candidate;
* ``bic``: softmax of -BIC/2 computed from in-sample candidate fits.

An AveragedModel keeps the weights together with everything needed to rebuild the
candidate predictions: the training data, the bandwidth plan and the kernel.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import structlog

from ..core.config import settings
from ..core.exceptions import EmptyCandidateSetError, EstimationError, ShapeError
from ..schemas.models import FittedTau
from ..workers.pool import WorkerPool
from .bandwidth import BandwidthPlan, PilotSelection, select_pilots
from .core_math import KernelKind, as_quantile_level, mean_check_loss
from .dataset import Dataset
from .qr import SimplexWeightProblem, WeightVector, evaluate_combination_loss, solve_simplex_weights
from .vcm_estimator import (
    CandidateMatrix,
    LooPredictionMatrix,
    candidate_prediction_matrix,
    in_sample_predictions,
    loo_prediction_matrix,
)

logger = structlog.get_logger(__name__)


class WeightScheme(str, Enum):
    """Averaging weight schemes."""
    LOOCV = "loocv"
    EQUAL = "equal"
    SMOOTHED_BIC = "bic"


# ============================================================================
# Weight Schemes
# ============================================================================

def _cv_problem(loo: LooPredictionMatrix, y: np.ndarray) -> SimplexWeightProblem:
    y = np.asarray(y, dtype=float)
    if y.shape != (loo.n_rows,):
        raise ShapeError(
            "Response length must match the prediction matrix rows",
            details={"y": list(y.shape), "rows": loo.n_rows},
        )
    if loo.failed.all(axis=0).any():
        raise EstimationError("A candidate failed on every leave-one-out fit")
    rows = loo.complete_rows
    if not rows.any():
        raise EstimationError("No observation has a complete set of leave-one-out predictions")
    return SimplexWeightProblem(y[rows], loo.values[rows], loo.tau)


def cv_criterion(loo: LooPredictionMatrix, y: np.ndarray, weights: Union[WeightVector, np.ndarray]) -> float:
    """CV_n(w) on the rows where every candidate has a leave-one-out prediction."""
    return evaluate_combination_loss(_cv_problem(loo, y), weights)


def loocv_weights(loo: LooPredictionMatrix, y: np.ndarray, clamp_tol: Optional[float] = None) -> WeightVector:
    """
    Simplex weights minimizing the leave-one-out check loss.

    Rows with a failed leave-one-out fit in any candidate are left out of the
    criterion. Components below ``clamp_tol`` are zeroed and the rest renormalized.
    """
    problem = _cv_problem(loo, y)
    solved = solve_simplex_weights(problem, tol=settings.SOLVER_TOL)
    clamp = settings.WEIGHT_CLAMP_TOL if clamp_tol is None else clamp_tol
    weights = WeightVector.from_raw(solved.weights, clamp_tol=clamp)
    objective = evaluate_combination_loss(problem, weights)
    logger.debug("loocv weights", weights=weights.to_list(), objective=objective, rows=problem.responses.shape[0])
    return WeightVector(weights.weights, objective=objective)


def equal_weights(p: int) -> WeightVector:
    """(1/p, ..., 1/p)."""
    if p < 1:
        raise EmptyCandidateSetError("Model averaging needs at least one candidate")
    return WeightVector(np.full(p, 1.0 / p))


def bic_values(losses: Sequence[float], n: Union[int, Sequence[int]], width: int) -> np.ndarray:
    """BIC_s = 2n_s ln(loss_s) + (p + q - 1) ln n_s; zero loss gives -inf. n may be per candidate."""
    arr = np.asarray(losses, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore"):
        log_loss = np.log(arr)
    return 2.0 * n * log_loss + (width - 1) * np.log(n)


def weights_from_bic(bic: Sequence[float]) -> WeightVector:
    """
    exp(-BIC_s / 2) normalized, computed after subtracting min BIC.

    Candidates with BIC = -inf (zero in-sample loss) take all the weight, split
    equally when there are several.
    """
    arr = np.asarray(bic, dtype=float)
    if arr.size == 0:
        raise EmptyCandidateSetError("Model averaging needs at least one candidate")
    degenerate = np.isneginf(arr)
    if degenerate.any():
        return WeightVector(degenerate / degenerate.sum())
    scores = np.exp(-0.5 * (arr - arr.min()))
    return WeightVector(scores / scores.sum())


def smoothed_bic_weights(
    data: Dataset,
    tau: float,
    bandwidths: Sequence[float],
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    pool: Optional[WorkerPool] = None,
    fitted: Optional[CandidateMatrix] = None,
) -> WeightVector:
    """
    Smoothed-BIC weights from full-sample candidate fits at the training rows.

    ``fitted`` may carry precomputed in-sample predictions. Rows where a candidate
    fit failed are left out of that candidate's loss and of its row count.
    """
    tau = as_quantile_level(tau)
    matrix = fitted if fitted is not None else in_sample_predictions(data, tau, bandwidths, kind, pool)
    losses, counts = [], []
    for k in range(matrix.n_candidates):
        ok = ~matrix.failed[:, k]
        if not ok.any():
            raise EstimationError(f"Candidate {matrix.column_index_map[k]} has no in-sample fit")
        losses.append(mean_check_loss(tau, data.y[ok] - matrix.values[ok, k]))
        counts.append(int(ok.sum()))
    bic = bic_values(losses, counts, data.width)
    weights = weights_from_bic(bic)
    logger.debug("smoothed bic weights", bic=bic.tolist(), weights=weights.to_list())
    return weights


# ============================================================================
# Averaged Model
# ============================================================================

@dataclass(frozen=True, eq=False)
class AveragedModel:
    """Weights plus what is needed to recompute every candidate prediction."""

    weights: WeightVector
    scheme: WeightScheme
    bandwidths: BandwidthPlan
    tau: float
    training_data: Dataset
    kind: KernelKind = KernelKind.GAUSSIAN
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.weights) != self.training_data.p:
            raise ShapeError(
                "One weight per continuous covariate is required",
                details={"weights": len(self.weights), "continuous": self.training_data.p},
            )
        object.__setattr__(self, "tau", float(as_quantile_level(self.tau)))
        object.__setattr__(self, "scheme", WeightScheme(self.scheme))
        object.__setattr__(self, "kind", KernelKind.parse(self.kind))

    @property
    def column_index_map(self) -> tuple:
        return tuple(self.training_data.continuous_cols)

    def candidate_names(self) -> list:
        names = self.training_data.names or ()
        return [names[s] for s in self.column_index_map]


def fit_averaged_model(
    data: Dataset,
    tau: float,
    scheme: Union[str, WeightScheme] = WeightScheme.LOOCV,
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    grid: Optional[Sequence[float]] = None,
    pilots: Optional[PilotSelection] = None,
    pool: Optional[WorkerPool] = None,
) -> AveragedModel:
    """
    Plan bandwidths, then weight the candidates by ``scheme``.

    ``pilots`` reuses an earlier tau-free pilot selection.
    """
    scheme = WeightScheme(scheme)
    kind = KernelKind.parse(kind)
    tau = as_quantile_level(tau)
    selection = pilots if pilots is not None else select_pilots(data, grid, kind, pool)
    plan = selection.adjust(tau)
    diagnostics: Dict[str, Any] = {}

    if scheme is WeightScheme.LOOCV:
        loo = loo_prediction_matrix(data, tau, plan.adjusted, kind, pool)
        weights = loocv_weights(loo, data.y)
        diagnostics["cv_objective"] = weights.objective
        diagnostics["cv_equal"] = cv_criterion(loo, data.y, equal_weights(data.p))
        diagnostics["cv_vertices"] = [cv_criterion(loo, data.y, WeightVector.vertex(data.p, k)) for k in range(data.p)]
        diagnostics["loo_failures"] = int(loo.failed.sum())
    elif scheme is WeightScheme.EQUAL:
        weights = equal_weights(data.p)
    else:
        weights = smoothed_bic_weights(data, tau, plan.adjusted, kind, pool)

    logger.info("averaged model fitted", tau=float(tau), scheme=scheme.value, weights=weights.to_list())
    return AveragedModel(
        weights=weights,
        scheme=scheme,
        bandwidths=plan,
        tau=float(tau),
        training_data=data,
        kind=kind,
        diagnostics=diagnostics,
    )


def combine_predictions(matrix: CandidateMatrix, weights: Union[WeightVector, np.ndarray]) -> np.ndarray:
    """
    sum_s w_s * M[:, s], skipping candidates with weight below CANDIDATE_SKIP_TOL.

    A row is NaN when a candidate that is not skipped failed on it.
    """
    w = weights.weights if isinstance(weights, WeightVector) else np.asarray(weights, dtype=float)
    if w.shape != (matrix.n_candidates,):
        raise ShapeError("Weight vector length must equal the number of candidates")
    out = np.zeros(matrix.n_rows)
    for k in np.flatnonzero(w >= settings.CANDIDATE_SKIP_TOL):
        out += w[k] * np.where(matrix.failed[:, k], np.nan, matrix.values[:, k])
    return out


def predict_averaged(
    model: AveragedModel,
    queries: np.ndarray,
    kind: Optional[Union[str, KernelKind]] = None,
    pool: Optional[WorkerPool] = None,
) -> np.ndarray:
    """
    Averaged tau-quantile prediction at each query row.

    Only candidates with non-negligible weight are fitted. Rows where one of those
    fails come back as NaN.
    """
    data = model.training_data
    queries = np.asarray(queries, dtype=float)
    if queries.ndim == 1:
        queries = queries.reshape(1, -1)
    if queries.shape[1] != data.width:
        raise ShapeError(
            "Query rows must have one entry per covariate",
            details={"width": queries.shape[1], "expected": data.width},
        )
    kind = model.kind if kind is None else KernelKind.parse(kind)
    w = model.weights.weights
    active = np.flatnonzero(w >= settings.CANDIDATE_SKIP_TOL)

    values = np.zeros((queries.shape[0], len(w)))
    failed = np.zeros_like(values, dtype=bool)
    if active.size and queries.shape[0]:
        partial = candidate_prediction_matrix(
            _restricted(data, active),
            queries,
            model.tau,
            [model.bandwidths.adjusted[k] for k in active],
            kind,
            pool,
        )
        values[:, active] = partial.values
        failed[:, active] = partial.failed

    matrix = CandidateMatrix(values, failed, model.column_index_map, model.tau)
    predictions = combine_predictions(matrix, w)
    if np.isnan(predictions).any():
        logger.warning("averaged prediction failed on some rows", rows=int(np.isnan(predictions).sum()))
    return predictions


def _restricted(data: Dataset, active: np.ndarray) -> Dataset:
    """Same data with only the ``active`` candidates treated as index covariates."""
    index_cols = tuple(data.continuous_cols[k] for k in active)
    rest = tuple(sorted(set(range(data.width)) - set(index_cols)))
    return Dataset(
        y=data.y,
        x=data.x,
        continuous_cols=index_cols,
        discrete_cols=rest,
        names=data.names,
        response_name=data.response_name,
    )


# ============================================================================
# Serialization
# ============================================================================

def to_fit_entry(model: AveragedModel) -> FittedTau:
    """Document entry for one tau."""
    return FittedTau(
        tau=model.tau,
        weights=model.weights.to_list(),
        bandwidths=model.bandwidths.to_document(),
        cv_objective=model.diagnostics.get("cv_objective"),
    )


def from_fit_entry(
    entry: FittedTau,
    data: Dataset,
    scheme: Union[str, WeightScheme],
    kind: Union[str, KernelKind],
) -> AveragedModel:
    """Rebuild an AveragedModel from its document entry and the (standardized) training data."""
    plan = BandwidthPlan(
        tau=entry.tau,
        index_cols=tuple(data.continuous_cols),
        pilot=tuple(entry.bandwidths.pilot),
        adjusted=tuple(entry.bandwidths.adjusted),
        grids={int(k): tuple(v) for k, v in entry.bandwidths.grids.items()},
    )
    return AveragedModel(
        weights=WeightVector.from_raw(entry.weights, clamp_tol=0.0, objective=entry.cv_objective or float("nan")),
        scheme=WeightScheme(scheme),
        bandwidths=plan,
        tau=entry.tau,
        training_data=data,
        kind=KernelKind.parse(kind),
    )
