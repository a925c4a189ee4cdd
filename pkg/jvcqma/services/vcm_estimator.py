"""
Local-linear varying-coefficient quantile regression.

Candidate model s indexes every coefficient by the continuous covariate X_s:

    Q_tau(Y | X) = alpha_s(X_s) + X_{-s} . beta_s(X_s)

At an evaluation point x_s the coefficients and their slopes are fitted by a
kernel-weighted linear quantile regression on the design

    [1, X_{-s}, (X_s - x_s), X_{-s} * (X_s - x_s)]

which has d = 2(p + q) columns. When too few observations carry kernel weight the
bandwidth is multiplied by ESCALATION_FACTOR, at most ESCALATION_MAX_STEPS times.

Fits of one candidate at many evaluation points run in increasing order of x_s,
each LP starting from the vertex through the rows the previous fit interpolated.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from ..core.config import settings
from ..core.exceptions import (
    CandidateUnusableError,
    InvalidBandwidthError,
    ShapeError,
    UnderdeterminedLocalFit,
    ValidationError,
)
from ..workers.pool import WorkerPool, run_ordered
from .core_math import KernelKind, as_quantile_level, kernel_scaled
from .dataset import Dataset
from .qr import SolutionStatus, WeightedQrProblem, solve_weighted_qr

logger = structlog.get_logger(__name__)


# ============================================================================
# Result Types
# ============================================================================

@dataclass(frozen=True, eq=False)
class VcLocalFit:
    """Coefficients of candidate ``index_col`` at one evaluation point."""

    index_col: int
    eval_point: float
    alpha: float
    beta: np.ndarray
    alpha_slope: float
    beta_slope: np.ndarray
    bandwidth: float
    objective: float
    status: SolutionStatus
    escalations: int = 0
    basic_rows: Tuple[int, ...] = ()

    def predict(self, x_others: np.ndarray) -> Union[float, np.ndarray]:
        """alpha + x_{-s} . beta for one row or a matrix of rows."""
        arr = np.asarray(x_others, dtype=float)
        return self.alpha + arr @ self.beta


@dataclass(frozen=True, eq=False)
class CandidatePrediction:
    """Predictions of one candidate at a set of query rows; failed rows hold NaN."""

    index_col: int
    values: np.ndarray
    failed: np.ndarray

    @property
    def failure_rate(self) -> float:
        return float(self.failed.mean()) if self.failed.size else 0.0


@dataclass(frozen=True, eq=False)
class CandidateMatrix:
    """
    Candidate predictions stacked column-wise.

    ``column_index_map[k]`` is the covariate index of column k. For a leave-one-out
    matrix row i was predicted by fits that excluded observation i.
    """

    values: np.ndarray
    failed: np.ndarray
    column_index_map: Tuple[int, ...]
    tau: float
    leave_one_out: bool = False

    def __post_init__(self) -> None:
        if self.values.shape != self.failed.shape:
            raise ShapeError("values and failure mask must have the same shape")
        if self.values.ndim != 2 or self.values.shape[1] != len(self.column_index_map):
            raise ShapeError("One column per candidate is required")

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_candidates(self) -> int:
        return int(self.values.shape[1])

    @property
    def complete_rows(self) -> np.ndarray:
        """Boolean mask of rows where every candidate succeeded."""
        return ~self.failed.any(axis=1)


# The leave-one-out matrix is the CV input for the averaging weights.
LooPredictionMatrix = CandidateMatrix


# ============================================================================
# Local Fit
# ============================================================================

def local_design(x: np.ndarray, s: int, x_s: float) -> np.ndarray:
    """[1, X_{-s}, (X_s - x_s), X_{-s} * (X_s - x_s)] for the rows of ``x``."""
    others = np.delete(x, s, axis=1)
    u = x[:, s] - x_s
    ones = np.ones((x.shape[0], 1))
    return np.hstack([ones, others, u[:, None], others * u[:, None]])


def _check_index(data: Dataset, s: int) -> None:
    if s not in data.continuous_cols:
        raise ValidationError(f"Column {s} is not a continuous covariate", details={"s": s})


def fit_local(
    data: Dataset,
    s: int,
    x_s: float,
    tau: float,
    h: float,
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    exclude: Optional[int] = None,
    start: Optional[Sequence[int]] = None,
) -> VcLocalFit:
    """
    Local-linear quantile fit of candidate s at x_s.

    Args:
        data: Training data
        s: Index covariate (a continuous column)
        x_s: Evaluation point
        tau: Quantile level
        h: Bandwidth (before any escalation)
        kind: Smoothing kernel
        exclude: Optional row left out of the fit
        start: Training rows to interpolate at the starting vertex, usually the
            ``basic_rows`` of a fit at a nearby evaluation point

    Raises:
        InvalidBandwidthError: If h <= 0
        UnderdeterminedLocalFit: If escalation runs out before enough rows carry weight
    """
    _check_index(data, s)
    tau = as_quantile_level(tau)
    if not np.isfinite(h) or h <= 0:
        raise InvalidBandwidthError(f"Bandwidth must be positive, got {h!r}", details={"h": h})

    x, y = data.x, data.y
    design = local_design(x, s, x_s)
    required = design.shape[1]
    offsets = x[:, s] - x_s

    bandwidth = float(h)
    for step in range(settings.ESCALATION_MAX_STEPS + 1):
        weights = np.array(kernel_scaled(kind, bandwidth, offsets), dtype=float)
        if exclude is not None:
            weights[exclude] = 0.0
        positive = int(np.count_nonzero(weights >= settings.WEIGHT_DROP_TOL))
        if positive >= required:
            problem = WeightedQrProblem(y, design, weights, tau)
            solution = solve_weighted_qr(
                problem, tol=settings.SOLVER_TOL, drop_tol=settings.WEIGHT_DROP_TOL, start=start
            )
            k = data.width
            coef = solution.coefficients
            return VcLocalFit(
                index_col=s,
                eval_point=float(x_s),
                alpha=float(coef[0]),
                beta=coef[1:k],
                alpha_slope=float(coef[k]),
                beta_slope=coef[k + 1:],
                bandwidth=bandwidth,
                objective=solution.objective,
                status=solution.status,
                escalations=step,
                basic_rows=tuple(int(r) for r in solution.basic_rows),
            )
        if step < settings.ESCALATION_MAX_STEPS:
            bandwidth *= settings.ESCALATION_FACTOR

    raise UnderdeterminedLocalFit(
        f"Local fit at x_s={x_s:.6g} has fewer than {required} weighted observations",
        positive=positive,
        required=required,
        details={"s": s, "x_s": float(x_s), "bandwidth": bandwidth},
    )


# ============================================================================
# Candidate Predictions
# ============================================================================

def predict_candidate(
    data: Dataset,
    s: int,
    queries: np.ndarray,
    tau: float,
    h: float,
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
) -> CandidatePrediction:
    """
    Candidate s at each query row: fit at x_s = query[s] and apply to query[-s].

    Fits are shared between queries with the same index value and run in increasing
    order of x_s, each warm-started from the previous one. A failed fit marks its
    rows instead of aborting.
    """
    _check_index(data, s)
    queries = np.asarray(queries, dtype=float)
    if queries.ndim != 2 or queries.shape[1] != data.width:
        raise ShapeError(
            "Query rows must have one entry per covariate",
            details={"shape": list(queries.shape), "width": data.width},
        )

    values = np.full(queries.shape[0], np.nan)
    failed = np.zeros(queries.shape[0], dtype=bool)
    others = data.others(s)
    points, inverse = np.unique(queries[:, s], return_inverse=True)
    start: Optional[Sequence[int]] = None

    for k, point in enumerate(points):
        rows = np.flatnonzero(inverse == k)
        try:
            fit = fit_local(data, s, float(point), tau, h, kind, start=start)
        except UnderdeterminedLocalFit as exc:
            logger.debug("candidate fit failed", s=s, x_s=float(point), error=exc.message)
            failed[rows] = True
            continue
        start = fit.basic_rows
        values[rows] = fit.predict(queries[np.ix_(rows, others)])

    return CandidatePrediction(index_col=s, values=values, failed=failed)


def _loo_column(data: Dataset, s: int, tau: float, h: float, kind: KernelKind) -> CandidatePrediction:
    others = data.others(s)
    values = np.full(data.n, np.nan)
    failed = np.zeros(data.n, dtype=bool)
    start: Optional[Sequence[int]] = None
    for i in np.argsort(data.x[:, s], kind="stable"):
        try:
            fit = fit_local(data, s, float(data.x[i, s]), tau, h, kind, exclude=int(i), start=start)
        except UnderdeterminedLocalFit:
            failed[i] = True
            continue
        start = fit.basic_rows
        values[i] = fit.predict(data.x[i, others])
    return CandidatePrediction(index_col=s, values=values, failed=failed)


def _check_bandwidths(data: Dataset, bandwidths: Sequence[float]) -> Tuple[float, ...]:
    hs = tuple(float(h) for h in bandwidths)
    if len(hs) != data.p:
        raise ShapeError(
            "One bandwidth per continuous covariate is required",
            details={"bandwidths": len(hs), "continuous": data.p},
        )
    for h in hs:
        if not np.isfinite(h) or h <= 0:
            raise InvalidBandwidthError(f"Bandwidth must be positive, got {h!r}", details={"h": h})
    return hs


def _stack(columns: Sequence[CandidatePrediction], data: Dataset, tau: float, loo: bool) -> CandidateMatrix:
    return CandidateMatrix(
        values=np.column_stack([c.values for c in columns]),
        failed=np.column_stack([c.failed for c in columns]),
        column_index_map=tuple(data.continuous_cols),
        tau=float(tau),
        leave_one_out=loo,
    )


def loo_prediction_matrix(
    data: Dataset,
    tau: float,
    bandwidths: Sequence[float],
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    pool: Optional[WorkerPool] = None,
    failure_limit: Optional[float] = None,
) -> LooPredictionMatrix:
    """
    Leave-one-out predictions M[i, k] of candidate k at observation i.

    Each entry comes from a fit on the other n - 1 rows evaluated at x_s = X_is.
    Candidates are computed in parallel when a pool is given.

    Raises:
        CandidateUnusableError: If a candidate fails on more than the allowed share of rows
    """
    tau = as_quantile_level(tau)
    kind = KernelKind.parse(kind)
    hs = _check_bandwidths(data, bandwidths)
    limit = settings.LOO_FAILURE_LIMIT if failure_limit is None else failure_limit
    if not data.is_fit_feasible():
        logger.warning("sample is small for local-linear fits", n=data.n, width=data.width)

    jobs = list(zip(data.continuous_cols, hs))
    columns = run_ordered(pool, lambda job: _loo_column(data, job[0], tau, job[1], kind), jobs)

    for column in columns:
        if column.failure_rate > limit:
            raise CandidateUnusableError(
                f"Candidate {column.index_col} failed on {column.failure_rate:.1%} of leave-one-out fits",
                details={"index_col": column.index_col, "failure_rate": column.failure_rate, "limit": limit},
            )
        if column.failed.any():
            logger.warning(
                "leave-one-out fits failed",
                index_col=column.index_col,
                failures=int(column.failed.sum()),
            )

    matrix = _stack(columns, data, tau, loo=True)
    logger.debug("loo matrix built", n=data.n, candidates=matrix.n_candidates, tau=float(tau))
    return matrix


def candidate_prediction_matrix(
    data: Dataset,
    queries: np.ndarray,
    tau: float,
    bandwidths: Sequence[float],
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    pool: Optional[WorkerPool] = None,
) -> CandidateMatrix:
    """Predictions of every candidate fitted on all of ``data`` at ``queries``."""
    tau = as_quantile_level(tau)
    kind = KernelKind.parse(kind)
    hs = _check_bandwidths(data, bandwidths)
    queries = np.asarray(queries, dtype=float)
    if queries.ndim != 2 or queries.shape[1] != data.width:
        raise ShapeError("Query rows must have one entry per covariate", details={"shape": list(queries.shape)})

    jobs = list(zip(data.continuous_cols, hs))
    columns = run_ordered(pool, lambda job: predict_candidate(data, job[0], queries, tau, job[1], kind), jobs)
    return _stack(columns, data, tau, loo=False)


def in_sample_predictions(
    data: Dataset,
    tau: float,
    bandwidths: Sequence[float],
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    pool: Optional[WorkerPool] = None,
) -> CandidateMatrix:
    """Full-sample fitted quantiles of every candidate at the training rows."""
    return candidate_prediction_matrix(data, data.x, tau, bandwidths, kind, pool)

