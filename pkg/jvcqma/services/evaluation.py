"""
Out-of-sample comparison harness.

Final prediction error (mean test-set check loss), the linear quantile regression
baseline, simulation replications, repeated train/test splits of real data,
bootstrap weight intervals and the oracle-ratio diagnostic.

Methods compared:

* JVCQMA: leave-one-out simplex weights
* VCQMA1: equal weights
* VCQMA2: smoothed-BIC weights
* VCQR<k>: the single candidate indexed by the k-th continuous covariate
* LQR: global linear quantile regression
"""

import itertools
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from sklearn import model_selection
from sklearn.utils import resample

from ..core.config import settings
from ..core.exceptions import (
    EmptyDataError,
    JvcqmaError,
    RunFailureError,
    ShapeError,
    ValidationError,
)
from ..schemas.data import DatasetSchema
from ..schemas.reports import FpeReport, MethodFpe, RatioSummary, RunDiagnostics, TauWeights, WeightSummary
from ..schemas.simulation import SimDesign
from ..workers.pool import WorkerPool, run_ordered
from .bandwidth import PilotSelection, select_pilots
from .core_math import KernelKind, as_quantile_level, check_loss
from .data_io import apply_standardization, standardize
from .dataset import Dataset
from .model_average import combine_predictions, cv_criterion, equal_weights, loocv_weights, smoothed_bic_weights
from .qr import WeightedQrProblem, WeightVector, solve_weighted_qr
from .simulation import check_pairing, covariate_layout, generate, replication_seed
from .vcm_estimator import CandidateMatrix, LooPredictionMatrix, candidate_prediction_matrix, loo_prediction_matrix

logger = structlog.get_logger(__name__)

GRID_CHUNK = 4096
DEFAULT_RATIO_RESOLUTION = 0.1


class Method(str, Enum):
    """Averaging and baseline methods; single candidates are named VCQR<k>."""
    JVCQMA = "JVCQMA"
    VCQMA1 = "VCQMA1"
    VCQMA2 = "VCQMA2"
    LQR = "LQR"


def vcqr_name(k: int) -> str:
    """Method name of the candidate indexed by the k-th (0-based) continuous covariate."""
    return f"VCQR{k + 1}"


def default_methods(p: int) -> List[str]:
    return [Method.JVCQMA.value, Method.VCQMA1.value, Method.VCQMA2.value] + [
        vcqr_name(k) for k in range(p)
    ] + [Method.LQR.value]


def parse_methods(names: Optional[Sequence[str]], p: int) -> List[str]:
    """Validate method names against the p candidates, keeping the canonical order."""
    allowed = default_methods(p)
    if not names:
        return allowed
    wanted = {n.strip().upper() for n in names}
    unknown = wanted - set(allowed)
    if unknown:
        raise ValidationError(f"Unknown methods: {', '.join(sorted(unknown))}", details={"allowed": allowed})
    return [m for m in allowed if m in wanted]


# ============================================================================
# FPE and Baselines
# ============================================================================

def fpe(y_test: np.ndarray, predictions: np.ndarray, tau: float) -> float:
    """Mean check loss of ``predictions`` on the test responses."""
    y_test = np.asarray(y_test, dtype=float)
    predictions = np.asarray(predictions, dtype=float)
    if y_test.shape != predictions.shape:
        raise ShapeError(
            "Test responses and predictions must have equal length",
            details={"y_test": list(y_test.shape), "predictions": list(predictions.shape)},
        )
    if y_test.size == 0:
        raise EmptyDataError("Cannot compute FPE on an empty test set")
    return float(np.mean(check_loss(tau, y_test - predictions)))


@dataclass(frozen=True, eq=False)
class LinearQuantilePredictor:
    """Intercept plus slopes from a global linear quantile regression."""

    intercept: float
    slopes: np.ndarray
    tau: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.intercept + np.atleast_2d(np.asarray(x, dtype=float)) @ self.slopes


def linear_qr_baseline(data: Dataset, tau: float) -> LinearQuantilePredictor:
    """Linear quantile regression with intercept on every covariate."""
    tau = as_quantile_level(tau)
    design = np.hstack([np.ones((data.n, 1)), data.x])
    solution = solve_weighted_qr(WeightedQrProblem.unweighted(data.y, design, tau), tol=settings.SOLVER_TOL)
    coef = solution.coefficients
    return LinearQuantilePredictor(intercept=float(coef[0]), slopes=coef[1:], tau=float(tau))


# ============================================================================
# Oracle Ratio
# ============================================================================

def simplex_grid(p: int, resolution: float) -> np.ndarray:
    """Every point of the p-simplex whose coordinates are multiples of ``resolution``."""
    if p < 1:
        raise ValidationError("Simplex dimension must be at least 1")
    steps = int(round(1.0 / resolution))
    if steps < 1 or abs(steps * resolution - 1.0) > 1e-9:
        raise ValidationError("Grid resolution must divide 1", details={"resolution": resolution})
    points = []
    for bars in itertools.combinations(range(steps + p - 1), p - 1):
        edges = np.array((-1,) + bars + (steps + p - 1,))
        points.append(np.diff(edges) - 1)
    return np.array(points, dtype=float) / steps


def _grid_chunks(grid: np.ndarray) -> Iterator[np.ndarray]:
    for start in range(0, grid.shape[0], GRID_CHUNK):
        yield grid[start:start + GRID_CHUNK]


def oracle_ratio(
    y_test: np.ndarray,
    candidate_predictions: np.ndarray,
    w_hat: Union[WeightVector, np.ndarray],
    tau: float,
    resolution: float = DEFAULT_RATIO_RESOLUTION,
) -> float:
    """
    FPE(w_hat) over the smallest FPE among vertices, equal weights and the simplex grid.

    Rows where any candidate prediction is missing are left out of every FPE.

    Raises:
        EmptyDataError: If no row has a full set of candidate predictions
    """
    tau = float(as_quantile_level(tau))
    y = np.asarray(y_test, dtype=float)
    M = np.asarray(candidate_predictions, dtype=float)
    usable = np.isfinite(M).all(axis=1)
    y, M = y[usable], M[usable]
    w = w_hat.weights if isinstance(w_hat, WeightVector) else np.asarray(w_hat, dtype=float)
    p = M.shape[1]

    best = min(fpe(y, M[:, k], tau) for k in range(p))
    best = min(best, fpe(y, M.mean(axis=1), tau))
    for chunk in _grid_chunks(simplex_grid(p, resolution)):
        residuals = y[:, None] - M @ chunk.T
        losses = np.mean(residuals * (tau - (residuals <= 0)), axis=0)
        best = min(best, float(losses.min()))
    achieved = fpe(y, M @ w, tau)
    if best <= 0:
        return 1.0 if achieved <= 0 else float("inf")
    return achieved / best


# ============================================================================
# Per-Split Evaluation
# ============================================================================

@dataclass
class SplitOutcome:
    """FPE per (method, tau) for one train/test pair; failures hold NaN."""

    fpe: Dict[Tuple[str, float], float] = field(default_factory=dict)
    weights: Dict[float, np.ndarray] = field(default_factory=dict)
    ratio: Dict[float, float] = field(default_factory=dict)
    cv_checks: int = 0
    cv_violations: int = 0
    ratio_excluded: int = 0
    seconds: float = 0.0


def _check_cv_optimality(loo: LooPredictionMatrix, y: np.ndarray, weights: WeightVector) -> bool:
    """CV(w_hat) <= CV(equal) and <= CV(e_s) for every s."""
    p = len(weights)
    achieved = cv_criterion(loo, y, weights)
    references = [cv_criterion(loo, y, equal_weights(p))]
    references += [cv_criterion(loo, y, WeightVector.vertex(p, k)) for k in range(p)]
    slack = settings.SOLVER_TOL * (1.0 + abs(achieved))
    return all(achieved <= ref + slack for ref in references)


def evaluate_split(
    train: Dataset,
    test: Dataset,
    taus: Sequence[float],
    methods: Sequence[str],
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    grid: Optional[Sequence[float]] = None,
    ratio_resolution: Optional[float] = None,
) -> SplitOutcome:
    """Fit every method on ``train`` and score it on ``test`` at each tau."""
    kind = KernelKind.parse(kind)
    outcome = SplitOutcome()
    started = time.perf_counter()
    vc_methods = [m for m in methods if m != Method.LQR.value]

    pilots: Optional[PilotSelection] = None
    if vc_methods:
        try:
            pilots = select_pilots(train, grid, kind)
        except JvcqmaError as exc:
            logger.warning("bandwidth selection failed", error=exc.message)

    for tau in taus:
        tau = float(as_quantile_level(tau))
        plan = pilots.adjust(tau) if pilots is not None else None
        test_matrix: Optional[CandidateMatrix] = None
        if plan is not None:
            test_matrix = candidate_prediction_matrix(train, test.x, tau, plan.adjusted, kind)

        def predictions(method: str) -> np.ndarray:
            if method == Method.LQR.value:
                return linear_qr_baseline(train, tau).predict(test.x)
            if test_matrix is None or plan is None:
                raise RunFailureError("No bandwidth plan for this split")
            if method == Method.JVCQMA.value:
                loo = loo_prediction_matrix(train, tau, plan.adjusted, kind)
                weights = loocv_weights(loo, train.y)
                outcome.cv_checks += 1
                if not _check_cv_optimality(loo, train.y, weights):
                    outcome.cv_violations += 1
                    logger.warning("cv criterion above a reference weight", tau=tau)
                outcome.weights[tau] = weights.weights
                if ratio_resolution is not None:
                    outcome.ratio_excluded += int((~np.isfinite(test_matrix.values).all(axis=1)).sum())
                    try:
                        outcome.ratio[tau] = oracle_ratio(test.y, test_matrix.values, weights, tau, ratio_resolution)
                    except JvcqmaError as exc:
                        logger.warning("oracle ratio skipped", tau=tau, error=exc.message)
                return combine_predictions(test_matrix, weights)
            if method == Method.VCQMA1.value:
                return combine_predictions(test_matrix, equal_weights(train.p))
            if method == Method.VCQMA2.value:
                return combine_predictions(test_matrix, smoothed_bic_weights(train, tau, plan.adjusted, kind))
            k = int(method[len("VCQR"):]) - 1
            return combine_predictions(test_matrix, WeightVector.vertex(train.p, k))

        for method in methods:
            try:
                outcome.fpe[(method, tau)] = fpe(test.y, predictions(method), tau)
            except JvcqmaError as exc:
                logger.warning("method failed", method=method, tau=tau, error=exc.message)
                outcome.fpe[(method, tau)] = float("nan")

    outcome.seconds = time.perf_counter() - started
    return outcome


def _aggregate(
    outcomes: Sequence[SplitOutcome],
    taus: Sequence[float],
    methods: Sequence[str],
    design: dict,
    names: Sequence[str],
    index_cols: Sequence[int],
) -> Tuple[FpeReport, WeightSummary]:
    reps = len(outcomes)
    rows = []
    for tau in taus:
        tau = float(tau)
        for method in methods:
            values = np.array([o.fpe.get((method, tau), np.nan) for o in outcomes])
            ok = values[np.isfinite(values)]
            failures = reps - ok.size
            if failures > settings.RUN_FAILURE_LIMIT * reps:
                raise RunFailureError(
                    f"{method} failed in {failures} of {reps} replications at tau={tau}",
                    stage="evaluate",
                    details={"method": method, "tau": tau, "failures": failures, "reps": reps},
                )
            rows.append(
                MethodFpe(
                    method=method,
                    tau=tau,
                    mean=float(ok.mean()) if ok.size else None,
                    sd=float(ok.std(ddof=1)) if ok.size > 1 else None,
                    replications=int(ok.size),
                    failures=int(failures),
                )
            )

    ratios = []
    for tau in taus:
        values = np.array([o.ratio[float(tau)] for o in outcomes if float(tau) in o.ratio])
        if values.size:
            ratios.append(
                RatioSummary(
                    tau=float(tau),
                    mean=float(values.mean()),
                    sd=float(values.std(ddof=1)) if values.size > 1 else None,
                    replications=int(values.size),
                )
            )

    violations = sum(o.cv_violations for o in outcomes)
    if violations:
        logger.warning("cv optimality violations", count=violations)

    report = FpeReport(
        design=design,
        taus=[float(t) for t in taus],
        methods=list(methods),
        reps=reps,
        rows=rows,
        oracle_ratio=ratios,
        diagnostics=RunDiagnostics(
            cv_checks=sum(o.cv_checks for o in outcomes),
            cv_violations=violations,
            ratio_excluded_rows=sum(o.ratio_excluded for o in outcomes),
        ),
        seconds_per_replication=[o.seconds for o in outcomes],
    )

    blocks: List[TauWeights] = []
    if Method.JVCQMA.value in methods:
        for tau in taus:
            draws = [o.weights[float(tau)] for o in outcomes if float(tau) in o.weights]
            matrix = np.vstack(draws) if draws else np.empty((0, len(index_cols)))
            blocks.append(WeightSummary.summarize(tau, matrix, names, index_cols, failures=reps - len(draws)))
    return report, WeightSummary(source="replications", per_tau=blocks)


# ============================================================================
# Simulation Replications
# ============================================================================

def run_replications(
    design: SimDesign,
    taus: Sequence[float],
    methods: Optional[Sequence[str]] = None,
    reps: Optional[int] = None,
    master_seed: Optional[int] = None,
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    grid: Optional[Sequence[float]] = None,
    pool: Optional[WorkerPool] = None,
    ratio_resolution: Optional[float] = None,
) -> Tuple[FpeReport, WeightSummary]:
    """
    Repeat generate / fit / score ``reps`` times.

    Replication r uses the seed derived from (master_seed, r), so results do not
    depend on the number of workers.

    Raises:
        RunFailureError: If a method fails in more than RUN_FAILURE_LIMIT of replications
    """
    reps = settings.DEFAULT_REPS if reps is None else int(reps)
    master_seed = settings.DEFAULT_SEED if master_seed is None else int(master_seed)
    if reps < 1:
        raise ValidationError("reps must be at least 1")
    check_pairing(design)
    names, continuous = covariate_layout(design)
    chosen = parse_methods(methods, len(continuous))

    def replicate(r: int) -> SplitOutcome:
        sample = generate(design.with_seed(replication_seed(master_seed, r)))
        return evaluate_split(sample.train, sample.test, taus, chosen, kind, grid, ratio_resolution)

    logger.info("replications started", reps=reps, methods=chosen, n=design.n)
    outcomes = run_ordered(pool, replicate, list(range(reps)))
    descriptor = design.model_dump(mode="json")
    descriptor["master_seed"] = master_seed
    return _aggregate(
        outcomes,
        taus,
        chosen,
        descriptor,
        [names[s] for s in continuous],
        continuous,
    )


# ============================================================================
# Real-Data Splits
# ============================================================================

def _sklearn_seed(seed: int) -> int:
    return int(seed) % (2**32)


def train_test_split(data: Dataset, n_test: int, seed: int) -> Tuple[Dataset, Dataset]:
    """Uniform random partition into n - n_test training and n_test test rows; row order kept."""
    if not 0 < n_test < data.n:
        raise ValidationError(f"n_test must lie in (0, {data.n}), got {n_test}", details={"n_test": n_test})
    train_idx, test_idx = model_selection.train_test_split(
        np.arange(data.n), test_size=int(n_test), random_state=_sklearn_seed(seed), shuffle=True
    )
    return data.take(np.sort(train_idx)), data.take(np.sort(test_idx))


def run_split_evaluation(
    data: Dataset,
    schema: Optional[DatasetSchema],
    taus: Sequence[float],
    methods: Optional[Sequence[str]] = None,
    n_test: int = 50,
    reps: Optional[int] = None,
    master_seed: Optional[int] = None,
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    grid: Optional[Sequence[float]] = None,
    pool: Optional[WorkerPool] = None,
) -> FpeReport:
    """
    Repeated random splits of one dataset.

    Each split is standardized with its own training statistics when a schema
    marks columns for standardization.
    """
    reps = settings.DEFAULT_REPS if reps is None else int(reps)
    master_seed = settings.DEFAULT_SEED if master_seed is None else int(master_seed)
    chosen = parse_methods(methods, data.p)

    def split(r: int) -> SplitOutcome:
        train, test = train_test_split(data, n_test, replication_seed(master_seed, r))
        if schema is not None:
            train, record = standardize(train, schema)
            test = apply_standardization(test, record)
        return evaluate_split(train, test, taus, chosen, kind, grid)

    logger.info("split evaluation started", reps=reps, n=data.n, n_test=n_test)
    outcomes = run_ordered(pool, split, list(range(reps)))
    descriptor = {"n": data.n, "n_test": int(n_test), "n_train": data.n - int(n_test), "master_seed": master_seed}
    report, _ = _aggregate(
        outcomes, taus, chosen, descriptor, [data.names[s] for s in data.continuous_cols], data.continuous_cols
    )
    return report


# ============================================================================
# Bootstrap
# ============================================================================

def bootstrap_weight_draws(
    data: Dataset,
    taus: Sequence[float],
    B: int,
    master_seed: Optional[int] = None,
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    grid: Optional[Sequence[float]] = None,
    fixed_bandwidth: bool = False,
    pool: Optional[WorkerPool] = None,
) -> WeightSummary:
    """
    Pairs bootstrap of the leave-one-out weights at every tau.

    Each resample draws n rows with replacement and reruns bandwidth selection
    (unless ``fixed_bandwidth``), the LOO matrix and the simplex LP.

    Raises:
        RunFailureError: If more than RUN_FAILURE_LIMIT of resamples fail
    """
    if B < 2:
        raise ValidationError("Bootstrap needs B >= 2", details={"B": B})
    master_seed = settings.DEFAULT_SEED if master_seed is None else int(master_seed)
    kind = KernelKind.parse(kind)
    taus = [float(as_quantile_level(t)) for t in taus]
    shared = select_pilots(data, grid, kind, pool) if fixed_bandwidth else None

    def draw(b: int) -> Optional[Dict[float, np.ndarray]]:
        rows = resample(np.arange(data.n), replace=True, n_samples=data.n,
                        random_state=_sklearn_seed(replication_seed(master_seed, b)))
        sample = data.take(rows)
        try:
            pilots = shared if shared is not None else select_pilots(sample, grid, kind)
            out = {}
            for tau in taus:
                loo = loo_prediction_matrix(sample, tau, pilots.adjust(tau).adjusted, kind)
                out[tau] = loocv_weights(loo, sample.y).weights
            return out
        except JvcqmaError as exc:
            logger.warning("bootstrap resample failed", b=b, error=exc.message)
            return None

    logger.info("bootstrap started", B=B, taus=taus, fixed_bandwidth=fixed_bandwidth)
    draws = run_ordered(pool, draw, list(range(B)))
    failures = sum(d is None for d in draws)
    if failures > settings.RUN_FAILURE_LIMIT * B:
        raise RunFailureError(
            f"{failures} of {B} bootstrap resamples failed",
            stage="bootstrap",
            details={"failures": failures, "B": B},
        )

    names = [data.names[s] for s in data.continuous_cols]
    blocks = []
    for tau in taus:
        matrix = np.vstack([d[tau] for d in draws if d is not None])
        blocks.append(
            WeightSummary.summarize(tau, matrix, names, data.continuous_cols, failures=failures, intervals=True)
        )
    return WeightSummary(source="bootstrap", per_tau=blocks)


def bootstrap_weight_intervals(
    data: Dataset,
    tau: float,
    B: int,
    master_seed: Optional[int] = None,
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    grid: Optional[Sequence[float]] = None,
    fixed_bandwidth: bool = False,
    pool: Optional[WorkerPool] = None,
) -> WeightSummary:
    """Bootstrap mean +/- 1.96 sd weight intervals at one tau."""
    return bootstrap_weight_draws(data, [tau], B, master_seed, kind, grid, fixed_bandwidth, pool)
