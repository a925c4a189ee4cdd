"""
Bandwidth selection for the varying-coefficient candidates.

A pilot bandwidth per continuous covariate is chosen by leave-one-out least-squares
cross-validation of the local-linear mean model over a geometric grid, then
rescaled to the quantile level with the normal-reference adjustment factor. The
pilot does not depend on tau, so one pilot selection serves every quantile level.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from ..core.config import settings
from ..core.exceptions import BandwidthSelectionError, InvalidBandwidthError, ShapeError, ValidationError
from ..schemas.models import BandwidthDocument
from ..workers.pool import WorkerPool, run_ordered
from .core_math import KernelKind, as_quantile_level, kernel_scaled, quantile_adjust_factor
from .dataset import Dataset
from .vcm_estimator import local_design

logger = structlog.get_logger(__name__)

# Scores within this relative distance of the minimum count as tied; ties go to
# the smallest bandwidth.
TIE_RTOL = 1e-10
SINGULAR_RCOND = 1e-12


# ============================================================================
# Grids
# ============================================================================

def default_grid(
    data: Dataset,
    s: int,
    size: Optional[int] = None,
    low: Optional[float] = None,
    high: Optional[float] = None,
) -> np.ndarray:
    """
    Geometric grid over [low, high] * sd(X_s) * n^(-1/5).

    Raises:
        BandwidthSelectionError: If X_s is constant
    """
    size = settings.BANDWIDTH_GRID_SIZE if size is None else size
    low = settings.BANDWIDTH_GRID_LOW if low is None else low
    high = settings.BANDWIDTH_GRID_HIGH if high is None else high
    sd = float(np.std(data.x[:, s], ddof=1)) if data.n > 1 else 0.0
    if not sd > 0:
        raise BandwidthSelectionError(f"Column {s} has no spread to size a bandwidth grid", details={"s": s})
    base = sd * data.n ** (-0.2)
    if size == 1:
        return np.array([low * base])
    return np.geomspace(low * base, high * base, size)


def parse_grid_spec(spec: str) -> np.ndarray:
    """Absolute grid from 'min:max:count' (geometric spacing)."""
    try:
        low_s, high_s, count_s = spec.split(":")
        low, high, count = float(low_s), float(high_s), int(count_s)
    except ValueError as exc:
        raise ValidationError(f"Bandwidth grid must look like 'min:max:count', got '{spec}'") from exc
    if not 0 < low <= high or count < 1:
        raise ValidationError("Bandwidth grid needs 0 < min <= max and count >= 1", details={"grid": spec})
    return np.array([low]) if count == 1 else np.geomspace(low, high, count)


# ============================================================================
# Least-Squares Cross-Validation
# ============================================================================

def _loo_ls_score(data: Dataset, s: int, h: float, kind: KernelKind) -> float:
    """Sum of squared leave-one-out errors of the local-linear mean fit; inf if any fit is singular."""
    others = data.others(s)
    total = 0.0
    for i in range(data.n):
        keep = np.arange(data.n) != i
        x, y = data.x[keep], data.y[keep]
        x_s = float(data.x[i, s])
        weights = np.asarray(kernel_scaled(kind, h, x[:, s] - x_s))
        design = local_design(x, s, x_s)
        gram = design.T @ (design * weights[:, None])
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond * SINGULAR_RCOND >= 1.0:
            return float("inf")
        try:
            theta = np.linalg.solve(gram, design.T @ (weights * y))
        except np.linalg.LinAlgError:
            return float("inf")
        k = data.width
        prediction = theta[0] + data.x[i, others] @ theta[1:k]
        total += float((data.y[i] - prediction) ** 2)
    return total


def cv_scores(
    data: Dataset,
    s: int,
    grid: Sequence[float],
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
) -> np.ndarray:
    """Least-squares CV score at each grid bandwidth (in the given order)."""
    kind = KernelKind.parse(kind)
    hs = np.asarray(grid, dtype=float)
    if hs.size == 0:
        raise BandwidthSelectionError("Bandwidth grid is empty")
    if np.any(~np.isfinite(hs)) or np.any(hs <= 0):
        raise InvalidBandwidthError("Grid bandwidths must be positive", details={"grid": hs.tolist()})
    return np.array([_loo_ls_score(data, s, float(h), kind) for h in hs])


def pilot_bandwidth(
    data: Dataset,
    s: int,
    grid: Optional[Sequence[float]] = None,
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
) -> float:
    """
    LS-CV minimizer over ``grid`` (default grid when omitted).

    Raises:
        BandwidthSelectionError: If every grid point yields a singular fit
    """
    hs = np.sort(np.asarray(default_grid(data, s) if grid is None else grid, dtype=float))
    scores = cv_scores(data, s, hs, kind)
    finite = np.isfinite(scores)
    if not finite.any():
        raise BandwidthSelectionError(
            f"Every grid bandwidth gives a singular local fit for column {s}",
            details={"s": s, "grid": hs.tolist()},
        )
    best = scores[finite].min()
    tied = finite & (scores <= best + TIE_RTOL * max(1.0, abs(best)))
    choice = float(hs[np.flatnonzero(tied)[0]])
    if choice in (hs[0], hs[-1]) and hs.size > 1:
        logger.debug("pilot bandwidth on grid boundary", s=s, h=choice)
    return choice


# ============================================================================
# Plans
# ============================================================================

@dataclass(frozen=True)
class PilotSelection:
    """tau-free pilot bandwidths, one per continuous covariate."""

    index_cols: Tuple[int, ...]
    pilot: Tuple[float, ...]
    grids: Dict[int, Tuple[float, ...]] = field(default_factory=dict)

    def adjust(self, tau: float) -> "BandwidthPlan":
        """Rescale the pilots to quantile level tau."""
        tau = as_quantile_level(tau)
        factor = quantile_adjust_factor(tau)
        return BandwidthPlan(
            tau=float(tau),
            index_cols=self.index_cols,
            pilot=self.pilot,
            adjusted=tuple(h * factor for h in self.pilot),
            grids=self.grids,
        )

    @classmethod
    def fixed(cls, data: Dataset, bandwidths: Sequence[float]) -> "PilotSelection":
        """Pilots supplied by the caller instead of selected."""
        hs = tuple(float(h) for h in bandwidths)
        if len(hs) != data.p:
            raise ShapeError("One bandwidth per continuous covariate is required")
        if any(not np.isfinite(h) or h <= 0 for h in hs):
            raise InvalidBandwidthError("Bandwidths must be positive", details={"bandwidths": list(hs)})
        return cls(index_cols=tuple(data.continuous_cols), pilot=hs)


@dataclass(frozen=True)
class BandwidthPlan:
    """Pilot and tau-adjusted bandwidths; adjusted = pilot * quantile_adjust_factor(tau)."""

    tau: float
    index_cols: Tuple[int, ...]
    pilot: Tuple[float, ...]
    adjusted: Tuple[float, ...]
    grids: Dict[int, Tuple[float, ...]] = field(default_factory=dict)

    def to_document(self) -> BandwidthDocument:
        return BandwidthDocument(
            pilot=list(self.pilot),
            adjusted=list(self.adjusted),
            grids={str(k): list(v) for k, v in sorted(self.grids.items())},
        )


def select_pilots(
    data: Dataset,
    grid: Optional[Sequence[float]] = None,
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    pool: Optional[WorkerPool] = None,
) -> PilotSelection:
    """Pilot bandwidth for every continuous covariate; ``grid`` overrides the default grids."""
    kind = KernelKind.parse(kind)

    def select(s: int) -> Tuple[float, Tuple[float, ...]]:
        hs = np.sort(np.asarray(default_grid(data, s) if grid is None else grid, dtype=float))
        return pilot_bandwidth(data, s, hs, kind), tuple(float(h) for h in hs)

    results = run_ordered(pool, select, list(data.continuous_cols))
    selection = PilotSelection(
        index_cols=tuple(data.continuous_cols),
        pilot=tuple(r[0] for r in results),
        grids={s: r[1] for s, r in zip(data.continuous_cols, results)},
    )
    logger.debug("pilot bandwidths selected", pilot=list(selection.pilot))
    return selection


def plan_bandwidths(
    data: Dataset,
    tau: float,
    grid: Optional[Sequence[float]] = None,
    kind: Union[str, KernelKind] = KernelKind.GAUSSIAN,
    pool: Optional[WorkerPool] = None,
) -> BandwidthPlan:
    """Pilot selection followed by the tau adjustment."""
    return select_pilots(data, grid, kind, pool).adjust(tau)
