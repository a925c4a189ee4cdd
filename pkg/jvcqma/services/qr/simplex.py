"""
Dense tableau simplex method.

Solves standard-form LPs

    minimize c.x  subject to  A x = b,  x >= 0

either from a caller-supplied feasible basis or through a phase-one problem with
artificial variables. Pricing is deterministic: the entering column has the most
negative reduced cost, lowest index on ties. After DEGENERATE_RUN consecutive
degenerate pivots the method switches to Bland's rule (lowest improving index,
leaving ties to the lowest basic index) until the objective moves again, so it
cannot cycle.

Columns may be declared twins, A[:, k] == -A[:, twins[k]], as split residuals
u+ / u- are. The ratio test then steps past a basic variable that reaches zero by
swapping it for its twin, for as long as the objective keeps decreasing along the
entering direction.
"""

import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import linalg

from ...core.exceptions import SolverError, UnboundedProblemError

logger = structlog.get_logger(__name__)

PIVOT_EPS = 1e-12
RATIO_TIE_EPS = 1e-12
SINGULAR_RTOL = 1e-14
DEGENERATE_RUN = 20


@dataclass(frozen=True, eq=False)
class LpResult:
    """Certified optimum of a standard-form LP."""

    x: np.ndarray
    objective: float
    basis: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    iterations: int

    @property
    def dual_infeasibility(self) -> float:
        """Largest violation of reduced cost non-negativity."""
        return float(max(0.0, -self.reduced_costs.min())) if self.reduced_costs.size else 0.0


class BasisFactor:
    """
    Solves with a basis matrix whose columns are mostly scaled unit vectors.

    Each unit column pins its own row. The remaining core columns are LU-factorized
    on the rows no unit column covers, so the work grows with the core size only.
    """

    def __init__(self, B: np.ndarray):
        m = B.shape[0]
        nonzero = B != 0
        unit = nonzero.sum(axis=0) == 1
        self.unit_pos = np.flatnonzero(unit)
        self.unit_rows = np.argmax(nonzero, axis=0)[unit]
        if np.unique(self.unit_rows).size != self.unit_rows.size:
            raise SolverError("Basis matrix is singular", details={"reason": "repeated unit row"})
        self.scale = B[self.unit_rows, self.unit_pos]

        covered = np.zeros(m, dtype=bool)
        covered[self.unit_rows] = True
        self.core_pos = np.flatnonzero(~unit)
        self.core_rows = np.flatnonzero(~covered)
        if self.core_pos.size != self.core_rows.size:
            raise SolverError("Basis matrix is singular", details={"reason": "core is not square"})
        self.coupling = B[np.ix_(self.unit_rows, self.core_pos)]

        self.lu: Optional[Tuple[np.ndarray, np.ndarray]] = None
        if self.core_pos.size:
            block = B[np.ix_(self.core_rows, self.core_pos)]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", linalg.LinAlgWarning)
                lu, piv = linalg.lu_factor(block, check_finite=False)
            pivots = np.abs(np.diag(lu))
            if pivots.min() <= SINGULAR_RTOL * max(1.0, pivots.max()):
                raise SolverError("Basis matrix is singular", details={"core": int(self.core_pos.size)})
            self.lu = (lu, piv)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """B^-1 rhs for a vector or a matrix of columns."""
        out = np.empty(rhs.shape)
        rest = rhs[self.unit_rows]
        if self.lu is not None:
            core = linalg.lu_solve(self.lu, rhs[self.core_rows], check_finite=False)
            out[self.core_pos] = core
            rest = rest - self.coupling @ core
        scale = self.scale if rhs.ndim == 1 else self.scale[:, None]
        out[self.unit_pos] = rest / scale
        return out

    def solve_transpose(self, v: np.ndarray) -> np.ndarray:
        """y with B^T y = v."""
        y = np.empty(v.shape[0])
        y[self.unit_rows] = v[self.unit_pos] / self.scale
        if self.lu is not None:
            rhs = v[self.core_pos] - self.coupling.T @ y[self.unit_rows]
            y[self.core_rows] = linalg.lu_solve(self.lu, rhs, trans=1, check_finite=False)
        return y


class DenseSimplex:
    """
    Tableau state for one LP.

    The tableau holds B^-1 A, the basic values B^-1 b and the reduced costs; a pivot
    is a rank-one update of all three.
    """

    def __init__(
        self,
        c: np.ndarray,
        A: np.ndarray,
        b: np.ndarray,
        basis: Sequence[int],
        tol: float,
        twins: Optional[np.ndarray] = None,
    ):
        self.c = c
        self.A = A
        self.b = b
        self.tol = tol
        self.basis = np.array(basis, dtype=int)
        self.twins = twins
        self.pair_cost: Optional[np.ndarray] = None
        if twins is not None:
            paired = twins >= 0
            self.pair_cost = np.full(c.shape[0], np.inf)
            self.pair_cost[paired] = c[paired] + c[twins[paired]]
        self.iterations = 0
        self.degenerate_run = 0
        self._factorize()

    @property
    def bland(self) -> bool:
        return self.degenerate_run >= DEGENERATE_RUN

    def _factorize(self) -> None:
        factor = BasisFactor(self.A[:, self.basis])
        self.T = factor.solve(self.A)
        self.xb = factor.solve(self.b)
        self.xb[np.abs(self.xb) < PIVOT_EPS] = 0.0
        self.r = self.c - self.c[self.basis] @ self.T

    def _entering(self) -> Optional[int]:
        if self.bland:
            candidates = np.flatnonzero(self.r < -self.tol)
            return int(candidates[0]) if candidates.size else None
        j = int(np.argmin(self.r))
        return j if self.r[j] < -self.tol else None

    def _leaving(self, j: int) -> Tuple[Optional[int], List[int]]:
        """Leaving row for entering column j, plus the rows that flip to their twins on the way."""
        column = self.T[:, j]
        rows = np.flatnonzero(column > PIVOT_EPS)
        if rows.size == 0:
            return None, []
        ratios = self.xb[rows] / column[rows]

        if self.pair_cost is None or self.bland:
            best = ratios.min()
            tied = rows[ratios <= best + RATIO_TIE_EPS * (1.0 + abs(best))]
            return int(tied[np.argmin(self.basis[tied])]), []

        ordered = rows[np.lexsort((self.basis[rows], ratios))]
        slopes = self.r[j] + np.cumsum(column[ordered] * self.pair_cost[self.basis[ordered]])
        stop = np.flatnonzero(slopes >= -self.tol)
        if stop.size == 0:
            return None, ordered.tolist()
        k = int(stop[0])
        return int(ordered[k]), ordered[:k].tolist()

    def _flip(self, i: int) -> None:
        """Replace the basic variable of row i by its twin."""
        twin = int(self.twins[self.basis[i]])
        self.T[i] *= -1.0
        self.xb[i] = -self.xb[i]
        self.r -= self.r[twin] * self.T[i]
        self.basis[i] = twin

    def pivot(self, i: int, j: int) -> None:
        """Make column j basic in row i."""
        piv = self.T[i, j]
        self.T[i] /= piv
        self.xb[i] /= piv
        col = self.T[:, j].copy()
        col[i] = 0.0
        rows = np.flatnonzero(col)
        if rows.size:
            self.T[rows] -= np.outer(col[rows], self.T[i])
            self.xb[rows] -= col[rows] * self.xb[i]
        self.r -= self.r[j] * self.T[i]
        self.xb[np.abs(self.xb) < PIVOT_EPS] = 0.0
        self.basis[i] = j
        self.iterations += 1

    def _refine(self) -> None:
        """Recompute basic values, duals and reduced costs from one factorization of the basis."""
        factor = BasisFactor(self.A[:, self.basis])
        self.xb = factor.solve(self.b)
        self.xb[np.abs(self.xb) < PIVOT_EPS] = 0.0
        self.y = factor.solve_transpose(self.c[self.basis])
        self.r = self.c - self.A.T @ self.y

    def run(self, max_iter: int) -> None:
        """Iterate until no reduced cost is below -tol."""
        while True:
            j = self._entering()
            if j is None:
                self._refine()
                if self._entering() is None:
                    return
                # round-off hid an improving column; rebuild the tableau, keep the refined costs
                refined = self.r
                self._factorize()
                self.r = refined
                continue
            i, flips = self._leaving(j)
            if i is None:
                raise UnboundedProblemError("LP objective is unbounded below", details={"column": j})
            step = self.xb[i] / self.T[i, j]
            for row in flips:
                self._flip(row)
            self.pivot(i, j)
            self.degenerate_run = self.degenerate_run + 1 if step <= PIVOT_EPS else 0
            if self.iterations > max_iter:
                raise SolverError("Simplex iteration limit reached", details={"iterations": self.iterations})

    def primal(self) -> np.ndarray:
        x = np.zeros(self.A.shape[1])
        x[self.basis] = np.clip(self.xb, 0.0, None)
        return x

    def duals(self) -> np.ndarray:
        return self.y


def twin_columns(n_cols: int, *blocks: Tuple[int, int, int]) -> np.ndarray:
    """Twin index per column for (start, twin_start, count) blocks; -1 where unpaired."""
    twins = np.full(n_cols, -1, dtype=int)
    for start, other, count in blocks:
        twins[start:start + count] = np.arange(other, other + count)
        twins[other:other + count] = np.arange(start, start + count)
    return twins


def _phase_one(A: np.ndarray, b: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Find a feasible basis of A x = b, x >= 0 using artificial variables."""
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A1 = np.hstack([A * sign[:, None], np.eye(m)])
    b1 = b * sign
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    tableau = DenseSimplex(c1, A1, b1, np.arange(n, n + m), tol)
    tableau.run(max_iter)
    infeasibility = float(np.dot(c1, tableau.primal()))
    if infeasibility > max(tol, 1e-9) * (1.0 + np.abs(b).sum()):
        raise SolverError("LP is infeasible", details={"phase_one_objective": infeasibility})

    # drive remaining artificials out of the basis where a structural column allows it
    for row in range(m):
        if tableau.basis[row] >= n:
            structural = np.flatnonzero(np.abs(tableau.T[row, :n]) > 1e-9)
            if structural.size:
                tableau.pivot(row, int(structural[0]))
    basis = tableau.basis
    if np.any(basis >= n):
        raise SolverError("Constraint matrix is rank deficient", details={"rows": int(np.sum(basis >= n))})
    return basis.copy()


def solve_standard_form(
    c: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    basis: Optional[Sequence[int]] = None,
    tol: float = 1e-9,
    max_iter: Optional[int] = None,
    twins: Optional[np.ndarray] = None,
) -> LpResult:
    """
    Minimize c.x subject to A x = b, x >= 0.

    Args:
        c: Cost vector (n,)
        A: Constraint matrix (m, n), full row rank
        b: Right-hand side (m,)
        basis: Optional feasible starting basis of m column indices
        tol: Reduced-cost optimality tolerance
        max_iter: Pivot limit, default 50 * (m + n)
        twins: Optional twin index per column (see ``twin_columns``)

    Returns:
        LpResult with primal solution, duals and reduced costs

    Raises:
        UnboundedProblemError: If the objective is unbounded below
        SolverError: If infeasible, rank deficient or the pivot limit is hit
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    limit = max_iter if max_iter is not None else 50 * (m + n)

    if basis is None:
        basis = _phase_one(A, b, tol, limit)

    tableau = DenseSimplex(c, A, b, basis, tol, twins=twins)
    if np.any(tableau.xb < -1e-9):
        raise SolverError("Starting basis is not primal feasible")
    tableau.run(limit)

    x = tableau.primal()
    duals = tableau.duals()
    reduced = tableau.r
    logger.debug("lp solved", rows=m, cols=n, iterations=tableau.iterations)
    return LpResult(
        x=x,
        objective=float(np.dot(c, x)),
        basis=tableau.basis.copy(),
        duals=duals,
        reduced_costs=reduced,
        iterations=tableau.iterations,
    )
