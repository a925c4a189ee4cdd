"""
Exact solvers for the two quantile LPs.

Both problems are written with split residuals y - X beta = u+ - u- and solved by
the dense simplex from an explicit feasible basis, so no phase one is needed:

* weighted quantile regression starts at beta = 0 with every residual carried by
  u+ or u- according to the sign of the response, or at the hyperplane through
  the interpolated rows of a neighbouring fit;
* simplex-constrained combination starts at the best vertex e_s.
"""

from typing import Optional, Sequence, Union

import numpy as np
import structlog

from ...core.exceptions import ShapeError, UnderdeterminedLocalFit
from ..core_math import check_loss
from .base import QrSolution, SimplexWeightProblem, SolutionStatus, WeightedQrProblem, WeightVector
from .simplex import solve_standard_form, twin_columns

logger = structlog.get_logger(__name__)

DEFAULT_TOL = 1e-9
DROP_TOL = 1e-12
WARM_START_MAX_COND = 1e10


# ============================================================================
# Weighted Quantile Regression
# ============================================================================

def _interpolation_basis(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    rows: np.ndarray,
) -> Optional[np.ndarray]:
    """
    Feasible basis whose hyperplane interpolates ``rows``.

    Rows are topped up in decreasing weight order until d of them have a
    nonsingular design block. Returns None when no well-conditioned block exists.
    """
    m, d = X.shape
    chosen = [int(r) for r in dict.fromkeys(rows.tolist())][:d]
    if chosen and np.linalg.matrix_rank(X[chosen]) < len(chosen):
        return None
    taken = np.zeros(m, dtype=bool)
    taken[chosen] = True
    for r in np.argsort(-w, kind="stable"):
        if len(chosen) == d:
            break
        if taken[r]:
            continue
        if np.linalg.matrix_rank(X[chosen + [int(r)]]) == len(chosen) + 1:
            chosen.append(int(r))
            taken[r] = True
    if len(chosen) < d:
        return None

    block = X[chosen]
    if np.linalg.cond(block) > WARM_START_MAX_COND:
        return None
    beta = np.linalg.solve(block, y[chosen])
    residual = y - X @ beta
    rest = np.flatnonzero(~taken)
    return np.concatenate([
        np.where(beta >= 0, np.arange(d), d + np.arange(d)),
        np.where(residual[rest] >= 0, 2 * d + rest, 2 * d + m + rest),
    ])


def solve_weighted_qr(
    problem: WeightedQrProblem,
    tol: float = DEFAULT_TOL,
    drop_tol: float = DROP_TOL,
    start: Optional[Sequence[int]] = None,
) -> QrSolution:
    """
    Minimize sum_i w_i rho_tau(y_i - x_i . beta).

    Args:
        problem: Responses, design, observation weights and tau
        tol: Optimality tolerance on the (weight-normalized) reduced costs
        drop_tol: Observations with weight below this are removed before solving
        start: Observations to interpolate at the starting vertex, usually the
            ``basic_rows`` of a neighbouring fit; beta = 0 when omitted

    Returns:
        QrSolution with the coefficients and the objective on the full problem

    Raises:
        UnderdeterminedLocalFit: If fewer than d observations carry weight
    """
    keep = problem.obs_weights >= drop_tol
    kept = np.flatnonzero(keep)
    m = int(kept.size)
    d = problem.n_coefficients
    if m < d:
        raise UnderdeterminedLocalFit(
            f"Only {m} positive-weight observations for {d} coefficients",
            positive=m,
            required=d,
        )

    y = problem.responses[keep]
    X = problem.design[keep]
    w = problem.obs_weights[keep]
    w = w / w.max()
    tau = float(problem.tau)

    identity = np.eye(m)
    A = np.hstack([X, -X, identity, -identity])
    c = np.concatenate([np.zeros(2 * d), tau * w, (1.0 - tau) * w])
    twins = twin_columns(A.shape[1], (0, d, d), (2 * d, 2 * d + m, m))

    basis = None
    if start is not None:
        position = np.full(problem.responses.shape[0], -1)
        position[kept] = np.arange(m)
        requested = np.asarray(start, dtype=int)
        requested = requested[(requested >= 0) & (requested < position.size)]
        local = position[requested]
        basis = _interpolation_basis(X, y, w, local[local >= 0])
    if basis is None:
        basis = np.where(y >= 0, 2 * d + np.arange(m), 2 * d + m + np.arange(m))

    result = solve_standard_form(c, A, y, basis=basis, tol=tol, twins=twins)
    coefficients = result.x[:d] - result.x[d:2 * d]

    basic = np.zeros(A.shape[1], dtype=bool)
    basic[result.basis] = True
    residual_cols = np.arange(2 * d, A.shape[1])
    idle = residual_cols[~basic[residual_cols]]
    ties = bool(np.any(result.reduced_costs[idle] <= tol))
    status = SolutionStatus.DEGENERATE if ties else SolutionStatus.OPTIMAL
    interpolated = ~(basic[2 * d:2 * d + m] | basic[2 * d + m:])

    return QrSolution(
        coefficients=coefficients,
        objective=problem.objective(coefficients),
        status=status,
        iterations=result.iterations,
        dual_infeasibility=result.dual_infeasibility,
        basic_rows=kept[interpolated],
    )


# ============================================================================
# Simplex-Constrained Combination
# ============================================================================

def evaluate_combination_loss(problem: SimplexWeightProblem, w: Union[WeightVector, np.ndarray]) -> float:
    """CV_n(w) = (1/n) sum_i rho_tau(y_i - M_i . w)."""
    weights = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    if weights.shape != (problem.n_candidates,):
        raise ShapeError(
            "Weight vector length must equal the number of candidates",
            details={"weights": list(weights.shape), "candidates": problem.n_candidates},
        )
    residuals = problem.responses - problem.prediction_matrix @ weights
    return float(np.mean(check_loss(problem.tau, residuals)))


def solve_simplex_weights(problem: SimplexWeightProblem, tol: float = DEFAULT_TOL) -> WeightVector:
    """
    Minimize the combination check loss over the probability simplex.

    The LP has variables (w, u+, u-) with n residual rows and one sum-to-one row.

    Returns:
        WeightVector carrying the attained objective
    """
    y = problem.responses
    M = problem.prediction_matrix
    n, p = M.shape
    tau = float(problem.tau)

    vertex_losses = [evaluate_combination_loss(problem, np.eye(p)[s]) for s in range(p)]
    if p == 1:
        return WeightVector(np.ones(1), objective=vertex_losses[0])

    identity = np.eye(n)
    zeros = np.zeros((1, n))
    A = np.vstack([
        np.hstack([M, identity, -identity]),
        np.hstack([np.ones((1, p)), zeros, zeros]),
    ])
    b = np.concatenate([y, [1.0]])
    c = np.concatenate([np.zeros(p), np.full(n, tau / n), np.full(n, (1.0 - tau) / n)])

    s0 = int(np.argmin(vertex_losses))
    residual = y - M[:, s0]
    start = np.concatenate([
        np.where(residual >= 0, p + np.arange(n), p + n + np.arange(n)),
        [s0],
    ])

    twins = twin_columns(A.shape[1], (p, p + n, n))
    result = solve_standard_form(c, A, b, basis=start, tol=tol, twins=twins)
    weights = WeightVector.from_raw(result.x[:p], clamp_tol=0.0)
    objective = evaluate_combination_loss(problem, weights)

    equal_loss = evaluate_combination_loss(problem, np.full(p, 1.0 / p))
    if objective > min(min(vertex_losses), equal_loss) + tol:
        logger.warning(
            "simplex weights worse than a reference point",
            objective=objective,
            best_vertex=min(vertex_losses),
            equal=equal_loss,
        )

    logger.debug("simplex weights solved", n=n, p=p, iterations=result.iterations, objective=objective)
    return WeightVector(weights.weights, objective=objective)
