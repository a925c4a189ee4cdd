"""
Problem and solution containers for the quantile LP solvers.

Weighted linear quantile regression and simplex-constrained quantile combination
share the same split-residual LP structure; these types carry their inputs and
certified outputs.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from ...core.exceptions import EmptyCandidateSetError, ShapeError, ValidationError
from ..core_math import QuantileLevel, as_quantile_level

SIMPLEX_TOL = 1e-10


class SolutionStatus(str, Enum):
    """Optimal with a unique vertex, or optimal on a face with ties."""
    OPTIMAL = "optimal"
    DEGENERATE = "degenerate"


def _finite_array(values: Any, name: str, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


# ============================================================================
# Weighted Quantile Regression
# ============================================================================

@dataclass(frozen=True, eq=False)
class WeightedQrProblem:
    """minimize sum_i obs_weights_i * rho_tau(responses_i - design_i . beta)."""

    responses: np.ndarray
    design: np.ndarray
    obs_weights: np.ndarray
    tau: QuantileLevel

    def __post_init__(self) -> None:
        responses = _finite_array(self.responses, "responses", 1)
        design = _finite_array(self.design, "design", 2)
        weights = _finite_array(self.obs_weights, "obs_weights", 1)
        m, d = design.shape
        if m < 1 or d < 1:
            raise ShapeError(f"design must be at least 1x1, got {design.shape}")
        if responses.shape[0] != m or weights.shape[0] != m:
            raise ShapeError(
                "responses, design rows and obs_weights must have equal length",
                details={"responses": responses.shape[0], "design": m, "obs_weights": weights.shape[0]},
            )
        if np.any(weights < 0):
            raise ValidationError("obs_weights must be non-negative")
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "obs_weights", weights)
        object.__setattr__(self, "tau", as_quantile_level(self.tau))

    @classmethod
    def unweighted(cls, responses: Any, design: Any, tau: float) -> "WeightedQrProblem":
        """Problem with unit observation weights."""
        responses = np.asarray(responses, dtype=float)
        return cls(responses, design, np.ones(responses.shape[0]), tau)

    @property
    def n_coefficients(self) -> int:
        return int(self.design.shape[1])

    def objective(self, coefficients: np.ndarray) -> float:
        """Weighted check loss at ``coefficients``."""
        residuals = self.responses - self.design @ np.asarray(coefficients, dtype=float)
        loss = residuals * (self.tau - (residuals <= 0.0))
        return float(np.dot(self.obs_weights, loss))


@dataclass(frozen=True, eq=False)
class QrSolution:
    """
    Minimizer of a weighted quantile regression LP.

    ``basic_rows`` are the observations the fitted hyperplane interpolates at the
    optimal vertex; passing them back as ``start`` warm-starts a related problem.
    """

    coefficients: np.ndarray
    objective: float
    status: SolutionStatus
    iterations: int = 0
    dual_infeasibility: float = 0.0
    basic_rows: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))


# ============================================================================
# Simplex-Constrained Combination
# ============================================================================

@dataclass(frozen=True, eq=False)
class SimplexWeightProblem:
    """minimize (1/n) sum_i rho_tau(responses_i - prediction_matrix_i . w) over the simplex."""

    responses: np.ndarray
    prediction_matrix: np.ndarray
    tau: QuantileLevel

    def __post_init__(self) -> None:
        responses = _finite_array(self.responses, "responses", 1)
        matrix = _finite_array(self.prediction_matrix, "prediction_matrix", 2)
        if matrix.shape[1] == 0:
            raise EmptyCandidateSetError("Model averaging needs at least one candidate")
        if matrix.shape[0] != responses.shape[0]:
            raise ShapeError(
                "prediction_matrix rows must match responses",
                details={"responses": responses.shape[0], "rows": matrix.shape[0]},
            )
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "prediction_matrix", matrix)
        object.__setattr__(self, "tau", as_quantile_level(self.tau))

    @property
    def n_candidates(self) -> int:
        return int(self.prediction_matrix.shape[1])


@dataclass(frozen=True, eq=False)
class WeightVector:
    """A point on the probability simplex."""

    weights: np.ndarray
    objective: float = float("nan")

    def __post_init__(self) -> None:
        weights = _finite_array(self.weights, "weights", 1)
        if weights.size == 0:
            raise EmptyCandidateSetError("Weight vector must have at least one component")
        if np.any(weights < -SIMPLEX_TOL):
            raise ValidationError("Weights must be non-negative", details={"weights": weights.tolist()})
        if abs(weights.sum() - 1.0) > SIMPLEX_TOL:
            raise ValidationError("Weights must sum to one", details={"sum": float(weights.sum())})
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_raw(cls, raw: Any, clamp_tol: float = SIMPLEX_TOL, objective: float = float("nan")) -> "WeightVector":
        """Clamp components below ``clamp_tol`` to zero and renormalize."""
        arr = np.asarray(raw, dtype=float).copy()
        arr[arr < clamp_tol] = 0.0
        total = arr.sum()
        if total <= 0:
            raise ValidationError("Raw weights have no positive mass")
        return cls(arr / total, objective=objective)

    @classmethod
    def vertex(cls, p: int, s: int) -> "WeightVector":
        """The unit vector e_s."""
        arr = np.zeros(p)
        arr[s] = 1.0
        return cls(arr)

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    def to_list(self) -> list:
        return [float(w) for w in self.weights]
