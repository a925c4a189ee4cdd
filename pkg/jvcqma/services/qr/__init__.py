"""
Quantile LP solvers.

Dense simplex machinery and the two programs built on it: weighted linear quantile
regression and simplex-constrained quantile combination.
"""

from .base import QrSolution, SimplexWeightProblem, SolutionStatus, WeightedQrProblem, WeightVector
from .simplex import LpResult, solve_standard_form
from .solvers import evaluate_combination_loss, solve_simplex_weights, solve_weighted_qr

__all__ = [
    "QrSolution",
    "SimplexWeightProblem",
    "SolutionStatus",
    "WeightedQrProblem",
    "WeightVector",
    "LpResult",
    "solve_standard_form",
    "evaluate_combination_loss",
    "solve_simplex_weights",
    "solve_weighted_qr",
]
