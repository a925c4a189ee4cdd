"""
Dataset container.

A response vector and a covariate matrix whose columns are partitioned into
continuous columns (candidate index variables) and discrete columns (always
entering linearly). Datasets are immutable; row selection returns new objects
and never reorders rows unless asked to.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import ShapeError, ValidationError


@dataclass(frozen=True, eq=False)
class Dataset:
    """Response y (n,), covariates x (n, p + q) and the column partition."""

    y: np.ndarray
    x: np.ndarray
    continuous_cols: Tuple[int, ...]
    discrete_cols: Tuple[int, ...] = ()
    names: Optional[Tuple[str, ...]] = None
    response_name: str = "Y"

    def __post_init__(self) -> None:
        y = np.array(self.y, dtype=float)
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if y.ndim != 1 or x.ndim != 2:
            raise ShapeError("y must be a vector and x a matrix", details={"y": list(y.shape), "x": list(x.shape)})
        if x.shape[0] != y.shape[0]:
            raise ShapeError("x and y must have the same number of rows", details={"x": x.shape[0], "y": y.shape[0]})
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise ValidationError("Dataset entries must be finite")

        continuous = tuple(int(c) for c in self.continuous_cols)
        discrete = tuple(int(c) for c in self.discrete_cols)
        if sorted(continuous + discrete) != list(range(x.shape[1])):
            raise ValidationError(
                "continuous_cols and discrete_cols must partition the covariate columns",
                details={"continuous": continuous, "discrete": discrete, "width": x.shape[1]},
            )
        if not continuous:
            raise ValidationError("At least one continuous column is required")

        names = tuple(self.names) if self.names is not None else tuple(f"X{j + 1}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise ShapeError("One name per covariate column is required")

        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "continuous_cols", continuous)
        object.__setattr__(self, "discrete_cols", discrete)
        object.__setattr__(self, "names", names)

    # ========================================================================
    # Shape
    # ========================================================================

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def width(self) -> int:
        """p + q."""
        return int(self.x.shape[1])

    @property
    def p(self) -> int:
        return len(self.continuous_cols)

    @property
    def q(self) -> int:
        return len(self.discrete_cols)

    def others(self, s: int) -> np.ndarray:
        """Column indices of every covariate except the index s, in order."""
        return np.array([j for j in range(self.width) if j != s], dtype=int)

    def is_fit_feasible(self) -> bool:
        """Heuristic n > 2(p + q) for local-linear fits."""
        return self.n > 2 * self.width

    # ========================================================================
    # Row Operations
    # ========================================================================

    def take(self, rows: Sequence[int]) -> "Dataset":
        """Dataset restricted to ``rows`` (in the given order, duplicates allowed)."""
        idx = np.asarray(rows, dtype=int)
        return Dataset(
            y=self.y[idx],
            x=self.x[idx],
            continuous_cols=self.continuous_cols,
            discrete_cols=self.discrete_cols,
            names=self.names,
            response_name=self.response_name,
        )

    def with_covariates(self, x: np.ndarray) -> "Dataset":
        return Dataset(
            y=self.y,
            x=x,
            continuous_cols=self.continuous_cols,
            discrete_cols=self.discrete_cols,
            names=self.names,
            response_name=self.response_name,
        )
