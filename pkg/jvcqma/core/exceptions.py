"""
Exception hierarchy for jvcqma.

Every error carries a human-readable message, the pipeline stage it surfaced in
(filled in by the CLI when it propagates) and a details dict for structured output.
"""

from typing import Any, Dict, Optional


class JvcqmaError(Exception):
    """Base exception for all jvcqma errors."""

    def __init__(self, message: str, stage: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.stage = stage
        self.details = details or {}
        super().__init__(self.message)

    def with_stage(self, stage: str) -> "JvcqmaError":
        """Attach a stage name unless an inner layer already set one."""
        if self.stage is None:
            self.stage = stage
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to dictionary."""
        return {
            "type": type(self).__name__,
            "message": self.message,
            "stage": self.stage,
            "details": self.details,
        }


class ConfigurationError(JvcqmaError):
    """Invalid settings or CLI configuration."""
    pass


# ============================================================================
# Input Validation
# ============================================================================

class ValidationError(JvcqmaError):
    """Input outside the domain of an operation."""
    pass


class ShapeError(ValidationError):
    """Array dimensions do not agree."""
    pass


class InvalidBandwidthError(ValidationError):
    """Bandwidth must be strictly positive."""
    pass


class InvalidPairingError(ValidationError):
    """Simulation example / error case combination not used in the study."""
    pass


# ============================================================================
# Solver Errors
# ============================================================================

class SolverError(JvcqmaError):
    """Base exception for LP solver failures."""
    pass


class UnderdeterminedLocalFit(SolverError):
    """Fewer positive-weight observations than coefficients."""

    def __init__(self, message: str, positive: int = 0, required: int = 0, **kwargs: Any):
        self.positive = positive
        self.required = required
        super().__init__(message, **kwargs)


class UnboundedProblemError(SolverError):
    """The LP has no finite optimum."""
    pass


class EmptyCandidateSetError(SolverError):
    """Model averaging over zero candidates."""
    pass


# ============================================================================
# Estimation Errors
# ============================================================================

class EstimationError(JvcqmaError):
    """Base exception for estimator-level failures."""
    pass


class CandidateUnusableError(EstimationError):
    """Too many failed leave-one-out fits for one candidate."""
    pass


class BandwidthSelectionError(EstimationError):
    """Every grid bandwidth was excluded."""
    pass


# ============================================================================
# Data Errors
# ============================================================================

class DataError(JvcqmaError):
    """Base exception for data ingestion problems."""
    pass


class MissingColumnError(DataError):
    """A schema column is absent from the file."""
    pass


class NonNumericCellError(DataError):
    """A cell could not be parsed as a number."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None, **kwargs: Any):
        self.row = row
        self.column = column
        super().__init__(message, **kwargs)


class EmptyDataError(DataError):
    """File or test set without rows."""
    pass


class ZeroVarianceError(DataError):
    """Column cannot be standardized."""
    pass


class ColumnMismatchError(DataError):
    """Columns do not match a standardization record or schema."""
    pass


class StaleModelError(DataError):
    """Training data changed since the model was fitted."""
    pass


# ============================================================================
# Harness Errors
# ============================================================================

class RunFailureError(JvcqmaError):
    """Too many failed replications or resamples."""
    pass
