"""
Fitted model document.

One document holds the averaged models for every requested tau. Training data is
referenced by path and SHA-256 rather than embedded; ``predict`` refuses to run
when the file no longer matches.
"""

from typing import Dict, List, Optional

from pydantic import Field, model_validator

from .base import Document, Provenance
from .data import ColumnSchema, StandardizationRecord

MODEL_FORMAT_VERSION = 1


class BandwidthDocument(Document):
    pilot: List[float] = Field(..., description="tau-free LS-CV bandwidths")
    adjusted: List[float] = Field(..., description="Bandwidths used at this tau")
    grids: Dict[str, List[float]] = Field(default_factory=dict, description="Pilot grid per index column")


class FittedTau(Document):
    """Averaged model at one quantile level."""

    tau: float = Field(..., gt=0, lt=1)
    weights: List[float]
    bandwidths: BandwidthDocument
    cv_objective: Optional[float] = Field(None, description="Leave-one-out check loss at the weights")

    @model_validator(mode="after")
    def check_simplex(self) -> "FittedTau":
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("weights must lie on the simplex")
        if not len(self.weights) == len(self.bandwidths.adjusted) == len(self.bandwidths.pilot):
            raise ValueError("one weight and one bandwidth per candidate are required")
        return self


class TrainingReference(Document):
    path: str
    sha256: str
    columns: List[ColumnSchema]
    standardization: StandardizationRecord = Field(default_factory=StandardizationRecord)


class ModelDocument(Document):
    """Serialized averaged model (all quantile levels of one fit run)."""

    format_version: int = MODEL_FORMAT_VERSION
    scheme: str
    kernel: str
    candidates: List[str] = Field(..., description="Index covariate name per weight")
    index_cols: List[int] = Field(..., description="Covariate position per weight")
    training: TrainingReference
    fits: List[FittedTau]
    provenance: Provenance
