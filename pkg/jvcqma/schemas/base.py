"""
Shared document models.

Error blocks and the provenance block every primary output carries.
"""

import platform
from datetime import datetime
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
import scipy
from pydantic import BaseModel, ConfigDict, Field

from .. import __version__


# ============================================================================
# Enums
# ============================================================================

class RunStatus(str, Enum):
    """Outcome of a CLI run."""
    SUCCESS = "success"
    ERROR = "error"


class ErrorType(str, Enum):
    """Error classifications mirrored from the exception hierarchy."""
    CONFIGURATION_ERROR = "configuration_error"
    VALIDATION_ERROR = "validation_error"
    SOLVER_ERROR = "solver_error"
    ESTIMATION_ERROR = "estimation_error"
    DATA_ERROR = "data_error"
    RUN_FAILURE = "run_failure"
    INTERNAL_ERROR = "internal_error"


# ============================================================================
# Documents
# ============================================================================

class Document(BaseModel):
    """Base for on-disk documents; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", use_enum_values=True)


class ErrorDetail(Document):
    """Error information recorded in meta.json."""

    type: ErrorType = Field(..., description="Error classification")
    error: str = Field(..., description="Exception class name")
    message: str = Field(..., description="Human-readable error message")
    stage: Optional[str] = Field(None, description="Pipeline stage that failed")
    details: Dict[str, Any] = Field(default_factory=dict, description="Additional error context")


class Versions(Document):
    """Library versions that influence numeric results."""

    jvcqma: str = __version__
    numpy: str = np.__version__
    scipy: str = scipy.__version__
    pandas: str = pd.__version__
    python: str = Field(default_factory=platform.python_version)


class Provenance(Document):
    """Deterministic provenance: configuration echo, input hashes and versions."""

    command: str = Field(..., description="CLI subcommand")
    config: Dict[str, Any] = Field(default_factory=dict, description="Effective options and settings")
    inputs: Dict[str, str] = Field(default_factory=dict, description="Input file path -> SHA-256")
    versions: Versions = Field(default_factory=Versions)


class RunMetadata(Document):
    """Non-deterministic run facts kept out of the primary outputs."""

    provenance: Provenance
    status: RunStatus = RunStatus.SUCCESS
    started_at: datetime
    finished_at: Optional[datetime] = None
    seconds_per_replication: Optional[list] = Field(None, description="Wall-clock per replication or resample")
    outputs: list = Field(default_factory=list, description="Files written by the run")
    error: Optional[ErrorDetail] = None
