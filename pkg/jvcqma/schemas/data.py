"""
Column schema files and standardization records.
"""

from enum import Enum
from typing import List

from pydantic import Field, field_validator, model_validator

from .base import Document


class ColumnRole(str, Enum):
    """How a CSV column enters the model."""
    RESPONSE = "response"
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


class ColumnSchema(Document):
    """One column of a dataset schema file."""

    name: str = Field(..., min_length=1, description="Header name in the CSV file")
    role: ColumnRole = Field(..., description="response, continuous or discrete")
    standardize: bool = Field(False, description="Standardize with training statistics")

    @field_validator("role", mode="before")
    @classmethod
    def normalize_role(cls, v: object) -> object:
        return v.strip().lower() if isinstance(v, str) else v


class DatasetSchema(Document):
    """Ordered column list; covariates keep their order in the file."""

    columns: List[ColumnSchema]

    @model_validator(mode="after")
    def check_roles(self) -> "DatasetSchema":
        names = [c.name for c in self.columns]
        if len(set(n.lower() for n in names)) != len(names):
            raise ValueError("Column names must be unique")
        roles = [ColumnRole(c.role) for c in self.columns]
        if roles.count(ColumnRole.RESPONSE) != 1:
            raise ValueError("Exactly one response column is required")
        if ColumnRole.CONTINUOUS not in roles:
            raise ValueError("At least one continuous column is required")
        return self

    @property
    def response(self) -> ColumnSchema:
        return next(c for c in self.columns if ColumnRole(c.role) is ColumnRole.RESPONSE)

    @property
    def covariates(self) -> List[ColumnSchema]:
        return [c for c in self.columns if ColumnRole(c.role) is not ColumnRole.RESPONSE]


class ColumnStats(Document):
    name: str
    mean: float
    sd: float = Field(..., gt=0)


class StandardizationRecord(Document):
    """Training-set mean and population standard deviation per standardized column."""

    columns: List[ColumnStats] = Field(default_factory=list)

