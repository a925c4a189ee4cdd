"""
CSV ingestion and standardization.

Files are comma separated with a header row and numeric cells. A schema file lists
every used column with its role (response, continuous or discrete) and whether it
is standardized. Header names are matched case-insensitively; extra columns are
ignored and row order is always preserved.
"""

import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import pydantic
import structlog

from ..core.exceptions import (
    ColumnMismatchError,
    DataError,
    EmptyDataError,
    MissingColumnError,
    NonNumericCellError,
    ZeroVarianceError,
)
from ..schemas.data import ColumnRole, ColumnSchema, ColumnStats, DatasetSchema, StandardizationRecord
from .dataset import Dataset

logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]

# Relative to max(1, |mean|); a column this flat counts as constant.
ZERO_SD_RTOL = 1e-12
BOSTON_SCHEMA = "boston_schema.json"


# ============================================================================
# Schemas
# ============================================================================

def parse_schema(payload: object) -> DatasetSchema:
    """Schema from a JSON list of {name, role, standardize} or {"columns": [...]}."""
    if isinstance(payload, list):
        payload = {"columns": payload}
    try:
        return DatasetSchema.model_validate(payload)
    except pydantic.ValidationError as exc:
        raise DataError("Invalid schema", stage="load", details={"errors": exc.errors(include_url=False)}) from exc


def load_schema(path: PathLike) -> DatasetSchema:
    """Read a schema file."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"Cannot read schema file {path}: {exc}", stage="load") from exc
    return parse_schema(payload)


def boston_schema() -> DatasetSchema:
    """Bundled Boston housing schema: 10 continuous, 3 discrete covariates, MEDV response."""
    text = resources.files("jvcqma.data").joinpath(BOSTON_SCHEMA).read_text(encoding="utf-8")
    return parse_schema(json.loads(text))


def file_sha256(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


# ============================================================================
# CSV
# ============================================================================

def _read_frame(path: PathLike) -> pd.DataFrame:
    try:
        return pd.read_csv(path, sep=",", dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise EmptyDataError(f"File {path} is empty", stage="load") from exc
    except OSError as exc:
        raise DataError(f"Cannot read {path}: {exc}", stage="load") from exc


def _resolve_columns(frame: pd.DataFrame, names: Sequence[str], path: PathLike) -> List[str]:
    lookup = {str(c).strip().lower(): c for c in frame.columns}
    missing = [n for n in names if n.lower() not in lookup]
    if missing:
        raise MissingColumnError(
            f"{path} is missing columns: {', '.join(missing)}",
            stage="load",
            details={"missing": missing, "found": [str(c) for c in frame.columns]},
        )
    return [lookup[n.lower()] for n in names]


def _numeric(frame: pd.DataFrame, columns: Sequence[str], names: Sequence[str]) -> np.ndarray:
    """Float matrix of ``columns``; the first unparseable cell is reported by 1-based data row."""
    out = np.empty((len(frame), len(columns)))
    for j, (column, name) in enumerate(zip(columns, names)):
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        bad = ~np.isfinite(values)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise NonNumericCellError(
                f"Non-numeric value {raw.iloc[row]!r} in row {row + 1}, column {name}",
                row=row + 1,
                column=name,
                stage="load",
            )
        out[:, j] = values
    return out


def load_csv(path: PathLike, schema: DatasetSchema) -> Dataset:
    """
    Dataset from a CSV file; covariates in schema order.

    Raises:
        EmptyDataError: If the file is empty or has no data rows
        MissingColumnError: If a schema column is absent
        NonNumericCellError: If a cell does not parse as a finite number
    """
    frame = _read_frame(path)
    if frame.empty:
        raise EmptyDataError(f"File {path} has no data rows", stage="load")
    covariates = schema.covariates
    names = [schema.response.name] + [c.name for c in covariates]
    columns = _resolve_columns(frame, names, path)
    values = _numeric(frame, columns, names)

    roles = [ColumnRole(c.role) for c in covariates]
    data = Dataset(
        y=values[:, 0],
        x=values[:, 1:],
        continuous_cols=tuple(j for j, r in enumerate(roles) if r is ColumnRole.CONTINUOUS),
        discrete_cols=tuple(j for j, r in enumerate(roles) if r is ColumnRole.DISCRETE),
        names=tuple(c.name for c in covariates),
        response_name=schema.response.name,
    )
    logger.info("dataset loaded", path=str(path), n=data.n, continuous=data.p, discrete=data.q)
    return data


def load_queries(path: PathLike, names: Sequence[str]) -> np.ndarray:
    """Covariate matrix of a query file; a header-only file gives zero rows."""
    frame = _read_frame(path)
    columns = _resolve_columns(frame, names, path)
    if frame.empty:
        return np.empty((0, len(names)))
    return _numeric(frame, columns, names)


def save_csv(path: PathLike, data: Dataset) -> None:
    """Write response then covariates with a header; floats round-trip exactly."""
    frame = pd.DataFrame(data.x, columns=list(data.names))
    frame.insert(0, data.response_name, data.y)
    frame.to_csv(path, index=False, lineterminator="\n")


def schema_for(data: Dataset, standardize_continuous: bool = False) -> DatasetSchema:
    """Schema describing ``data`` as written by save_csv."""
    columns = [ColumnSchema(name=data.response_name, role=ColumnRole.RESPONSE)]
    for j, name in enumerate(data.names or ()):
        continuous = j in data.continuous_cols
        columns.append(
            ColumnSchema(
                name=name,
                role=ColumnRole.CONTINUOUS if continuous else ColumnRole.DISCRETE,
                standardize=standardize_continuous and continuous,
            )
        )
    return DatasetSchema(columns=columns)


# ============================================================================
# Standardization
# ============================================================================

def standardize(data: Dataset, schema: DatasetSchema) -> Tuple[Dataset, StandardizationRecord]:
    """
    Center and scale the continuous covariates marked ``standardize`` (divisor n).

    Raises:
        ZeroVarianceError: If a marked column is constant
    """
    marked = {
        c.name.lower() for c in schema.covariates if c.standardize and ColumnRole(c.role) is ColumnRole.CONTINUOUS
    }
    x = data.x.copy()
    stats = []
    for j, name in enumerate(data.names or ()):
        if name.lower() not in marked:
            continue
        mean = float(np.mean(x[:, j]))
        sd = float(np.std(x[:, j]))
        if sd <= ZERO_SD_RTOL * max(1.0, abs(mean)):
            raise ZeroVarianceError(f"Column {name} has zero variance", stage="standardize", details={"column": name})
        x[:, j] = (x[:, j] - mean) / sd
        stats.append(ColumnStats(name=name, mean=mean, sd=sd))
    record = StandardizationRecord(columns=stats)
    logger.debug("standardized", columns=[s.name for s in stats])
    return data.with_covariates(x), record


def _record_columns(names: Sequence[str], record: StandardizationRecord) -> List[Tuple[int, ColumnStats]]:
    positions = {n.lower(): j for j, n in enumerate(names)}
    missing = [s.name for s in record.columns if s.name.lower() not in positions]
    if missing:
        raise ColumnMismatchError(
            f"Columns in the standardization record are absent: {', '.join(missing)}",
            stage="standardize",
            details={"missing": missing},
        )
    return [(positions[s.name.lower()], s) for s in record.columns]


def standardize_matrix(x: np.ndarray, names: Sequence[str], record: StandardizationRecord) -> np.ndarray:
    """(x - mean) / sd for the record's columns of a raw covariate matrix."""
    out = np.array(x, dtype=float, copy=True)
    if out.ndim != 2 or out.shape[1] != len(names):
        raise ColumnMismatchError("Covariate matrix width does not match the column names", stage="standardize")
    for j, stats in _record_columns(names, record):
        out[:, j] = (out[:, j] - stats.mean) / stats.sd
    return out


def apply_standardization(data: Dataset, record: StandardizationRecord) -> Dataset:
    """Transform test or query data with training statistics."""
    return data.with_covariates(standardize_matrix(data.x, data.names or (), record))


def destandardize(data: Dataset, record: StandardizationRecord) -> Dataset:
    """Inverse of apply_standardization."""
    x = data.x.copy()
    for j, stats in _record_columns(data.names or (), record):
        x[:, j] = x[:, j] * stats.sd + stats.mean
    return data.with_covariates(x)


def load_training(
    path: PathLike,
    schema: DatasetSchema,
    record: Optional[StandardizationRecord] = None,
) -> Tuple[Dataset, StandardizationRecord]:
    """Load and standardize; a stored ``record`` is reapplied instead of recomputed."""
    raw = load_csv(path, schema)
    if record is None:
        return standardize(raw, schema)
    return apply_standardization(raw, record), record
