"""
Subcommands and the helpers they share.
"""

from pathlib import Path
from typing import List, Optional, Tuple

import click

from ...schemas.data import DatasetSchema, StandardizationRecord
from ...services.data_io import boston_schema, load_csv, load_schema, standardize
from ...services.dataset import Dataset
from ..output import stage


def schema_from_options(schema_path: Optional[str], boston: bool) -> Tuple[DatasetSchema, List[Path]]:
    """Schema from --schema or --boston, plus the input files to hash."""
    if schema_path and boston:
        raise click.UsageError("Use either --schema or --boston, not both")
    if boston:
        return boston_schema(), []
    if not schema_path:
        raise click.UsageError("A column schema is required: pass --schema PATH or --boston")
    with stage("load"):
        return load_schema(schema_path), [Path(schema_path)]


def load_dataset(path: str, schema: DatasetSchema, scale: bool) -> Tuple[Dataset, StandardizationRecord]:
    """Load and (unless disabled) standardize the marked columns."""
    with stage("load"):
        raw = load_csv(path, schema)
    if not scale:
        return raw, StandardizationRecord()
    with stage("standardize"):
        return standardize(raw, schema)


def data_options(f):  # type: ignore[no-untyped-def]
    f = click.option("--no-standardize", "no_standardize", is_flag=True, help="Use columns as given.")(f)
    f = click.option("--boston", is_flag=True, help="Use the bundled Boston housing schema.")(f)
    f = click.option("--schema", "schema_path", type=click.Path(exists=True, dir_okay=False), help="Column schema JSON.")(f)
    return f
