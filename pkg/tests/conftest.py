"""
Shared fixtures.

Small deterministic datasets sized so that every local-linear fit has enough
weighted observations, plus helpers that write them to CSV with a schema file.
"""

import json
from pathlib import Path
from typing import Callable, Tuple

import numpy as np
import pytest
import structlog

from jvcqma.core.config import settings
from jvcqma.services.data_io import save_csv, schema_for
from jvcqma.services.dataset import Dataset


@pytest.fixture(autouse=True)
def reset_structlog():
    """CLI runs configure structlog against a captured stream; restore defaults afterwards."""
    yield
    structlog.reset_defaults()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(12345))


@pytest.fixture
def linear_data() -> Dataset:
    """Noiseless y = 1 + 2 x1 - x2 on two continuous covariates."""
    gen = np.random.Generator(np.random.Philox(7))
    x = gen.uniform(-1.0, 1.0, (40, 2))
    y = 1.0 + 2.0 * x[:, 0] - x[:, 1]
    return Dataset(y, x, continuous_cols=(0, 1))


@pytest.fixture
def vc_data() -> Dataset:
    """Varying-coefficient sample whose true model is indexed by X1."""
    gen = np.random.Generator(np.random.Philox(11))
    x = gen.uniform(-1.0, 1.0, (60, 2))
    y = np.sin(2.0 * x[:, 0]) + x[:, 1] * (1.0 + x[:, 0] ** 2) + 0.3 * gen.standard_normal(60)
    return Dataset(y, x, continuous_cols=(0, 1))


@pytest.fixture
def mixed_data() -> Dataset:
    """Two continuous covariates and one binary covariate."""
    gen = np.random.Generator(np.random.Philox(23))
    continuous = gen.uniform(-1.0, 1.0, (60, 2))
    binary = gen.binomial(1, 0.5, 60).astype(float)
    x = np.column_stack([continuous, binary])
    y = continuous[:, 0] + (1.0 + continuous[:, 0]) * binary - 0.5 * continuous[:, 1] + 0.2 * gen.standard_normal(60)
    return Dataset(y, x, continuous_cols=(0, 1), discrete_cols=(2,), names=("A", "B", "D"), response_name="Y")


@pytest.fixture
def override_settings(monkeypatch) -> Callable[..., None]:
    """Temporarily replace settings fields: override_settings(ESCALATION_MAX_STEPS=0)."""

    def apply(**values: object) -> None:
        for name, value in values.items():
            monkeypatch.setattr(settings, name, value)

    return apply


@pytest.fixture
def write_dataset(tmp_path: Path) -> Callable[..., Tuple[Path, Path]]:
    """Write a Dataset as CSV plus schema JSON; returns (csv_path, schema_path)."""

    def write(data: Dataset, name: str = "data", standardize: bool = False) -> Tuple[Path, Path]:
        csv_path = tmp_path / f"{name}.csv"
        schema_path = tmp_path / f"{name}_schema.json"
        save_csv(csv_path, data)
        columns = [c.model_dump(mode="json") for c in schema_for(data, standardize_continuous=standardize).columns]
        schema_path.write_text(json.dumps(columns), encoding="utf-8")
        return csv_path, schema_path

    return write
