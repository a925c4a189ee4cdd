"""
Configuration settings for jvcqma.

Centralized configuration management using Pydantic BaseSettings with environment
variable loading. Every numeric default used by the estimators lives here so the
CLI, the library and the tests agree on one set of constants.
"""

from typing import List

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigurationError


class Settings(BaseSettings):
    """
    Application settings loaded from environment variables.

    Variables are read with the ``JVCQMA_`` prefix, e.g. ``JVCQMA_LOG_LEVEL=DEBUG``.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="JVCQMA_",
        case_sensitive=True,
        extra="ignore",
    )

    # ============================================================================
    # Application Settings
    # ============================================================================

    PROJECT_NAME: str = "jvcqma"
    LOG_LEVEL: str = Field(default="INFO", description="Logging level")
    LOG_FORMAT: str = Field(default="console", description="Log renderer: console or json")

    # ============================================================================
    # Solver Tolerances
    # ============================================================================

    SOLVER_TOL: float = Field(default=1e-9, description="Duality gap / improvement tolerance for the LP solvers")
    WEIGHT_DROP_TOL: float = Field(default=1e-12, description="Observations with smaller kernel weight are dropped")
    WEIGHT_CLAMP_TOL: float = Field(default=1e-10, description="Averaging weights below this are clamped to zero")
    CANDIDATE_SKIP_TOL: float = Field(default=1e-12, description="Candidates below this weight are skipped at prediction")

    # ============================================================================
    # Smoothing
    # ============================================================================

    DEFAULT_KERNEL: str = Field(default="gauss", description="Kernel: gauss or epanechnikov")
    BANDWIDTH_GRID_SIZE: int = Field(default=20, description="Number of pilot bandwidth grid points")
    BANDWIDTH_GRID_LOW: float = Field(default=0.1, description="Grid lower multiplier of sd * n^(-1/5)")
    BANDWIDTH_GRID_HIGH: float = Field(default=3.0, description="Grid upper multiplier of sd * n^(-1/5)")
    ESCALATION_FACTOR: float = Field(default=1.5, description="Bandwidth multiplier for an underdetermined local fit")
    ESCALATION_MAX_STEPS: int = Field(default=5, description="Maximum bandwidth escalations per local fit")

    # ============================================================================
    # Failure Policies
    # ============================================================================

    LOO_FAILURE_LIMIT: float = Field(default=0.05, description="Max failed fraction per LOO column")
    RUN_FAILURE_LIMIT: float = Field(default=0.10, description="Max failed fraction of replications per method")

    # ============================================================================
    # Experiment Protocol
    # ============================================================================

    DEFAULT_REPS: int = Field(default=200, description="Replications per simulation setting")
    TEST_SIZE: int = Field(default=100, description="Test observations per replication")
    DEFAULT_SEED: int = Field(default=20240704, description="Master seed")
    MAX_WORKERS: int = Field(default=1, description="Worker threads for LOO fits, replications and bootstrap")
    TAU_GRID: List[float] = Field(
        default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        description="Quantile levels evaluated by default",
    )

    # ============================================================================
    # Computed Properties
    # ============================================================================

    @property
    def tau_grid_values(self) -> List[float]:
        """Quantile grid rounded to avoid float noise from env parsing."""
        return [round(t, 10) for t in self.TAU_GRID]

    def echo(self) -> dict:
        """Plain dict of the effective settings for provenance blocks."""
        return self.model_dump()


# ============================================================================
# Global Settings Instance
# ============================================================================

settings = Settings()


# ============================================================================
# Settings Validation
# ============================================================================

def validate_settings(config: Settings = settings) -> None:
    """
    Validate settings before a run.

    Raises:
        ConfigurationError: If a value is out of range
    """
    for name in ("SOLVER_TOL", "WEIGHT_DROP_TOL", "WEIGHT_CLAMP_TOL", "CANDIDATE_SKIP_TOL"):
        if getattr(config, name) <= 0:
            raise ConfigurationError(f"{name} must be positive", details={name: getattr(config, name)})

    if config.DEFAULT_KERNEL.lower() not in ("gauss", "gaussian", "epanechnikov"):
        raise ConfigurationError(f"Unknown kernel '{config.DEFAULT_KERNEL}'")

    if not 0 < config.BANDWIDTH_GRID_LOW < config.BANDWIDTH_GRID_HIGH:
        raise ConfigurationError(
            "Bandwidth grid must satisfy 0 < low < high",
            details={"low": config.BANDWIDTH_GRID_LOW, "high": config.BANDWIDTH_GRID_HIGH},
        )

    if config.BANDWIDTH_GRID_SIZE < 1:
        raise ConfigurationError("BANDWIDTH_GRID_SIZE must be at least 1")

    if config.ESCALATION_FACTOR <= 1.0 or config.ESCALATION_MAX_STEPS < 0:
        raise ConfigurationError("Bandwidth escalation needs factor > 1 and non-negative steps")

    if any(not 0 < t < 1 for t in config.TAU_GRID):
        raise ConfigurationError("TAU_GRID entries must lie in (0, 1)", details={"tau_grid": config.TAU_GRID})

    if config.MAX_WORKERS < 1:
        raise ConfigurationError("MAX_WORKERS must be at least 1")
