"""
Comparison reports.

FpeReport holds mean out-of-sample check loss per method and quantile level;
WeightSummary holds the distribution of estimated weights across replications or
bootstrap resamples. Both render to TSV tables with one row per tau.
"""

from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import Field

from .base import Document

INTERVAL_Z = 1.96


class ExternalMethod(str, Enum):
    """Comparison methods computed outside this package."""
    PLQR = "PLQR"
    LQMA = "LQMA"
    AQR = "AQR"


def _tau_key(tau: float) -> float:
    return round(float(tau), 10)


# ============================================================================
# FPE
# ============================================================================

class MethodFpe(Document):
    """Mean and sd of FPE for one method at one quantile level."""

    method: str
    tau: float
    mean: Optional[float] = Field(None, description="Mean FPE over successful replications")
    sd: Optional[float] = Field(None, description="Sample standard deviation of FPE")
    replications: int = Field(0, ge=0, description="Successful replications")
    failures: int = Field(0, ge=0, description="Replications where the method failed")
    external: bool = False


class RatioSummary(Document):
    """Oracle ratio FPE(w_hat) / best reference FPE at one quantile level."""

    tau: float
    mean: float
    sd: Optional[float] = None
    replications: int = 0


class RunDiagnostics(Document):
    """Counters gathered while scoring the JVCQMA weights."""

    cv_checks: int = Field(0, ge=0, description="Fits whose CV criterion was compared with the reference weights")
    cv_violations: int = Field(0, ge=0, description="Fits whose CV criterion exceeded a vertex or equal weights")
    ratio_excluded_rows: int = Field(0, ge=0, description="Test rows left out of the oracle ratio for missing predictions")


class FpeReport(Document):
    """Per-method, per-tau FPE summaries."""

    design: Dict[str, Any] = Field(default_factory=dict, description="Simulation design or split settings")
    taus: List[float]
    methods: List[str]
    reps: int = Field(..., ge=1)
    rows: List[MethodFpe] = Field(default_factory=list)
    oracle_ratio: List[RatioSummary] = Field(default_factory=list)
    diagnostics: RunDiagnostics = Field(default_factory=RunDiagnostics)
    seconds_per_replication: List[float] = Field(default_factory=list, exclude=True)

    def cell(self, method: str, tau: float) -> Optional[MethodFpe]:
        key = _tau_key(tau)
        for row in self.rows:
            if row.method == method and _tau_key(row.tau) == key:
                return row
        return None

    def merge_external(self, name: str, values: Mapping[float, float]) -> "FpeReport":
        """Copy of the report with externally computed mean FPEs added as method ``name``."""
        method = ExternalMethod(name).value
        rows = [r for r in self.rows if r.method != method]
        for tau, value in sorted(values.items()):
            rows.append(MethodFpe(method=method, tau=float(tau), mean=float(value), external=True))
        methods = self.methods + ([method] if method not in self.methods else [])
        return self.model_copy(update={"rows": rows, "methods": methods})

    def to_table(self) -> pd.DataFrame:
        """Rows tau, columns methods, cells mean FPE."""
        table = pd.DataFrame(index=pd.Index([_tau_key(t) for t in self.taus], name="tau"), columns=self.methods, dtype=float)
        for row in self.rows:
            if row.mean is not None and _tau_key(row.tau) in table.index:
                table.loc[_tau_key(row.tau), row.method] = row.mean
        if self.oracle_ratio:
            table["ratio"] = [
                next((r.mean for r in self.oracle_ratio if _tau_key(r.tau) == t), np.nan) for t in table.index
            ]
        return table

    def to_tsv(self) -> str:
        return self.to_table().to_csv(sep="\t", na_rep="NA")


# ============================================================================
# Weights
# ============================================================================

class CandidateWeight(Document):
    candidate: str
    index_col: int
    mean: float
    sd: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None


class TauWeights(Document):
    """Weight distribution at one quantile level."""

    tau: float
    draws: int = Field(..., ge=0)
    failures: int = Field(0, ge=0)
    candidates: List[CandidateWeight]


class WeightSummary(Document):
    """Mean and sd of estimated weights; bootstrap summaries add mean +/- 1.96 sd intervals."""

    source: str = Field(..., description="replications or bootstrap")
    per_tau: List[TauWeights] = Field(default_factory=list)

    @staticmethod
    def summarize(
        tau: float,
        draws: np.ndarray,
        names: Sequence[str],
        index_cols: Sequence[int],
        failures: int = 0,
        intervals: bool = False,
    ) -> TauWeights:
        """TauWeights from a (draws, p) matrix of weight vectors."""
        draws = np.atleast_2d(np.asarray(draws, dtype=float))
        count = draws.shape[0] if draws.size else 0
        candidates = []
        for k, (name, col) in enumerate(zip(names, index_cols)):
            values = draws[:, k] if count else np.array([])
            mean = float(values.mean()) if count else float("nan")
            sd = float(values.std(ddof=1)) if count > 1 else None
            entry: Dict[str, Any] = {"candidate": name, "index_col": int(col), "mean": mean, "sd": sd}
            if intervals and sd is not None:
                entry["lower"] = max(0.0, mean - INTERVAL_Z * sd)
                entry["upper"] = min(1.0, mean + INTERVAL_Z * sd)
            candidates.append(CandidateWeight(**entry))
        return TauWeights(tau=float(tau), draws=count, failures=failures, candidates=candidates)

    def to_table(self) -> pd.DataFrame:
        """Long table: tau, candidate, mean, sd, lower, upper."""
        records = [
            {
                "tau": _tau_key(block.tau),
                "candidate": c.candidate,
                "mean": c.mean,
                "sd": c.sd,
                "lower": c.lower,
                "upper": c.upper,
            }
            for block in self.per_tau
            for c in block.candidates
        ]
        return pd.DataFrame.from_records(records, columns=["tau", "candidate", "mean", "sd", "lower", "upper"])

    def to_tsv(self) -> str:
        return self.to_table().to_csv(sep="\t", index=False, na_rep="NA")
