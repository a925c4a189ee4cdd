"""
Run directory writer.

Primary outputs (model.json, report.json, report.tsv, predictions.csv, ...) hold
only deterministic content so reruns are byte-identical. Timestamps, timings and
failure details go to meta.json.
"""

import json
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Union

import structlog
from pydantic import BaseModel

from ..core.config import settings
from ..core.exceptions import (
    ConfigurationError,
    DataError,
    EstimationError,
    JvcqmaError,
    RunFailureError,
    SolverError,
    ValidationError,
)
from ..schemas.base import ErrorDetail, ErrorType, Provenance, RunMetadata, RunStatus
from ..services.data_io import file_sha256

logger = structlog.get_logger(__name__)

META_FILE = "meta.json"

_ERROR_TYPES = [
    (ConfigurationError, ErrorType.CONFIGURATION_ERROR),
    (ValidationError, ErrorType.VALIDATION_ERROR),
    (SolverError, ErrorType.SOLVER_ERROR),
    (EstimationError, ErrorType.ESTIMATION_ERROR),
    (DataError, ErrorType.DATA_ERROR),
    (RunFailureError, ErrorType.RUN_FAILURE),
]


def error_detail(exc: BaseException) -> ErrorDetail:
    kind = next((t for cls, t in _ERROR_TYPES if isinstance(exc, cls)), ErrorType.INTERNAL_ERROR)
    if isinstance(exc, JvcqmaError):
        payload = exc.to_dict()
        return ErrorDetail(
            type=kind,
            error=payload["type"],
            message=payload["message"],
            stage=payload["stage"],
            details=json.loads(json.dumps(payload["details"], default=str)),
        )
    return ErrorDetail(type=kind, error=type(exc).__name__, message=str(exc))


def dumps(payload: Union[BaseModel, Dict[str, Any], List[Any]]) -> str:
    """Sorted-key JSON with a trailing newline."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n"


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag library errors raised inside the block with a pipeline stage."""
    try:
        yield
    except JvcqmaError as exc:
        raise exc.with_stage(name)


class RunWriter:
    """
    Output directory of one CLI run.

    Usage:
        with RunWriter(out_dir, "fit", config, inputs=[data_path]) as run:
            run.write_json("model.json", document)
    """

    def __init__(self, out_dir: Union[str, Path], command: str, config: Dict[str, Any], inputs: Optional[List[Path]] = None):
        self.out_dir = Path(out_dir)
        self.command = command
        self.outputs: List[str] = []
        self.timings: Optional[List[float]] = None
        self.started_at = datetime.now(timezone.utc)
        echo = {"options": config, "settings": settings.echo()}
        hashes = {str(p): file_sha256(p) for p in (inputs or [])}
        self.provenance = Provenance(command=command, config=json.loads(json.dumps(echo, default=str)), inputs=hashes)

    def __enter__(self) -> "RunWriter":
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self

    def __exit__(self, exc_type: Any, exc: Optional[BaseException], tb: Any) -> None:
        error = error_detail(exc) if exc is not None else None
        meta = RunMetadata(
            provenance=self.provenance,
            status=RunStatus.ERROR if error else RunStatus.SUCCESS,
            started_at=self.started_at,
            finished_at=datetime.now(timezone.utc),
            seconds_per_replication=self.timings,
            outputs=self.outputs,
            error=error,
        )
        (self.out_dir / META_FILE).write_text(dumps(meta), encoding="utf-8")

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write_text(self, name: str, text: str) -> Path:
        target = self.path(name)
        target.write_text(text, encoding="utf-8")
        self.outputs.append(name)
        logger.info("output written", path=str(target))
        return target

    def write_json(self, name: str, payload: Union[BaseModel, Dict[str, Any], List[Any]]) -> Path:
        return self.write_text(name, dumps(payload))
