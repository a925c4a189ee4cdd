"""
Thread pool with ordered results.

numpy releases the GIL inside the dense linear algebra that dominates each task,
so a thread pool is enough. With one worker tasks run inline on the caller's
thread, which keeps tracebacks and logging context simple.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import structlog

from ..core.config import settings
from ..core.exceptions import ConfigurationError

logger = structlog.get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class WorkerPool:
    """
    Context-managed executor.

    Usage:
        with WorkerPool(4) as pool:
            results = pool.map_ordered(fit_column, columns)
    """

    def __init__(self, max_workers: Optional[int] = None, name: str = "jvcqma"):
        workers = settings.MAX_WORKERS if max_workers is None else int(max_workers)
        if workers < 1:
            raise ConfigurationError("max_workers must be at least 1", details={"max_workers": workers})
        self.max_workers = workers
        self.name = name
        self._executor: Optional[ThreadPoolExecutor] = None

    def __enter__(self) -> "WorkerPool":
        if self.max_workers > 1:
            self._executor = ThreadPoolExecutor(max_workers=self.max_workers, thread_name_prefix=self.name)
            logger.debug("worker pool started", workers=self.max_workers)
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.shutdown()

    @property
    def is_parallel(self) -> bool:
        return self._executor is not None

    def map_ordered(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """Apply ``fn`` to every item; results come back in input order."""
        if self._executor is None:
            return [fn(item) for item in items]
        return list(self._executor.map(fn, items))

    def shutdown(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None


def run_ordered(pool: Optional[WorkerPool], fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """map_ordered on ``pool`` or inline when no pool is given."""
    if pool is None or not pool.is_parallel:
        return [fn(item) for item in items]
    return pool.map_ordered(fn, items)
