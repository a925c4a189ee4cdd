"""
Tests for the worker pool.
"""

import threading

import pytest

from jvcqma.core.exceptions import ConfigurationError
from jvcqma.workers.pool import WorkerPool, run_ordered


class TestWorkerPool:
    """Ordered mapping with and without threads."""

    def test_parallel_results_keep_input_order(self):
        with WorkerPool(4) as pool:
            assert pool.is_parallel
            assert pool.map_ordered(lambda v: v * v, range(20)) == [v * v for v in range(20)]
        assert not pool.is_parallel

    def test_single_worker_runs_inline(self):
        caller = threading.get_ident()
        with WorkerPool(1) as pool:
            assert not pool.is_parallel
            threads = pool.map_ordered(lambda _: threading.get_ident(), range(3))
        assert threads == [caller] * 3

    def test_run_ordered_without_pool(self):
        assert run_ordered(None, str, [1, 2]) == ["1", "2"]

    def test_exceptions_propagate(self):
        def boom(v: int) -> int:
            raise ValueError(v)

        with WorkerPool(2) as pool:
            with pytest.raises(ValueError):
                pool.map_ordered(boom, [1])

    def test_default_size_from_settings(self, override_settings):
        override_settings(MAX_WORKERS=3)
        assert WorkerPool().max_workers == 3

    def test_rejects_zero_workers(self):
        with pytest.raises(ConfigurationError):
            WorkerPool(0)
