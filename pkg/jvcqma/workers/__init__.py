"""
Background execution for embarrassingly parallel work.

LOO columns, replications and bootstrap resamples are independent; the pool runs
them on threads and always returns results in input order.
"""

from .pool import WorkerPool, run_ordered

__all__ = ["WorkerPool", "run_ordered"]
