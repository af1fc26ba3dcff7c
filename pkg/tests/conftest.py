"""Shared test configuration.

The workloads here are many small matrix products; OpenBLAS's default
thread pool oversubscribes them badly, so the suite pins BLAS to one
thread when threadpoolctl is available.
"""

try:
    from threadpoolctl import threadpool_limits

    _limiter = threadpool_limits(limits=1)
except ImportError:      # pragma: no cover - optional speedup only
    _limiter = None
