"""Worker-pool sizing and deterministic task fan-out.

``SDRCDE_THREADS`` caps worker parallelism; 0 (the default) means one
worker per CPU. Results are always returned in submission order, so
parallel execution never changes outputs.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(n_tasks: int) -> int:
    raw = os.environ.get("SDRCDE_THREADS", "0")
    try:
        k = int(raw)
    except ValueError:
        k = 0
    if k <= 0:
        k = os.cpu_count() or 1
    return max(1, min(k, n_tasks))


def run_ordered(fn, args_list):
    """Apply ``fn`` to each argument tuple, preserving input order."""
    n = len(args_list)
    if n == 0:
        return []
    workers = worker_count(n)
    if workers == 1:
        return [fn(*args) for args in args_list]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args) for args in args_list]
        return [f.result() for f in futures]
