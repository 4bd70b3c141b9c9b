"""Thread-budget control.

Work is always split into fixed-size chunks writing disjoint output slices,
so results are bitwise identical for every thread count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_num_threads = 1


def set_num_threads(n: int):
    global _num_threads
    if n <= 0:
        n = os.cpu_count() or 1
    _num_threads = int(n)


def get_num_threads() -> int:
    return _num_threads


def run_chunked(total: int, worker, chunk_size: int):
    """Call ``worker(start, stop)`` over [0, total) in fixed chunks.

    Chunk boundaries depend only on ``chunk_size``, never on the thread
    budget; workers must write disjoint slices of preallocated outputs.
    """
    if total <= 0:
        return
    bounds = [(s, min(s + chunk_size, total)) for s in range(0, total, chunk_size)]
    if _num_threads == 1 or len(bounds) == 1:
        for start, stop in bounds:
            worker(start, stop)
        return
    with ThreadPoolExecutor(max_workers=min(_num_threads, len(bounds))) as pool:
        futures = [pool.submit(worker, start, stop) for start, stop in bounds]
        for fut in futures:
            fut.result()
