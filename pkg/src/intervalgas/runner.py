"""Deterministic batch scheduling, serial or across worker processes.

Estimates depend only on (seed, batch schedule): every batch owns a seeded
substream and results are reduced in batch order, so output is identical
for any worker count.
"""

from __future__ import annotations

import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor


def parallel_map(func, args_list, workers: int = 1) -> list:
    """Map `func` over `args_list`, preserving order exactly.

    `func` must be importable at module top level when workers > 1; worker
    processes are spawned (not forked) so they behave identically on every
    platform.
    """
    args_list = list(args_list)
    if workers <= 1 or len(args_list) <= 1:
        return [func(a) for a in args_list]
    ctx = mp.get_context("spawn")
    chunk = max(1, len(args_list) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(func, args_list, chunksize=chunk))
