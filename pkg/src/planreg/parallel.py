"""Order-preserving fan-out over worker processes.

Tasks carry their own RNG stream identities, so the output of
:func:`ordered_map` is the same for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, tasks, threads: int = 1) -> list:
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))
