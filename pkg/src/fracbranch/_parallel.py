"""Deterministic chunked execution for replicate loops.

Work is split into fixed chunks, each bound to its own substream, so the
result is bit-identical whatever the worker count.  The environment
variable ``FRACBRANCH_THREADS`` caps the number of worker threads
(default 1, i.e. serial); numpy kernels release the GIL enough for the
chunks to overlap.
"""

import os
from concurrent.futures import ThreadPoolExecutor

from .streams import RngStream

__all__ = ["thread_cap", "map_chunks", "split_chunks"]


def thread_cap() -> int:
    raw = os.environ.get("FRACBRANCH_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def split_chunks(n_total: int, chunk_size: int) -> list[int]:
    """Chunk sizes covering ``n_total`` items, each at most ``chunk_size``."""
    sizes = []
    left = int(n_total)
    while left > 0:
        take = min(chunk_size, left)
        sizes.append(take)
        left -= take
    return sizes


def map_chunks(fn, sizes: list[int], rng: RngStream, offset: int = 0) -> list:
    """Run ``fn(chunk_size, substream)`` over every chunk, in order.

    Chunk ``i`` always receives ``rng.substream(offset + i)``, making the
    output independent of the executing thread count.
    """
    streams = [rng.substream(offset + i) for i in range(len(sizes))]
    workers = min(thread_cap(), len(sizes))
    if workers <= 1:
        return [fn(m, s) for m, s in zip(sizes, streams)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, m, s) for m, s in zip(sizes, streams)]
        return [f.result() for f in futures]
