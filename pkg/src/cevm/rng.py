"""Counter-based random substreams and a deterministic parallel map.

Every chunk of work owns a Philox stream keyed by ``(seed, chunk_index)``,
so results do not depend on how chunks are spread over threads.
"""

from __future__ import annotations

import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np

CHUNK = 1 << 16
T = TypeVar("T")
R = TypeVar("R")


def substream(seed: int, index: int, *, domain: int = 0) -> np.random.Generator:
    """Independent generator for chunk ``index`` (``domain`` separates uses of one seed)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(domain), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def n_threads() -> int:
    """Worker cap from ``CEVM_THREADS`` (default: CPU count)."""
    raw = os.environ.get("CEVM_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def chunk_sizes(n: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(int(n), chunk)
    return [chunk] * full + ([rest] if rest else [])


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """``[fn(i) for i in items]`` evaluated on a thread pool, results in input order."""
    items = list(items)
    workers = n_threads() if workers is None else max(1, workers)
    if workers == 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
