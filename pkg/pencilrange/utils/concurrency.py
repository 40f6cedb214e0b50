from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

_T = TypeVar("_T")
_R = TypeVar("_R")

THREADS_ENV = "PENCILRANGE_THREADS"


def resolve_threads(threads: Optional[int] = None) -> int:
    """Number of worker threads

    Precedence: the explicit value, then PENCILRANGE_THREADS, then the processor count
    """
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"threads must be at least 1, got {threads}")
    return threads


def parallel_map(
    func: Callable[[_T], _R], items: Iterable[_T], threads: Optional[int] = None
) -> list[_R]:
    """Map `func` over `items` on a thread pool, results in input order"""
    work = list(items)
    workers = min(resolve_threads(threads), max(len(work), 1))
    if workers == 1:
        return [func(item) for item in work]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, work))
