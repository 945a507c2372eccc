"""Shared helpers: worker-count env override and deterministic chunked maps."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")

WORKERS_ENV = "SUBROUND_THREADS"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        k = int(raw)
    except ValueError:
        return 1
    return max(1, k)


def chunked_map(fn: Callable[..., T], args_list: Sequence[tuple]) -> list[T]:
    """Apply fn to each args tuple; results keep submission order, so the
    merge is identical no matter how many workers run."""
    k = worker_count()
    if k <= 1 or len(args_list) <= 1:
        return [fn(*args) for args in args_list]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(lambda a: fn(*a), args_list))


def chunk_sizes(total: int, chunk: int) -> list[int]:
    out = [chunk] * (total // chunk)
    if total % chunk:
        out.append(total % chunk)
    return out
