"""Memoization and ordered thread-pool mapping for fits, sweeps and oracles."""

import concurrent.futures
import functools
import os
import threading
from typing import Any, Callable, Iterable, ParamSpec, Sequence, TypeVar, cast

from tqdm import tqdm

_T = TypeVar("_T")
_P = ParamSpec("_P")
_R = TypeVar("_R")

_THREADS_ENV = "ZEVRPP_THREADS"


def worker_count() -> int:
    """Worker threads for concurrent solves, from ZEVRPP_THREADS or the CPU count."""
    if not (value := os.getenv(_THREADS_ENV)):
        return os.cpu_count() or 1
    try:
        count = int(value.strip())
    except ValueError as e:
        raise ValueError(
            f"Invalid {_THREADS_ENV}: '{value}'. Expected a positive integer"
        ) from e
    if count < 1:
        raise ValueError(f"Invalid {_THREADS_ENV}: '{value}'. Expected a positive integer")
    return count


def threadsafe_cache(fn: Callable[_P, _R]) -> Callable[_P, _R]:
    """Unbounded memoization that computes each key at most once at a time.

    Surrogate fits take seconds and are requested from several sweep workers
    at once; a per-key lock makes later callers wait for the first result
    instead of refitting. Exceptions are not cached, so a waiter that finds
    no result after the lock is released computes again and sees the error
    itself.
    """
    results: dict[Any, _R] = {}
    key_locks: dict[Any, threading.Lock] = {}
    guard = threading.Lock()

    @functools.wraps(fn)
    def wrapper(*args: _P.args, **kwargs: _P.kwargs) -> _R:
        key = (args, frozenset(kwargs.items())) if kwargs else args
        if key in results:
            return results[key]
        with guard:
            key_lock = key_locks.setdefault(key, threading.Lock())
        with key_lock:
            if key in results:
                return results[key]
            value = fn(*args, **kwargs)
            results[key] = value
            return cast(_R, value)

    return wrapper


def map_ordered(
    fn: Callable[[_T], _R],
    items: Iterable[_T],
    *,
    max_workers: int | None = None,
    desc: str | None = None,
    show_progress: bool = False,
) -> list[_R]:
    """Apply ``fn`` to every item on a thread pool; results keep input order.

    The first exception raised by any call propagates after the pool drains.
    """
    materialized: Sequence[_T] = list(items)
    workers = max_workers if max_workers is not None else worker_count()
    if workers <= 1 or len(materialized) <= 1:
        return [
            fn(item)
            for item in tqdm(materialized, desc=desc, disable=not show_progress)
        ]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(
            tqdm(
                pool.map(fn, materialized),
                total=len(materialized),
                desc=desc,
                disable=not show_progress,
            )
        )
