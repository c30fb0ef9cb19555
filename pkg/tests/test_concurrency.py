"""Tests for the memoizing cache and the ordered pool map."""

import threading
import time

import pytest

from zevrpp import concurrency


def test_contended_key_computes_exactly_once() -> None:
    calls = []
    barrier = threading.Barrier(8)
    entered = threading.Event()
    release = threading.Event()

    @concurrency.threadsafe_cache
    def fit(key: str) -> list[str]:
        calls.append(key)
        entered.set()
        # Hold the first fit open so the other callers queue on its lock.
        assert release.wait(timeout=5)
        return [key]

    results: list[list[str]] = []

    def racer() -> None:
        barrier.wait(timeout=5)
        results.append(fit("stability"))

    threads = [threading.Thread(target=racer) for _ in range(8)]
    for t in threads:
        t.start()
    assert entered.wait(timeout=5)
    release.set()
    for t in threads:
        t.join(timeout=5)

    assert calls == ["stability"]
    assert len(results) == 8 and all(r is results[0] for r in results)


def test_failure_is_not_cached_and_retried() -> None:
    calls = []

    @concurrency.threadsafe_cache
    def flaky(key: str) -> str:
        calls.append(key)
        if len(calls) == 1:
            raise ValueError("first call fails")
        return key

    with pytest.raises(ValueError, match="first call fails"):
        flaky("k")
    assert flaky("k") == "k"
    assert calls == ["k", "k"]


def test_kwargs_participate_in_key() -> None:
    calls = []

    @concurrency.threadsafe_cache
    def fit(*, terms: int) -> int:
        calls.append(terms)
        return terms

    assert fit(terms=1) == 1
    assert fit(terms=2) == 2
    assert fit(terms=1) == 1
    assert calls == [1, 2]


@pytest.mark.parametrize("workers", [1, 4])
def test_map_ordered_keeps_input_order(workers: int) -> None:
    def slow_square(x: int) -> int:
        time.sleep(0.001 * (10 - x))
        return x * x

    assert concurrency.map_ordered(slow_square, range(10), max_workers=workers) == [
        x * x for x in range(10)
    ]


def test_map_ordered_propagates_errors() -> None:
    def fail_on_three(x: int) -> int:
        if x == 3:
            raise RuntimeError("bad item")
        return x

    with pytest.raises(RuntimeError, match="bad item"):
        concurrency.map_ordered(fail_on_three, range(6), max_workers=3)


def test_worker_count_reads_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("ZEVRPP_THREADS", "3")
    assert concurrency.worker_count() == 3
    monkeypatch.setenv("ZEVRPP_THREADS", "zero")
    with pytest.raises(ValueError, match="ZEVRPP_THREADS"):
        concurrency.worker_count()
    monkeypatch.setenv("ZEVRPP_THREADS", "0")
    with pytest.raises(ValueError, match="positive"):
        concurrency.worker_count()
