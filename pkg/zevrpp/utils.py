"""Assertion helpers, tolerance arithmetic and timing."""

import contextlib
import logging
import re
import time
import typing

import attrs

T = typing.TypeVar("T")

logger = logging.getLogger(__name__)


def assert_is_instance(obj: object, cls: type[T]) -> T:
    """Assert object is instance of class with proper typing."""
    assert isinstance(obj, cls), f"Expected {cls.__name__}, got {type(obj).__name__}"
    return obj


def relative_difference(value: float, expected: float) -> float:
    """``|value − expected| / |expected|``, falling back to absolute at zero."""
    return abs(value - expected) / (abs(expected) or 1.0)


_LABEL_UNSAFE = re.compile(r"[^\w.-]+")


def file_stem(*labels: str, max_length: int = 80) -> str:
    """Join scenario and case labels into a filename stem."""
    stem = "_".join(_LABEL_UNSAFE.sub("-", label.strip()) for label in labels if label.strip())
    return stem[:max_length] or "unnamed"


@attrs.define
class Stopwatch:
    started: float = attrs.field(factory=time.perf_counter)
    stopped: float | None = None

    @property
    def elapsed(self) -> float:
        end = self.stopped if self.stopped is not None else time.perf_counter()
        return end - self.started


@contextlib.contextmanager
def timer(operation_name: str, level: int = logging.INFO) -> typing.Iterator[Stopwatch]:
    """Time a block and log its duration; the stopwatch stays readable afterwards."""
    watch = Stopwatch()
    try:
        yield watch
    finally:
        watch.stopped = time.perf_counter()
        logger.log(level, "%s completed in %.2f seconds", operation_name.capitalize(), watch.elapsed)
