"""JSON helpers returning UTF-8 bytes; numpy values are converted to builtins."""

import json
from typing import Any

import numpy as np


def _default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def loads(data: bytes | str) -> Any:
    """Deserialize JSON data."""
    return json.loads(data)


def dumps(obj: Any) -> bytes:
    """Serialize to compact, key-sorted UTF-8 JSON bytes."""
    return json.dumps(
        obj,
        ensure_ascii=False,
        separators=(",", ":"),
        sort_keys=True,
        default=_default,
    ).encode()


def dumps_indented(obj: Any) -> bytes:
    """Serialize to 2-space-indented, key-sorted UTF-8 JSON bytes.

    Reports are compared byte for byte across runs, so key order must not
    depend on construction order.
    """
    return json.dumps(
        obj, ensure_ascii=False, indent=2, sort_keys=True, default=_default
    ).encode()
