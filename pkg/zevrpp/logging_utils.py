"""Shared logging configuration."""

import logging
import os

_LEVEL_ENV = "ZEVRPP_LOG_LEVEL"


def level_from_env(default: int = logging.INFO) -> int:
    """Resolve ZEVRPP_LOG_LEVEL (a level name such as DEBUG) to a logging level."""
    if not (name := os.getenv(_LEVEL_ENV)):
        return default
    level = logging.getLevelName(name.strip().upper())
    if not isinstance(level, int):
        raise ValueError(f"Invalid {_LEVEL_ENV}: '{name}'")
    return level


def setup_logging(*, level: int | None = None) -> None:
    logging.basicConfig(
        level=level if level is not None else level_from_env(),
        format="%(asctime)s.%(msecs)03d %(levelname)s %(name)-35s %(message)s",
        datefmt="%Y%m%d %H:%M:%S",
    )
