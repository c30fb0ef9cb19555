"""TOML loading into pydantic models; schema errors carry file and key."""

import pathlib
import tomllib
from typing import Any, TypeVar

import pydantic

from zevrpp.errors import ScenarioError

DATA_DIR = pathlib.Path(__file__).parent / "data"

M = TypeVar("M", bound=pydantic.BaseModel)


def read(path: pathlib.Path) -> dict[str, Any]:
    """Parse a TOML file; missing files and syntax errors become ScenarioError."""
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise ScenarioError(str(path), "<file>", "file not found") from e
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(str(path), "<syntax>", str(e)) from e


def validate(file: str, data: Any, model: type[M]) -> M:
    """Validate ``data`` against ``model``, reporting the first error's location."""
    try:
        return model.model_validate(data)
    except pydantic.ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(part) for part in error["loc"]) or "<root>"
        raise ScenarioError(file, key, error["msg"]) from e


def load(path: pathlib.Path, model: type[M]) -> M:
    return validate(str(path), read(path), model)
