"""Canonical JSON and schema validation for reports and inputs."""

from __future__ import annotations

import hashlib
import json
from functools import lru_cache
from importlib import resources

import jsonschema

FORMAT_VERSION = "1.0"


def canonical_dumps(obj, indent: int | None = None) -> str:
    """Sorted keys, fixed separators: equal inputs give byte-identical text."""
    if indent is None:
        return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False)
    return json.dumps(obj, sort_keys=True, indent=indent, ensure_ascii=True, allow_nan=False)


def digest(obj) -> str:
    return "sha256:" + hashlib.sha256(canonical_dumps(obj).encode()).hexdigest()


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("ostro").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_json(obj, name: str) -> None:
    """Raise ``jsonschema.ValidationError`` if ``obj`` does not match schema ``name``."""
    jsonschema.validate(obj, load_schema(name))
