"""JSON schemas for every file the package reads or writes."""

import json
from functools import lru_cache
from importlib import resources

import jsonschema


class SchemaError(ValueError):
    """A document failed validation; the message names the offending field."""


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files(__name__).joinpath(f"{name}.schema.json").read_text(
        encoding="utf-8")
    return json.loads(text)


def validate(doc, name: str):
    try:
        jsonschema.validate(doc, load_schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{name}: {where}: {exc.message}") from None
