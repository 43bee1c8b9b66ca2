"""One-canonical-JSON-object-per-line file helpers."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator, TypeVar

from pydantic import BaseModel

from .model import ValidationError, deserialize, serialize

E = TypeVar("E", bound=BaseModel)


def write_jsonl(path: str | Path, entities: Iterable[BaseModel]) -> int:
    """Write entities as canonical JSONL; returns the line count."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for entity in entities:
            fh.write(serialize(entity))
            fh.write("\n")
            count += 1
    return count


def read_jsonl(path: str | Path, cls: type[E]) -> Iterator[E]:
    """Yield entities from a JSONL file; blank lines are skipped.

    ValidationError from a bad line is re-raised with the line number
    prepended to each violation path.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield deserialize(line, cls)
            except ValidationError as exc:
                raise ValidationError(
                    [(f"line {lineno}.{path_}" if path_ else f"line {lineno}", msg)
                     for path_, msg in exc.violations]
                ) from exc


def load_jsonl(path: str | Path, cls: type[E]) -> list[E]:
    return list(read_jsonl(path, cls))
