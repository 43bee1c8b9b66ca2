"""Append-only annotation log with latest-wins semantics.

The log file is never rewritten: every rating is appended and fsynced
before the write is acknowledged, which gives an audit trail and
trivial crash recovery. The effective rating for an (item, annotator)
pair is the entry with the highest timestamp; exact timestamp ties
fall back to the canonical serialization so the outcome is independent
of log order.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path
from typing import Iterable, Optional

from .model import Annotation, serialize


def _effective_sort_key(annotation: Annotation) -> tuple:
    return (annotation.timestamp, serialize(annotation))


class AnnotationStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._annotations: list[Annotation] = []
        if self.path.exists():
            from .jsonl import read_jsonl

            self._annotations = list(read_jsonl(self.path, Annotation))

    def __len__(self) -> int:
        return len(self._annotations)

    @property
    def annotations(self) -> tuple[Annotation, ...]:
        with self._lock:
            return tuple(self._annotations)

    def append(self, annotation: Annotation) -> None:
        """Durably append one entry; acknowledged only after fsync."""
        line = serialize(annotation) + "\n"
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
            self._annotations.append(annotation)

    def effective(self) -> dict[tuple[str, str], Annotation]:
        """Latest rating per (item_id, annotator_id)."""
        return effective_annotations(self.annotations)

    def rated_items(self, annotator_id: str) -> set[str]:
        return {
            item_id
            for (item_id, who) in self.effective()
            if who == annotator_id
        }


def effective_annotations(
    annotations: Iterable[Annotation],
) -> dict[tuple[str, str], Annotation]:
    result: dict[tuple[str, str], Annotation] = {}
    for annotation in annotations:
        key = (annotation.item_id, annotation.annotator_id)
        current: Optional[Annotation] = result.get(key)
        if current is None or _effective_sort_key(annotation) > _effective_sort_key(current):
            result[key] = annotation
    return result
