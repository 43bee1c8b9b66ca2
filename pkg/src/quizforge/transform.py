"""Derive the short-answer dataset from the multiple-choice dataset.

Each MCQ becomes a SAQ by keeping the stem and the correct option's
text and discarding the distractors. Stems are carried over verbatim;
stems that presuppose visible options ("aşağıdakilerden hangisi") are
flagged for curator review rather than rewritten.
"""

from __future__ import annotations

from pathlib import Path

from .model import Entity, QuizItem, QuizKind, QuizSet, ValidationError
from .textutil import turkish_lower

OPTION_DEPENDENT_PHRASE = "aşağıdakilerden hangisi"


class InvalidInput(ValueError):
    """The input set is not a valid MCQ set."""


def mcq_to_saq(qs: QuizSet) -> QuizSet:
    """Convert an MCQ set to an SAQ set; ids and provenance are kept."""
    if qs.format is not QuizKind.MCQ:
        raise InvalidInput(f"set for {qs.doc_id} has format {qs.format.value}, expected mcq")
    items = []
    for item in qs.items:
        if item.correct_label is None:
            raise InvalidInput(f"item {item.item_id} lacks correct_label")
        items.append(
            QuizItem(
                item_id=item.item_id,
                kind=QuizKind.SAQ,
                stem=item.stem,
                answer_text=item.correct_text,
            )
        )
    note = "derived:mcq-to-saq"
    if qs.provenance.note:
        note = f"{qs.provenance.note}; {note}"
    return QuizSet(
        doc_id=qs.doc_id,
        format=QuizKind.SAQ,
        items=tuple(items),
        provenance=qs.provenance.model_copy(update={"note": note}),
    )


def flag_option_dependent_stems(qs: QuizSet) -> list[str]:
    """Item ids whose stems presuppose a visible option list."""
    return [
        item.item_id
        for item in qs.items
        if OPTION_DEPENDENT_PHRASE in turkish_lower(item.stem)
    ]


class TransformError(Entity):
    line: int
    error: str


class TransformSummary(Entity):
    sets_in: int
    sets_out: int
    items_out: int
    errors: tuple[TransformError, ...]
    flagged_item_ids: tuple[str, ...]


def transform_corpus(in_path: str | Path, out_path: str | Path) -> TransformSummary:
    """Convert a JSONL file of MCQ sets to SAQ sets, record by record.

    Bad records are collected into the summary and skipped; good ones
    are still written, so one corrupt line cannot sink a run.
    """
    from .model import deserialize, serialize

    in_path, out_path = Path(in_path), Path(out_path)
    errors: list[TransformError] = []
    flagged: list[str] = []
    sets_in = sets_out = items_out = 0
    with in_path.open("r", encoding="utf-8") as src, out_path.open(
        "w", encoding="utf-8"
    ) as dst:
        for lineno, line in enumerate(src, start=1):
            line = line.strip()
            if not line:
                continue
            sets_in += 1
            try:
                converted = mcq_to_saq(deserialize(line, QuizSet))
            except (ValidationError, InvalidInput) as exc:
                errors.append(TransformError(line=lineno, error=str(exc)))
                continue
            flagged.extend(flag_option_dependent_stems(converted))
            dst.write(serialize(converted) + "\n")
            sets_out += 1
            items_out += len(converted.items)
    return TransformSummary(
        sets_in=sets_in,
        sets_out=sets_out,
        items_out=items_out,
        errors=tuple(errors),
        flagged_item_ids=tuple(flagged),
    )
