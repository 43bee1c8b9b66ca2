"""Canonical domain types and their serialization.

Every entity is an immutable pydantic model. Text fields are NFC
normalized on construction so that in-memory values and the canonical
JSON form never disagree. `serialize`/`deserialize` define the one
on-disk representation (sorted keys, compact separators, UTF-8);
datasets are stored as one canonical JSON object per line.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from enum import Enum
from typing import Annotated, Optional, TypeVar

import pydantic
from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    PlainSerializer,
    model_serializer,
    model_validator,
)

from .textutil import nfc, turkish_lower

OPTION_LABELS = ("A", "B", "C", "D", "E")

KNOWN_SUBJECT_SLUGS = (
    "chemistry",
    "biology",
    "geography",
    "philosophy",
    "turkish-literature",
    "history",
)

# Accepted spellings (English and Turkish) for the known subjects.
_SUBJECT_ALIASES = {
    "chemistry": "chemistry",
    "kimya": "chemistry",
    "biology": "biology",
    "biyoloji": "biology",
    "geography": "geography",
    "coğrafya": "geography",
    "philosophy": "philosophy",
    "felsefe": "philosophy",
    "turkish-literature": "turkish-literature",
    "turkish literature": "turkish-literature",
    "türk edebiyatı": "turkish-literature",
    "edebiyat": "turkish-literature",
    "history": "history",
    "tarih": "history",
}


class ValidationError(ValueError):
    """An entity violated one or more invariants.

    Collects every violation found, each as a (field path, message)
    pair, instead of stopping at the first.
    """

    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = violations
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in violations))


class _InvariantError(ValueError):
    """Internal carrier for multi-violation model validators."""

    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = violations
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in violations))


def _nfc_str(value: str) -> str:
    return nfc(value)


def _utc(value: datetime) -> datetime:
    if value.tzinfo is None:
        return value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def _iso_z(value: datetime) -> str:
    return _utc(value).isoformat().replace("+00:00", "Z")


Text = Annotated[str, AfterValidator(_nfc_str)]
UtcInstant = Annotated[
    datetime,
    AfterValidator(_utc),
    PlainSerializer(_iso_z, return_type=str, when_used="json"),
]


class Entity(BaseModel):
    model_config = ConfigDict(frozen=True)


class QuizKind(str, Enum):
    MCQ = "mcq"
    SAQ = "saq"


class Rating(str, Enum):
    """Five-point quality grade; A is best, E is worst."""

    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"

    @property
    def rank(self) -> int:
        """Numeric quality (A=5 ... E=1)."""
        return 5 - "ABCDE".index(self.value)

    # str defines all comparisons, so each must be overridden for the
    # quality ordering A > B > C > D > E to hold.
    def __lt__(self, other: "Rating") -> bool:
        if not isinstance(other, Rating):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other: "Rating") -> bool:
        if not isinstance(other, Rating):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other: "Rating") -> bool:
        if not isinstance(other, Rating):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other: "Rating") -> bool:
        if not isinstance(other, Rating):
            return NotImplemented
        return self.rank >= other.rank


class Subject(Entity):
    """Subject tag: one of the known disciplines or a free-form label.

    Serializes to a plain string, either the known slug ("history") or
    "other:<label>".
    """

    slug: str
    label: Optional[Text] = None

    @model_validator(mode="before")
    @classmethod
    def _coerce_string(cls, value):
        if isinstance(value, str):
            return cls._parse_string(value)
        return value

    @staticmethod
    def _parse_string(value: str) -> dict:
        if value.startswith("other:"):
            return {"slug": "other", "label": value[len("other:"):]}
        return {"slug": value, "label": None}

    @model_validator(mode="after")
    def _check(self) -> "Subject":
        violations: list[tuple[str, str]] = []
        if self.slug == "other":
            if not (self.label or "").strip():
                violations.append(("label", "Other subject requires a non-empty label"))
        elif self.slug in KNOWN_SUBJECT_SLUGS:
            if self.label is not None:
                violations.append(("label", "label is only allowed for the other subject"))
        else:
            violations.append(("slug", f"unknown subject slug {self.slug!r}"))
        if violations:
            raise _InvariantError(violations)
        return self

    @model_serializer
    def _as_string(self) -> str:
        if self.slug == "other":
            return f"other:{self.label}"
        return self.slug

    @classmethod
    def other(cls, label: str) -> "Subject":
        return cls(slug="other", label=label)

    @classmethod
    def from_hint(cls, hint: Optional[str]) -> "Subject":
        """Map a free-form hint onto a known subject, else Other(hint)."""
        if hint is None or not hint.strip():
            return cls.other("uncategorized")
        key = turkish_lower(hint.strip())
        slug = _SUBJECT_ALIASES.get(key)
        if slug is not None:
            return cls(slug=slug)
        return cls.other(hint.strip())

    def __str__(self) -> str:
        return self._as_string()


class SourceDocument(Entity):
    """A cleaned educational text, the pipeline's unit of work."""

    id: str
    subject: Subject
    title: Text
    body: Text
    source_url: Optional[Text] = None
    token_count: int

    @model_validator(mode="after")
    def _check(self) -> "SourceDocument":
        violations = []
        if not self.id:
            violations.append(("id", "id must be non-empty"))
        if not self.body.strip():
            violations.append(("body", "body must be non-empty"))
        if self.token_count < 0:
            violations.append(("token_count", "token_count must be non-negative"))
        if violations:
            raise _InvariantError(violations)
        return self


class QuizOption(Entity):
    label: str
    text: Text


class QuizItem(Entity):
    """One MCQ or SAQ question.

    MCQ items carry 2-5 options labeled A.. in order plus the correct
    label; SAQ items carry a free-text answer and nothing else.
    """

    item_id: str
    kind: QuizKind
    stem: Text
    options: Optional[tuple[QuizOption, ...]] = None
    correct_label: Optional[str] = None
    answer_text: Optional[Text] = None

    @model_validator(mode="after")
    def _check(self) -> "QuizItem":
        violations: list[tuple[str, str]] = []
        if not self.item_id:
            violations.append(("item_id", "item_id must be non-empty"))
        if not self.stem.strip():
            violations.append(("stem", "stem must be non-empty"))
        if self.kind is QuizKind.MCQ:
            opts = self.options or ()
            if not 2 <= len(opts) <= 5:
                violations.append(("options", f"MCQ requires 2-5 options, got {len(opts)}"))
            labels = [o.label for o in opts]
            expected = list(OPTION_LABELS[: len(opts)])
            if labels != expected:
                violations.append(
                    ("options", f"labels must run {', '.join(expected)} in order, got {', '.join(labels)}")
                )
            texts = [o.text for o in opts]
            if len(set(texts)) != len(texts):
                violations.append(("options", "option texts must be pairwise distinct"))
            if self.correct_label is None:
                violations.append(("correct_label", "MCQ requires correct_label"))
            elif self.correct_label not in labels:
                violations.append(
                    ("correct_label", f"correct_label {self.correct_label!r} not among option labels")
                )
            if self.answer_text is not None:
                violations.append(("answer_text", "MCQ must not carry answer_text"))
        else:
            if not (self.answer_text or "").strip():
                violations.append(("answer_text", "SAQ requires non-empty answer_text"))
            if self.options:
                violations.append(("options", "SAQ must not carry options"))
            if self.correct_label is not None:
                violations.append(("correct_label", "SAQ must not carry correct_label"))
        if violations:
            raise _InvariantError(violations)
        return self

    @property
    def correct_text(self) -> str:
        """Answer string: the correct option's text (MCQ) or answer_text (SAQ)."""
        if self.kind is QuizKind.MCQ:
            for opt in self.options or ():
                if opt.label == self.correct_label:
                    return opt.text
            raise LookupError(f"no option labeled {self.correct_label!r}")
        return self.answer_text or ""


class Provenance(Entity):
    """How a quiz set came to be: generating model plus timestamp."""

    model_name: Text
    endpoint_url: Text
    temperature: float
    generated_at: UtcInstant
    note: Optional[Text] = None


class QuizSet(Entity):
    doc_id: str
    format: QuizKind
    items: tuple[QuizItem, ...]
    provenance: Provenance

    @model_validator(mode="after")
    def _check(self) -> "QuizSet":
        violations = []
        if not self.doc_id:
            violations.append(("doc_id", "doc_id must be non-empty"))
        if not self.items:
            violations.append(("items", "items must be non-empty"))
        for i, item in enumerate(self.items):
            if item.kind is not self.format:
                violations.append((f"items.{i}.kind", f"item kind {item.kind.value} != set format {self.format.value}"))
        if violations:
            raise _InvariantError(violations)
        return self


class Annotation(Entity):
    """One judge's grade for one quiz item."""

    item_id: str
    annotator_id: str
    rating: Rating
    timestamp: UtcInstant
    comment: Optional[Text] = None

    @model_validator(mode="after")
    def _check(self) -> "Annotation":
        violations = []
        if not self.item_id:
            violations.append(("item_id", "item_id must be non-empty"))
        if not self.annotator_id:
            violations.append(("annotator_id", "annotator_id must be non-empty"))
        if violations:
            raise _InvariantError(violations)
        return self


E = TypeVar("E", bound=BaseModel)


def serialize(entity: BaseModel) -> str:
    """Canonical JSON: sorted keys, compact separators, raw UTF-8."""
    data = entity.model_dump(mode="json")
    return json.dumps(data, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _violations_from_pydantic(exc: pydantic.ValidationError) -> list[tuple[str, str]]:
    violations: list[tuple[str, str]] = []
    for err in exc.errors(include_url=False):
        loc = ".".join(str(part) for part in err["loc"])
        cause = err.get("ctx", {}).get("error")
        if isinstance(cause, _InvariantError):
            for path, msg in cause.violations:
                full = f"{loc}.{path}" if loc else path
                violations.append((full, msg))
        else:
            violations.append((loc, err["msg"]))
    return violations


def deserialize(text: str, cls: type[E]) -> E:
    """Parse canonical JSON into a domain entity, validating all invariants.

    Raises ValidationError listing every violation with its field path.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError([("", f"invalid JSON: {exc}")]) from exc
    return validate_entity(data, cls)


def validate_entity(data: object, cls: type[E]) -> E:
    """model_validate with violations collected into ValidationError."""
    try:
        return cls.model_validate(data)
    except pydantic.ValidationError as exc:
        raise ValidationError(_violations_from_pydantic(exc)) from exc
