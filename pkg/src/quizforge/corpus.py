"""Corpus intake: cleaning, token counting, filtering, statistics.

Cleaning removes markup remnants, URLs and emoji, drops fragment lines,
and collapses whitespace; the result is a single line of prose. The
operation is idempotent, so re-running the intake over its own output
changes nothing.
"""

from __future__ import annotations

import hashlib
import html
import re
from enum import Enum
from typing import Iterable, Optional, Sequence

from pydantic import model_validator

from .model import Entity, SourceDocument, Subject
from .textutil import WORD_RE

DEFAULT_FRAGMENT_MIN_TOKENS = 3

# Extended_Pictographic ranges from the Unicode emoji data, plus the
# auxiliary codepoints emoji sequences are assembled from (regional
# indicators, skin-tone modifiers, variation selectors, the keycap
# combiner and ZWJ). Stripping only the pictographs would leave those
# orphans behind.
_EMOJI_RANGES: tuple[tuple[int, int], ...] = (
    (0x00A9, 0x00A9), (0x00AE, 0x00AE), (0x203C, 0x203C), (0x2049, 0x2049),
    (0x2122, 0x2122), (0x2139, 0x2139), (0x2194, 0x2199), (0x21A9, 0x21AA),
    (0x231A, 0x231B), (0x2328, 0x2328), (0x2388, 0x2388), (0x23CF, 0x23CF),
    (0x23E9, 0x23F3), (0x23F8, 0x23FA), (0x24C2, 0x24C2), (0x25AA, 0x25AB),
    (0x25B6, 0x25B6), (0x25C0, 0x25C0), (0x25FB, 0x25FE), (0x2600, 0x2605),
    (0x2607, 0x2612), (0x2614, 0x2685), (0x2690, 0x2705), (0x2708, 0x2712),
    (0x2714, 0x2714), (0x2716, 0x2716), (0x271D, 0x271D), (0x2721, 0x2721),
    (0x2728, 0x2728), (0x2733, 0x2734), (0x2744, 0x2744), (0x2747, 0x2747),
    (0x274C, 0x274C), (0x274E, 0x274E), (0x2753, 0x2755), (0x2757, 0x2757),
    (0x2763, 0x2767), (0x2795, 0x2797), (0x27A1, 0x27A1), (0x27B0, 0x27B0),
    (0x27BF, 0x27BF), (0x2934, 0x2935), (0x2B05, 0x2B07), (0x2B1B, 0x2B1C),
    (0x2B50, 0x2B50), (0x2B55, 0x2B55), (0x3030, 0x3030), (0x303D, 0x303D),
    (0x3297, 0x3297), (0x3299, 0x3299),
    (0x1F000, 0x1F0FF), (0x1F10D, 0x1F10F), (0x1F12F, 0x1F12F),
    (0x1F16C, 0x1F171), (0x1F17E, 0x1F17F), (0x1F18E, 0x1F18E),
    (0x1F191, 0x1F19A), (0x1F1AD, 0x1F1E5), (0x1F201, 0x1F20F),
    (0x1F21A, 0x1F21A), (0x1F22F, 0x1F22F), (0x1F232, 0x1F23A),
    (0x1F23C, 0x1F23F), (0x1F249, 0x1F3FA), (0x1F400, 0x1F53D),
    (0x1F546, 0x1F64F), (0x1F680, 0x1F6FF), (0x1F774, 0x1F77F),
    (0x1F7D5, 0x1F7FF), (0x1F80C, 0x1F80F), (0x1F848, 0x1F84F),
    (0x1F85A, 0x1F85F), (0x1F888, 0x1F88F), (0x1F8AE, 0x1F8FF),
    (0x1F90C, 0x1F93A), (0x1F93C, 0x1F945), (0x1F947, 0x1FAFF),
    (0x1FC00, 0x1FFFD),
    # auxiliary: regional indicators, skin tones, variation selectors,
    # keycap combiner, zero-width joiner
    (0x1F1E6, 0x1F1FF), (0x1F3FB, 0x1F3FF), (0xFE0E, 0xFE0F),
    (0x20E3, 0x20E3), (0x200D, 0x200D),
)


def _ranges_to_class(ranges: Sequence[tuple[int, int]]) -> str:
    parts = []
    for lo, hi in ranges:
        if lo == hi:
            parts.append(f"\\U{lo:08X}")
        else:
            parts.append(f"\\U{lo:08X}-\\U{hi:08X}")
    return "[" + "".join(parts) + "]"


EMOJI_RE = re.compile(_ranges_to_class(_EMOJI_RANGES))
URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_TAG_RE = re.compile(r"<[^<>]*>")


class EmptyAfterCleaning(ValueError):
    """Nothing survived the cleaning rules."""


class TokenizerKind(str, Enum):
    UNICODE_WORDS = "unicode-words"
    WHITESPACE_SPLIT = "whitespace-split"


class FilterReason(str, Enum):
    TOO_SHORT = "TooShort"
    TOO_LONG = "TooLong"
    EMPTY_AFTER_CLEANING = "EmptyAfterCleaning"


class RawRecord(Entity):
    """A pre-fetched page as ingested: may carry markup, emoji, links."""

    source_url: str
    subject_hint: Optional[str] = None
    raw_text: str

    @model_validator(mode="after")
    def _check(self) -> "RawRecord":
        if not self.raw_text:
            raise ValueError("raw_text must be non-empty")
        return self


class FilterConfig(Entity):
    min_tokens: int = 100
    max_tokens: int = 3000
    tokenizer: TokenizerKind = TokenizerKind.UNICODE_WORDS

    @model_validator(mode="after")
    def _check(self) -> "FilterConfig":
        if self.min_tokens <= 0:
            raise ValueError("min_tokens must be positive")
        if self.min_tokens >= self.max_tokens:
            raise ValueError("min_tokens must be below max_tokens")
        return self


def _strip_markup(text: str) -> str:
    # Unescape entities and strip tags until stable, then drop stray
    # angle brackets so re-cleaning can never find new tags.
    prev = None
    while prev != text:
        prev = text
        text = _TAG_RE.sub(" ", text)
        text = html.unescape(text)
    return text.replace("<", " ").replace(">", " ")


def _clean_lines(text: str, fragment_min_tokens: int) -> list[str]:
    text = _strip_markup(text)
    text = URL_RE.sub(" ", text)
    text = EMOJI_RE.sub(" ", text)
    candidates = []
    for line in text.splitlines() or [text]:
        tokens = WORD_RE.findall(line)
        if tokens:
            candidates.append((" ".join(line.split()), len(tokens)))
    # The fragment rule prunes short lines out of multi-line text; a
    # lone line is the whole text, not a fragment, and always survives.
    # That also makes cleaning idempotent: the output is one line.
    if len(candidates) <= 1:
        return [line for line, _ in candidates]
    return [line for line, n in candidates if n >= fragment_min_tokens]


def clean(text: str, fragment_min_tokens: int = DEFAULT_FRAGMENT_MIN_TOKENS) -> str:
    """Scrub markup, URLs and emoji; drop fragment lines; collapse whitespace.

    Raises EmptyAfterCleaning when no line survives.
    """
    lines = _clean_lines(text, fragment_min_tokens)
    result = " ".join(lines).strip()
    if not result:
        raise EmptyAfterCleaning("no text survived cleaning")
    return result


def token_count(text: str, tokenizer: TokenizerKind = TokenizerKind.UNICODE_WORDS) -> int:
    if tokenizer is TokenizerKind.UNICODE_WORDS:
        return len(WORD_RE.findall(text))
    return len(text.split())


def document_id(raw: RawRecord) -> str:
    digest = hashlib.sha256(
        (raw.source_url + "\x00" + raw.raw_text).encode("utf-8")
    ).hexdigest()
    return f"doc-{digest[:12]}"


def build_document(
    raw: RawRecord,
    tokenizer: TokenizerKind = TokenizerKind.UNICODE_WORDS,
    fragment_min_tokens: int = DEFAULT_FRAGMENT_MIN_TOKENS,
) -> SourceDocument:
    """Clean a raw record into a SourceDocument.

    The id is a content hash, so re-ingesting identical input yields
    byte-identical documents. The title is the first surviving line.
    """
    lines = _clean_lines(raw.raw_text, fragment_min_tokens)
    body = " ".join(lines).strip()
    if not body:
        raise EmptyAfterCleaning(f"nothing survived cleaning for {raw.source_url}")
    title = lines[0][:120]
    return SourceDocument(
        id=document_id(raw),
        subject=Subject.from_hint(raw.subject_hint),
        title=title,
        body=body,
        source_url=raw.source_url or None,
        token_count=token_count(body, tokenizer),
    )


class RejectedRecord(Entity):
    source_url: str
    doc_id: Optional[str] = None
    reason: FilterReason
    detail: Optional[str] = None


class IntakeResult(Entity):
    documents: tuple[SourceDocument, ...]
    rejected: tuple[RejectedRecord, ...]


def ingest(
    records: Iterable[RawRecord],
    cfg: FilterConfig,
    fragment_min_tokens: int = DEFAULT_FRAGMENT_MIN_TOKENS,
) -> IntakeResult:
    """Clean and filter raw records into a corpus.

    Rejections (empty after cleaning, out of token bounds) are reported
    with reasons; order is preserved on both sides. Identical raw
    records hash to the same id; later duplicates get a -N suffix to
    keep ids unique within the corpus.
    """
    documents: list[SourceDocument] = []
    rejected: list[RejectedRecord] = []
    seen: dict[str, int] = {}
    for raw in records:
        try:
            doc = build_document(raw, cfg.tokenizer, fragment_min_tokens)
        except EmptyAfterCleaning as exc:
            rejected.append(
                RejectedRecord(
                    source_url=raw.source_url,
                    reason=FilterReason.EMPTY_AFTER_CLEANING,
                    detail=str(exc),
                )
            )
            continue
        if doc.id in seen:
            seen[doc.id] += 1
            doc = doc.model_copy(update={"id": f"{doc.id}-{seen[doc.id]}"})
        else:
            seen[doc.id] = 1
        if doc.token_count < cfg.min_tokens:
            rejected.append(
                RejectedRecord(
                    source_url=raw.source_url,
                    doc_id=doc.id,
                    reason=FilterReason.TOO_SHORT,
                    detail=f"{doc.token_count} tokens < min {cfg.min_tokens}",
                )
            )
        elif doc.token_count > cfg.max_tokens:
            rejected.append(
                RejectedRecord(
                    source_url=raw.source_url,
                    doc_id=doc.id,
                    reason=FilterReason.TOO_LONG,
                    detail=f"{doc.token_count} tokens > max {cfg.max_tokens}",
                )
            )
        else:
            documents.append(doc)
    return IntakeResult(documents=tuple(documents), rejected=tuple(rejected))


def filter_docs(
    docs: Sequence[SourceDocument], cfg: FilterConfig
) -> tuple[list[SourceDocument], list[tuple[SourceDocument, FilterReason]]]:
    """Partition docs by the inclusive token bounds, order preserved."""
    kept: list[SourceDocument] = []
    rejected: list[tuple[SourceDocument, FilterReason]] = []
    for doc in docs:
        if doc.token_count < cfg.min_tokens:
            rejected.append((doc, FilterReason.TOO_SHORT))
        elif doc.token_count > cfg.max_tokens:
            rejected.append((doc, FilterReason.TOO_LONG))
        else:
            kept.append(doc)
    return kept, rejected


class SubjectCount(Entity):
    count: int
    percentage: float


def subject_distribution(docs: Sequence[SourceDocument]) -> dict[str, SubjectCount]:
    """Histogram subject -> count and percentage (of all docs)."""
    counts: dict[str, int] = {}
    for doc in docs:
        key = str(doc.subject)
        counts[key] = counts.get(key, 0) + 1
    total = len(docs)
    return {
        key: SubjectCount(count=n, percentage=100.0 * n / total)
        for key, n in sorted(counts.items())
    }


class HistogramBucket(Entity):
    lo: int
    hi: int
    count: int


def token_histogram(docs: Sequence[SourceDocument], bucket_width: int) -> list[HistogramBucket]:
    """Contiguous [k*w, (k+1)*w) buckets from zero through the max count."""
    if bucket_width <= 0:
        raise ValueError("bucket_width must be positive")
    if not docs:
        return []
    top = max(doc.token_count for doc in docs) // bucket_width
    buckets = [0] * (top + 1)
    for doc in docs:
        buckets[doc.token_count // bucket_width] += 1
    return [
        HistogramBucket(lo=i * bucket_width, hi=(i + 1) * bucket_width, count=n)
        for i, n in enumerate(buckets)
    ]
