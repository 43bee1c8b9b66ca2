"""Turkish-aware ROUGE-1/2/L and the faithfulness quality gate.

Scores quantify how much of a question's wording is grounded in its
source text. ROUGE-N uses clipped n-gram counts (each reference n-gram
occurrence can be matched at most once); ROUGE-L uses the longest
common subsequence over the whole token sequences, which suits short
unsentenced quiz items. F is the balanced F1; scores live in [0, 1]
and are multiplied by 100 only for report rendering.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional, Sequence

from pydantic import model_validator

from .model import Entity, QuizKind, QuizSet, SourceDocument
from .textutil import WORD_RE, nfc, turkish_lower


class DocMismatch(ValueError):
    """Quiz set and document do not belong together."""


def normalize_tr(text: str) -> list[str]:
    """NFC + Turkish-aware lowercase, then maximal alphanumeric runs.

    The dotted/dotless i substitutions run before generic lowercasing,
    so "İstanbul" -> ["istanbul"] and "ISPARTA" -> ["ısparta"].
    """
    return WORD_RE.findall(turkish_lower(nfc(text)))


class RougeScore(Entity):
    precision: float
    recall: float
    f1: float

    @model_validator(mode="after")
    def _check(self) -> "RougeScore":
        for name in ("precision", "recall", "f1"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        expected = _f1(self.precision, self.recall)
        if abs(self.f1 - expected) > 1e-9:
            raise ValueError(f"f1 {self.f1} inconsistent with P/R (expected {expected})")
        return self

    @classmethod
    def zero(cls) -> "RougeScore":
        return cls(precision=0.0, recall=0.0, f1=0.0)

    @classmethod
    def from_counts(cls, match: float, cand_total: int, ref_total: int) -> "RougeScore":
        precision = match / cand_total if cand_total else 0.0
        recall = match / ref_total if ref_total else 0.0
        return cls(precision=precision, recall=recall, f1=_f1(precision, recall))


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


class RougeReport(Entity):
    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore

    @model_validator(mode="after")
    def _check(self) -> "RougeReport":
        # An LCS match never exceeds the clipped unigram matches, and
        # both F1s share the same denominator.
        if self.rougeL.f1 > self.rouge1.f1 + 1e-12:
            raise ValueError("rougeL.f1 cannot exceed rouge1.f1")
        return self


def _ngram_counts(tokens: Sequence[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    """Clipped n-gram overlap scores."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cand_counts = _ngram_counts(candidate, n)
    ref_counts = _ngram_counts(reference, n)
    match = sum(min(count, ref_counts.get(gram, 0)) for gram, count in cand_counts.items())
    cand_total = max(len(candidate) - n + 1, 0)
    ref_total = max(len(reference) - n + 1, 0)
    return RougeScore.from_counts(match, cand_total, ref_total)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence (iterative, two rows)."""
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        curr = [0] * (len(b) + 1)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            if ai == b[j - 1]:
                curr[j] = prev[j - 1] + 1
            else:
                curr[j] = max(prev[j], curr[j - 1])
        prev = curr
    return prev[len(b)]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """Whole-sequence LCS scores."""
    length = lcs_length(candidate, reference)
    return RougeScore.from_counts(length, len(candidate), len(reference))


def score_pair(candidate: Sequence[str], reference: Sequence[str]) -> RougeReport:
    return RougeReport(
        rouge1=rouge_n(candidate, reference, 1),
        rouge2=rouge_n(candidate, reference, 2),
        rougeL=rouge_l(candidate, reference),
    )


def score_texts(candidate: str, reference: str) -> RougeReport:
    return score_pair(normalize_tr(candidate), normalize_tr(reference))


def item_candidate_text(item, stem_only: bool = False) -> str:
    """Candidate text for one item: stem plus options (MCQ) or answer (SAQ)."""
    if stem_only:
        return item.stem
    parts = [item.stem]
    if item.kind is QuizKind.MCQ:
        parts.extend(opt.text for opt in item.options or ())
    else:
        parts.append(item.answer_text or "")
    return " ".join(parts)


class ItemScore(Entity):
    item_id: str
    report: RougeReport


class MeanScores(Entity):
    """Arithmetic means of per-item F1 values (not a valid P/R/F triple)."""

    rouge1_f1: float
    rouge2_f1: float
    rougeL_f1: float


class QuizScores(Entity):
    doc_id: str
    items: tuple[ItemScore, ...]
    mean: MeanScores


def score_quiz(qs: QuizSet, doc: SourceDocument, stem_only: bool = False) -> QuizScores:
    """Score every item of a quiz set against its source document."""
    if qs.doc_id != doc.id:
        raise DocMismatch(f"quiz set references {qs.doc_id!r}, document is {doc.id!r}")
    reference = normalize_tr(doc.body)
    items = tuple(
        ItemScore(
            item_id=item.item_id,
            report=score_pair(normalize_tr(item_candidate_text(item, stem_only)), reference),
        )
        for item in qs.items
    )
    k = len(items)
    mean = MeanScores(
        rouge1_f1=sum(s.report.rouge1.f1 for s in items) / k,
        rouge2_f1=sum(s.report.rouge2.f1 for s in items) / k,
        rougeL_f1=sum(s.report.rougeL.f1 for s in items) / k,
    )
    return QuizScores(doc_id=qs.doc_id, items=items, mean=mean)


class GateAggregate(str, Enum):
    PER_ITEM = "per-item"
    MEAN_OVER_SET = "mean-over-set"


class GateConfig(Entity):
    min_rouge_l: float = 0.05
    max_rouge_l: Optional[float] = None
    aggregate: GateAggregate = GateAggregate.PER_ITEM

    @model_validator(mode="after")
    def _check(self) -> "GateConfig":
        if not 0.0 <= self.min_rouge_l <= 1.0:
            raise ValueError("min_rouge_l must be in [0, 1]")
        if self.max_rouge_l is not None:
            if not 0.0 <= self.max_rouge_l <= 1.0:
                raise ValueError("max_rouge_l must be in [0, 1]")
            if self.min_rouge_l >= self.max_rouge_l:
                raise ValueError("min_rouge_l must be below max_rouge_l")
        return self

    def admits(self, f1: float) -> bool:
        if f1 < self.min_rouge_l:
            return False
        if self.max_rouge_l is not None and f1 > self.max_rouge_l:
            return False
        return True


class GateItemVerdict(Entity):
    item_id: str
    rouge_l_f1: float
    passed: bool


class GateResult(Entity):
    doc_id: str
    items: tuple[GateItemVerdict, ...]
    set_passed: bool
    scores: QuizScores


def quality_gate(
    qs: QuizSet, doc: SourceDocument, cfg: GateConfig, stem_only: bool = False
) -> GateResult:
    """Apply the ROUGE-L faithfulness gate (bounds inclusive).

    Raising min_rouge_l is monotone: it can only turn passes into
    failures, never the reverse.
    """
    scores = score_quiz(qs, doc, stem_only)
    verdicts = tuple(
        GateItemVerdict(
            item_id=s.item_id,
            rouge_l_f1=s.report.rougeL.f1,
            passed=cfg.admits(s.report.rougeL.f1),
        )
        for s in scores.items
    )
    if cfg.aggregate is GateAggregate.MEAN_OVER_SET:
        set_passed = cfg.admits(scores.mean.rougeL_f1)
    else:
        set_passed = all(v.passed for v in verdicts)
    return GateResult(doc_id=qs.doc_id, items=verdicts, set_passed=set_passed, scores=scores)
