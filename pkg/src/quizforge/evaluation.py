"""Evaluate quiz-generating endpoints and aggregate human ratings.

Each eval record's instruction and input are sent to the endpoint and
the generated text is ROUGE-scored against the record's stored output,
which is the reference quiz the dataset was built from. Corpus means
average per-item F1 over the items whose output parsed; failures stay
out of the means but are counted.
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Callable, Optional, Sequence

import httpx
from pydantic import model_validator

from .annotations import AnnotationStore, effective_annotations
from .dataset import InstructRecord
from .generation import (
    BatchPolicy,
    ChatClient,
    ModelConfig,
    ParseError,
    ParseExpectation,
    RateLimiter,
    RequestError,
    parse_quiz,
    request_with_retries,
)
from .jsonl import load_jsonl
from .model import Entity, Provenance, QuizKind, QuizSet, Rating, SourceDocument
from .rouge import MeanScores, RougeReport, score_texts


class EvalRunConfig(Entity):
    model_cfg: ModelConfig
    eval_set: str
    format: QuizKind = QuizKind.MCQ
    label: str

    @model_validator(mode="after")
    def _check(self) -> "EvalRunConfig":
        if not self.label.strip():
            raise ValueError("label must be non-empty")
        return self


class EvalItemResult(Entity):
    record_id: str
    doc_id: str
    generated_text: Optional[str] = None
    parsed_ok: bool = False
    report: Optional[RougeReport] = None
    error: Optional[str] = None


class EvalFailures(Entity):
    request_failed: int
    parse_failed: int


class EvalResult(Entity):
    label: str
    items: tuple[EvalItemResult, ...]
    means: MeanScores
    scored: int
    failures: EvalFailures

    @model_validator(mode="after")
    def _check(self) -> "EvalResult":
        if not self.label.strip():
            raise ValueError("label must be non-empty")
        return self


def _mean_over(items: Sequence[EvalItemResult]) -> MeanScores:
    scored = [item.report for item in items if item.parsed_ok and item.report is not None]
    if not scored:
        return MeanScores(rouge1_f1=0.0, rouge2_f1=0.0, rougeL_f1=0.0)
    k = len(scored)
    return MeanScores(
        rouge1_f1=sum(r.rouge1.f1 for r in scored) / k,
        rouge2_f1=sum(r.rouge2.f1 for r in scored) / k,
        rougeL_f1=sum(r.rougeL.f1 for r in scored) / k,
    )


def evaluate_model(
    cfg: EvalRunConfig,
    policy: Optional[BatchPolicy] = None,
    transport: Optional[httpx.BaseTransport] = None,
    sleeper: Callable[[float], None] = time.sleep,
) -> EvalResult:
    """Run the endpoint over an eval split and score against references."""
    policy = policy or BatchPolicy()
    records = load_jsonl(cfg.eval_set, InstructRecord)
    limiter = RateLimiter(policy.requests_per_minute, sleeper=sleeper)
    expected = ParseExpectation(
        format=cfg.format, options_per_question=None, num_questions=None
    )
    probe_provenance = Provenance(
        model_name=cfg.model_cfg.model_name,
        endpoint_url=cfg.model_cfg.endpoint_url,
        temperature=cfg.model_cfg.temperature,
        generated_at=datetime(1970, 1, 1, tzinfo=timezone.utc),
    )

    def work(client: ChatClient, indexed: tuple[int, InstructRecord]) -> EvalItemResult:
        index, record = indexed
        record_id = f"{index}:{record.meta.doc_id}"
        prompt = f"{record.instruction}\n\n{record.input}"
        try:
            text = request_with_retries(client, prompt, policy, limiter, sleeper)
        except RequestError as exc:
            return EvalItemResult(
                record_id=record_id, doc_id=record.meta.doc_id, error=str(exc)
            )
        parsed_ok = True
        error = None
        try:
            parse_quiz(text, expected, record.meta.doc_id, probe_provenance)
        except ParseError as exc:
            parsed_ok = False
            error = str(exc)
        return EvalItemResult(
            record_id=record_id,
            doc_id=record.meta.doc_id,
            generated_text=text,
            parsed_ok=parsed_ok,
            report=score_texts(text, record.output),
            error=error,
        )

    with ChatClient(cfg.model_cfg, transport=transport) as client:
        with ThreadPoolExecutor(max_workers=policy.max_concurrency) as pool:
            items = tuple(pool.map(lambda pair: work(client, pair), enumerate(records)))

    return EvalResult(
        label=cfg.label,
        items=items,
        means=_mean_over(items),
        scored=sum(1 for i in items if i.parsed_ok and i.report is not None),
        failures=EvalFailures(
            request_failed=sum(1 for i in items if i.generated_text is None),
            parse_failed=sum(1 for i in items if i.generated_text is not None and not i.parsed_ok),
        ),
    )


# ---------------------------------------------------------------------------
# Comparison reports


class ComparisonRow(Entity):
    label: str
    rouge1: float
    rouge2: float
    rougeL: float


class ComparisonReport(Entity):
    """Rows of corpus means, scaled x100 for table parity."""

    rows: tuple[ComparisonRow, ...]

    def render_text(self) -> str:
        lines = ["model (label): ROUGE-1 / ROUGE-2 / ROUGE-L"]
        for row in self.rows:
            lines.append(
                f"{row.label}: {row.rouge1:.2f} / {row.rouge2:.2f} / {row.rougeL:.2f}"
            )
        return "\n".join(lines) + "\n"

    def render_markdown(self) -> str:
        lines = [
            "| model | ROUGE-1 | ROUGE-2 | ROUGE-L |",
            "| --- | ---: | ---: | ---: |",
        ]
        for row in self.rows:
            lines.append(
                f"| {row.label} | {row.rouge1:.2f} | {row.rouge2:.2f} | {row.rougeL:.2f} |"
            )
        return "\n".join(lines) + "\n"

    def render_html(self) -> str:
        cells = "".join(
            f"<tr><td>{row.label}</td><td>{row.rouge1:.2f}</td>"
            f"<td>{row.rouge2:.2f}</td><td>{row.rougeL:.2f}</td></tr>"
            for row in self.rows
        )
        return (
            "<!doctype html><html><head><meta charset=\"utf-8\">"
            "<title>ROUGE comparison</title></head><body><table>"
            "<thead><tr><th>model</th><th>ROUGE-1</th><th>ROUGE-2</th>"
            f"<th>ROUGE-L</th></tr></thead><tbody>{cells}</tbody>"
            "</table></body></html>\n"
        )

    def render_json(self) -> str:
        from .model import serialize

        return serialize(self) + "\n"


def compare_runs(results: Sequence[EvalResult]) -> ComparisonReport:
    if not results:
        raise ValueError("at least one eval result is required")
    rows = tuple(
        ComparisonRow(
            label=result.label,
            rouge1=result.means.rouge1_f1 * 100.0,
            rouge2=result.means.rouge2_f1 * 100.0,
            rougeL=result.means.rougeL_f1 * 100.0,
        )
        for result in results
    )
    return ComparisonReport(rows=rows)


# ---------------------------------------------------------------------------
# Review sampling and rating aggregation


class InsufficientItems(ValueError):
    """Asked for more review items than exist."""


def _shuffled_indices(count: int, seed: int) -> list[int]:
    rng = random.Random(seed)
    indices = list(range(count))
    for i in range(count - 1, 0, -1):
        j = rng.randrange(i + 1)
        indices[i], indices[j] = indices[j], indices[i]
    return indices


def sample_for_review(
    quiz_sets: Sequence[QuizSet],
    n: int,
    seed: int,
    by_subject: bool = False,
    corpus: Optional[Sequence[SourceDocument]] = None,
) -> list[QuizSet]:
    """Seeded sample of n items without replacement, in corpus order.

    With by_subject, the quota is spread evenly over the subjects
    present (remainders and shortfalls redistributed deterministically);
    requires the corpus to resolve each set's subject.
    """
    flat: list[tuple[int, int]] = [
        (si, ii) for si, qs in enumerate(quiz_sets) for ii in range(len(qs.items))
    ]
    if n > len(flat):
        raise InsufficientItems(f"requested {n} items, only {len(flat)} available")

    if not by_subject:
        order = _shuffled_indices(len(flat), seed)
        chosen = {flat[i] for i in order[:n]}
    else:
        if corpus is None:
            raise ValueError("by_subject sampling requires the corpus")
        subject_of = {doc.id: str(doc.subject) for doc in corpus}
        groups: dict[str, list[tuple[int, int]]] = {}
        for si, ii in flat:
            key = subject_of.get(quiz_sets[si].doc_id, "?")
            groups.setdefault(key, []).append((si, ii))
        subjects = sorted(groups)
        quotas = {key: 0 for key in subjects}
        remaining = n
        # even shares first, then round-robin the remainder over
        # subjects that still have unpicked items
        while remaining > 0:
            progressed = False
            for key in subjects:
                if remaining == 0:
                    break
                if quotas[key] < len(groups[key]):
                    quotas[key] += 1
                    remaining -= 1
                    progressed = True
            if not progressed:
                break
        chosen = set()
        for key in subjects:
            order = _shuffled_indices(len(groups[key]), seed)
            chosen.update(groups[key][i] for i in order[: quotas[key]])

    sampled: list[QuizSet] = []
    for si, qs in enumerate(quiz_sets):
        keep = tuple(item for ii, item in enumerate(qs.items) if (si, ii) in chosen)
        if keep:
            sampled.append(qs.model_copy(update={"items": keep}))
    return sampled


class RatingDistribution(Entity):
    counts: dict[str, int]
    percentages: dict[str, float]
    total: int

    @model_validator(mode="after")
    def _check(self) -> "RatingDistribution":
        if sum(self.counts.values()) != self.total:
            raise ValueError("counts must sum to total")
        return self


def aggregate_ratings(store: AnnotationStore) -> RatingDistribution:
    """Distribution over effective (latest per item+annotator) ratings."""
    effective = effective_annotations(store.annotations)
    counts = {rating.value: 0 for rating in Rating}
    for annotation in effective.values():
        counts[annotation.rating.value] += 1
    total = len(effective)
    percentages = {
        key: (100.0 * value / total if total else 0.0) for key, value in counts.items()
    }
    return RatingDistribution(counts=counts, percentages=percentages, total=total)
