"""Quiz generation against a chat-completions endpoint.

The wire format is the de-facto chat-completions JSON convention
(model, messages, temperature), so any compatible endpoint works; the
bundled deterministic mock is reached with a `mock://` endpoint URL
and never touches the network.

Model output is parsed on two routes: the requested JSON array of
question objects, with a plain-text lettered layout as fallback. The
same lettered layout is what dataset records store, so formatting and
parsing round-trip.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

import httpx
import pydantic
from pydantic import model_validator

from .model import (
    Entity,
    OPTION_LABELS,
    Provenance,
    QuizItem,
    QuizKind,
    QuizOption,
    QuizSet,
    SourceDocument,
    ValidationError,
)
from .prompting import PromptTemplate, RenderParams, render


class ModelConfig(Entity):
    endpoint_url: str
    model_name: str
    temperature: float = 0.7
    max_output_tokens: int = 2048
    api_key_env: Optional[str] = None
    timeout: float = 60.0

    @model_validator(mode="after")
    def _check(self) -> "ModelConfig":
        if not self.endpoint_url:
            raise ValueError("endpoint_url must be non-empty")
        if not self.model_name:
            raise ValueError("model_name must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        return self


class BatchPolicy(Entity):
    max_concurrency: int = 4
    requests_per_minute: int = 600
    max_retries: int = 3
    backoff_base: float = 2.0

    @model_validator(mode="after")
    def _check(self) -> "BatchPolicy":
        if self.max_concurrency <= 0:
            raise ValueError("max_concurrency must be positive")
        if self.requests_per_minute <= 0:
            raise ValueError("requests_per_minute must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.backoff_base < 0:
            raise ValueError("backoff_base must be non-negative")
        return self


class RequestErrorKind(str, Enum):
    TIMEOUT = "timeout"
    HTTP_STATUS = "http_status"
    AUTH = "auth"
    RATE_LIMITED = "rate_limited"


class RequestError(Exception):
    def __init__(self, kind: RequestErrorKind, message: str, status: Optional[int] = None):
        self.kind = kind
        self.status = status
        super().__init__(f"{kind.value}: {message}")

    @property
    def retryable(self) -> bool:
        if self.kind in (RequestErrorKind.RATE_LIMITED, RequestErrorKind.TIMEOUT):
            return True
        return self.kind is RequestErrorKind.HTTP_STATUS and (self.status or 0) >= 500


class ParseError(Exception):
    def __init__(self, offset: int, reason: str):
        self.offset = offset
        self.reason = reason
        super().__init__(f"parse error at byte {offset}: {reason}")


class ChatClient:
    """Thin chat-completions client; one instance serves a whole batch."""

    def __init__(self, cfg: ModelConfig, transport: Optional[httpx.BaseTransport] = None):
        self.cfg = cfg
        url = cfg.endpoint_url
        if transport is None and url.startswith("mock://"):
            from .mock_endpoint import transport_for

            transport, url = transport_for(url)
        self._url = url
        self._client = httpx.Client(timeout=cfg.timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ChatClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def complete(self, prompt: str) -> str:
        """POST one completion request; returns the message content verbatim."""
        headers = {}
        if self.cfg.api_key_env:
            key = os.environ.get(self.cfg.api_key_env)
            if not key:
                raise RequestError(
                    RequestErrorKind.AUTH,
                    f"environment variable {self.cfg.api_key_env} is not set",
                )
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
        }
        try:
            response = self._client.post(self._url, json=body, headers=headers)
        except httpx.TimeoutException as exc:
            raise RequestError(RequestErrorKind.TIMEOUT, str(exc)) from exc
        except httpx.HTTPError as exc:
            raise RequestError(RequestErrorKind.HTTP_STATUS, str(exc)) from exc
        if response.status_code == 429:
            raise RequestError(RequestErrorKind.RATE_LIMITED, "rate limited", 429)
        if response.status_code in (401, 403):
            raise RequestError(
                RequestErrorKind.AUTH, f"HTTP {response.status_code}", response.status_code
            )
        if response.status_code >= 400:
            raise RequestError(
                RequestErrorKind.HTTP_STATUS,
                f"HTTP {response.status_code}",
                response.status_code,
            )
        try:
            data = response.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise RequestError(
                RequestErrorKind.HTTP_STATUS, f"malformed response body: {exc}"
            ) from exc
        if not isinstance(content, str):
            raise RequestError(RequestErrorKind.HTTP_STATUS, "message content is not text")
        return content


def generate_one(
    doc: SourceDocument,
    prompt: str,
    model_cfg: ModelConfig,
    client: Optional[ChatClient] = None,
) -> str:
    """Single request for one document; failures raise RequestError."""
    if client is not None:
        return client.complete(prompt)
    with ChatClient(model_cfg) as own:
        return own.complete(prompt)


# ---------------------------------------------------------------------------
# Parsing and formatting


class ParseExpectation(Entity):
    format: QuizKind
    options_per_question: Optional[int] = 5
    num_questions: Optional[int] = None

    @model_validator(mode="after")
    def _check(self) -> "ParseExpectation":
        if self.options_per_question is not None and not 2 <= self.options_per_question <= 5:
            raise ValueError("options_per_question must be in 2..5")
        if self.num_questions is not None and self.num_questions <= 0:
            raise ValueError("num_questions must be positive")
        return self


_STEM_RE = re.compile(r"^\s*(\d+)[.)]\s*(.*\S)\s*$")
_OPTION_RE = re.compile(r"^\s*([A-E])[.)]\s*(.*\S)\s*$")
_ANSWER_RE = re.compile(r"^\s*(?:doğru\s+)?cevap\s*:\s*(.*\S)\s*$", re.IGNORECASE)
_FENCE_RE = re.compile(r"^```[a-zA-Z]*\s*\n|\n```\s*$")


def _byte_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


def _strip_code_fence(text: str) -> tuple[str, int]:
    """Remove a surrounding ``` fence; returns (inner, char offset of inner)."""
    stripped = text.strip()
    start = text.find(stripped) if stripped else 0
    if stripped.startswith("```"):
        first_newline = stripped.find("\n")
        if first_newline != -1 and stripped.endswith("```"):
            inner = stripped[first_newline + 1 : -3]
            return inner, start + first_newline + 1
    return stripped, start


def parse_quiz(
    raw_text: str,
    expected: ParseExpectation,
    doc_id: str,
    provenance: Provenance,
) -> QuizSet:
    """Parse model output into a validated QuizSet.

    Tries the JSON array layout first and falls back to the lettered
    plain-text layout. Item ids are assigned as `<doc_id>#<index>`.
    """
    inner, inner_start = _strip_code_fence(raw_text)
    looks_like_json = inner.lstrip().startswith(("[", "{"))
    if looks_like_json:
        items = _parse_json_layout(raw_text, inner, inner_start, expected, doc_id)
    else:
        items = _parse_lettered_layout(raw_text, expected, doc_id)
    if expected.num_questions is not None and len(items) != expected.num_questions:
        raise ParseError(
            0, f"expected {expected.num_questions} questions, found {len(items)}"
        )
    try:
        return QuizSet(
            doc_id=doc_id, format=expected.format, items=tuple(items), provenance=provenance
        )
    except (ValidationError, pydantic.ValidationError) as exc:
        raise ParseError(0, str(exc)) from exc


def _build_item(
    doc_id: str,
    index: int,
    expected: ParseExpectation,
    stem: str,
    options: Sequence[tuple[str, str]],
    answer: str,
    offset: int,
    answer_offset: Optional[int] = None,
) -> QuizItem:
    if expected.format is QuizKind.MCQ:
        if expected.options_per_question is not None and len(options) != expected.options_per_question:
            raise ParseError(
                offset,
                f"question {index + 1}: expected {expected.options_per_question} options, found {len(options)}",
            )
        labels = [label for label, _ in options]
        correct = answer.strip()
        match = re.fullmatch(r"([A-Ea-e])[.)]*", correct)
        if match:
            correct = match.group(1).upper()
        else:
            by_text = {text: label for label, text in options}
            if correct in by_text:
                correct = by_text[correct]
        if correct not in labels:
            raise ParseError(
                answer_offset if answer_offset is not None else offset,
                f"question {index + 1}: answer label {answer.strip()!r} out of range",
            )
        try:
            return QuizItem(
                item_id=f"{doc_id}#{index}",
                kind=QuizKind.MCQ,
                stem=stem,
                options=tuple(QuizOption(label=l, text=t) for l, t in options),
                correct_label=correct,
            )
        except (ValidationError, pydantic.ValidationError) as exc:
            raise ParseError(offset, f"question {index + 1}: {exc}") from exc
    try:
        return QuizItem(
            item_id=f"{doc_id}#{index}", kind=QuizKind.SAQ, stem=stem, answer_text=answer
        )
    except (ValidationError, pydantic.ValidationError) as exc:
        raise ParseError(offset, f"question {index + 1}: {exc}") from exc


def _parse_json_layout(
    raw_text: str, inner: str, inner_start: int, expected: ParseExpectation, doc_id: str
) -> list[QuizItem]:
    try:
        data = json.loads(inner)
    except json.JSONDecodeError as exc:
        offset = _byte_offset(raw_text, inner_start + exc.pos)
        raise ParseError(offset, f"invalid JSON: {exc.msg}") from exc
    if isinstance(data, dict) and isinstance(data.get("questions"), list):
        data = data["questions"]
    if not isinstance(data, list):
        raise ParseError(_byte_offset(raw_text, inner_start), "expected a JSON array of questions")
    items: list[QuizItem] = []
    for index, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise ParseError(0, f"question {index + 1}: not a JSON object")
        stem = entry.get("question")
        if not isinstance(stem, str) or not stem.strip():
            raise ParseError(0, f"question {index + 1}: missing question text")
        answer = entry.get("answer")
        if not isinstance(answer, str) or not answer.strip():
            raise ParseError(0, f"question {index + 1}: missing answer")
        options: list[tuple[str, str]] = []
        if expected.format is QuizKind.MCQ:
            raw_options = entry.get("options")
            if isinstance(raw_options, dict):
                for position, (label, text) in enumerate(sorted(raw_options.items())):
                    if position >= len(OPTION_LABELS) or label != OPTION_LABELS[position]:
                        raise ParseError(
                            0, f"question {index + 1}: unexpected option label {label!r}"
                        )
                    if not isinstance(text, str):
                        raise ParseError(0, f"question {index + 1}: option {label} is not text")
                    options.append((label, text))
            elif isinstance(raw_options, list):
                for position, text in enumerate(raw_options):
                    if position >= len(OPTION_LABELS) or not isinstance(text, str):
                        raise ParseError(0, f"question {index + 1}: bad options list")
                    options.append((OPTION_LABELS[position], text))
            else:
                raise ParseError(0, f"question {index + 1}: missing options")
        items.append(_build_item(doc_id, index, expected, stem, options, answer, 0))
    return items


def _parse_lettered_layout(
    raw_text: str, expected: ParseExpectation, doc_id: str
) -> list[QuizItem]:
    items: list[QuizItem] = []
    stem: Optional[str] = None
    stem_offset = 0
    answer_offset: Optional[int] = None
    options: list[tuple[str, str]] = []
    answer: Optional[str] = None

    def flush() -> None:
        nonlocal stem, options, answer, answer_offset
        if stem is None:
            return
        if answer is None:
            raise ParseError(stem_offset, f"question {len(items) + 1}: missing answer line")
        items.append(
            _build_item(
                doc_id, len(items), expected, stem, options, answer, stem_offset, answer_offset
            )
        )
        stem, options, answer, answer_offset = None, [], None, None

    offset = 0
    for line in raw_text.split("\n"):
        line_offset = offset
        offset += len(line.encode("utf-8")) + 1
        if not line.strip():
            continue
        stem_match = _STEM_RE.match(line)
        if stem_match:
            flush()
            stem = stem_match.group(2)
            stem_offset = line_offset
            continue
        answer_match = _ANSWER_RE.match(line)
        if answer_match and stem is not None and answer is None:
            answer = answer_match.group(1)
            answer_offset = line_offset
            continue
        option_match = _OPTION_RE.match(line)
        if option_match and stem is not None and answer is None:
            options.append((option_match.group(1), option_match.group(2)))
            continue
        if stem is not None and answer is None and not options:
            # wrapped stem continuation
            stem = f"{stem} {line.strip()}"
            continue
        raise ParseError(line_offset, f"unrecognized line {line.strip()[:60]!r}")
    flush()
    if not items:
        raise ParseError(0, "no questions found")
    return items


def _one_line(text: str) -> str:
    return " ".join(text.split())


def format_lettered(qs: QuizSet) -> str:
    """Canonical plain-text layout: numbered stems, A)–E) options, Cevap lines."""
    blocks = []
    for number, item in enumerate(qs.items, start=1):
        lines = [f"{number}. {_one_line(item.stem)}"]
        if item.kind is QuizKind.MCQ:
            for opt in item.options or ():
                lines.append(f"{opt.label}) {_one_line(opt.text)}")
            lines.append(f"Cevap: {item.correct_label}")
        else:
            lines.append(f"Cevap: {_one_line(item.answer_text or '')}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def format_quiz_json(qs: QuizSet) -> str:
    """The JSON array layout quiz generation requests from the model."""
    entries = []
    for item in qs.items:
        if item.kind is QuizKind.MCQ:
            entries.append(
                {
                    "question": item.stem,
                    "options": {opt.label: opt.text for opt in item.options or ()},
                    "answer": item.correct_label,
                }
            )
        else:
            entries.append({"question": item.stem, "answer": item.answer_text})
    return json.dumps(entries, ensure_ascii=False, indent=2)


# ---------------------------------------------------------------------------
# Batch running


class OutcomeStatus(str, Enum):
    OK = "ok"
    PARSE_FAILED = "parse_failed"
    REQUEST_FAILED = "request_failed"


class GenerationOutcome(Entity):
    """Per-document batch result; failures are data, not exceptions.

    `attempts` counts HTTP attempts across the initial generation and
    the single regeneration a parse failure triggers, so it is bounded
    by 2 * (max_retries + 1).
    """

    doc_id: str
    status: OutcomeStatus
    attempts: int
    quiz: Optional[QuizSet] = None
    raw_text: Optional[str] = None
    error: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "GenerationOutcome":
        if self.status is OutcomeStatus.OK and self.quiz is None:
            raise ValueError("ok outcome requires quiz")
        if self.status is OutcomeStatus.PARSE_FAILED and self.error is None:
            raise ValueError("parse_failed outcome requires error")
        if self.status is OutcomeStatus.REQUEST_FAILED and self.error is None:
            raise ValueError("request_failed outcome requires error")
        return self


class BatchSummary(Entity):
    total: int
    ok: int
    parse_failed: int
    request_failed: int
    from_checkpoint: int = 0


class BatchResult(Entity):
    outcomes: tuple[GenerationOutcome, ...]
    summary: BatchSummary


class RateLimiter:
    """Spaces request starts so at most `per_minute` begin per minute."""

    def __init__(
        self,
        per_minute: int,
        clock: Callable[[], float] = time.monotonic,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self._interval = 60.0 / per_minute
        self._clock = clock
        self._sleep = sleeper
        self._lock = threading.Lock()
        self._next_start = self._clock()

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            wait = self._next_start - now
            self._next_start = max(now, self._next_start) + self._interval
        if wait > 0:
            self._sleep(wait)


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


def request_with_retries(
    client: ChatClient,
    prompt: str,
    policy: BatchPolicy,
    limiter: RateLimiter,
    sleeper: Callable[[float], None] = time.sleep,
    counter: Optional[list[int]] = None,
) -> str:
    """One completion with the policy's retry/backoff behavior.

    Retryable failures (rate limiting, timeouts, 5xx) back off
    exponentially up to max_retries; the final error propagates.
    `counter[0]`, when given, accumulates the HTTP attempts made.
    """
    delay = policy.backoff_base
    for attempt in range(policy.max_retries + 1):
        limiter.acquire()
        if counter is not None:
            counter[0] += 1
        try:
            return client.complete(prompt)
        except RequestError as exc:
            if not exc.retryable or attempt == policy.max_retries:
                raise
            sleeper(delay)
            delay *= 2
    raise AssertionError("unreachable")


def run_batch(
    docs: Sequence[SourceDocument],
    templates: dict[str, PromptTemplate],
    params: RenderParams,
    model_cfg: ModelConfig,
    policy: BatchPolicy,
    checkpoint_path: Optional[str | Path] = None,
    clock: Callable[[], datetime] = _utc_now,
    transport: Optional[httpx.BaseTransport] = None,
    sleeper: Callable[[float], None] = time.sleep,
) -> BatchResult:
    """Generate quizzes for all docs with bounded concurrency.

    Retryable request failures back off exponentially; a parse failure
    triggers exactly one regeneration before being recorded. With a
    checkpoint file, documents already recorded as ok are not
    re-requested and their outcomes are reused verbatim.
    """
    from .jsonl import read_jsonl

    existing: dict[str, GenerationOutcome] = {}
    checkpoint = Path(checkpoint_path) if checkpoint_path else None
    if checkpoint and checkpoint.exists():
        for outcome in read_jsonl(checkpoint, GenerationOutcome):
            current = existing.get(outcome.doc_id)
            if current is None or current.status is not OutcomeStatus.OK:
                existing[outcome.doc_id] = outcome

    reused = {
        doc.id: existing[doc.id]
        for doc in docs
        if doc.id in existing and existing[doc.id].status is OutcomeStatus.OK
    }
    todo = [doc for doc in docs if doc.id not in reused]

    expected = ParseExpectation(
        format=params.format,
        options_per_question=params.options_per_question if params.format is QuizKind.MCQ else None,
        num_questions=params.num_questions,
    )
    limiter = RateLimiter(policy.requests_per_minute, sleeper=sleeper)
    write_lock = threading.Lock()
    checkpoint_fh = checkpoint.open("a", encoding="utf-8") if checkpoint else None

    def work(client: ChatClient, doc: SourceDocument) -> GenerationOutcome:
        prompt = render(doc, params, templates)
        provenance = Provenance(
            model_name=model_cfg.model_name,
            endpoint_url=model_cfg.endpoint_url,
            temperature=model_cfg.temperature,
            generated_at=clock(),
        )
        attempts = [0]
        try:
            raw = request_with_retries(client, prompt, policy, limiter, sleeper, attempts)
        except RequestError as exc:
            return GenerationOutcome(
                doc_id=doc.id,
                status=OutcomeStatus.REQUEST_FAILED,
                attempts=attempts[0],
                error=str(exc),
            )
        try:
            quiz = parse_quiz(raw, expected, doc.id, provenance)
        except ParseError as first_error:
            try:
                raw = request_with_retries(client, prompt, policy, limiter, sleeper, attempts)
            except RequestError as exc:
                return GenerationOutcome(
                    doc_id=doc.id,
                    status=OutcomeStatus.PARSE_FAILED,
                    attempts=attempts[0],
                    raw_text=raw,
                    error=f"{first_error}; regeneration request failed: {exc}",
                )
            try:
                quiz = parse_quiz(raw, expected, doc.id, provenance)
            except ParseError as second_error:
                return GenerationOutcome(
                    doc_id=doc.id,
                    status=OutcomeStatus.PARSE_FAILED,
                    attempts=attempts[0],
                    raw_text=raw,
                    error=str(second_error),
                )
        return GenerationOutcome(
            doc_id=doc.id, status=OutcomeStatus.OK, attempts=attempts[0], quiz=quiz
        )

    new_outcomes: dict[str, GenerationOutcome] = {}
    try:
        with ChatClient(model_cfg, transport=transport) as client:
            if todo:
                with ThreadPoolExecutor(max_workers=policy.max_concurrency) as pool:
                    for outcome in pool.map(lambda d: work(client, d), todo):
                        new_outcomes[outcome.doc_id] = outcome
                        if checkpoint_fh is not None:
                            from .model import serialize

                            with write_lock:
                                checkpoint_fh.write(serialize(outcome) + "\n")
                                checkpoint_fh.flush()
    finally:
        if checkpoint_fh is not None:
            checkpoint_fh.close()

    outcomes = tuple(
        reused.get(doc.id) or new_outcomes[doc.id] for doc in docs
    )
    summary = BatchSummary(
        total=len(outcomes),
        ok=sum(1 for o in outcomes if o.status is OutcomeStatus.OK),
        parse_failed=sum(1 for o in outcomes if o.status is OutcomeStatus.PARSE_FAILED),
        request_failed=sum(1 for o in outcomes if o.status is OutcomeStatus.REQUEST_FAILED),
        from_checkpoint=len(reused),
    )
    return BatchResult(outcomes=outcomes, summary=summary)
