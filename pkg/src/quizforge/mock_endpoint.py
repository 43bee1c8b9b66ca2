"""Deterministic in-process chat-completions endpoint.

Pointing a ModelConfig at a `mock://` URL routes requests through an
httpx.MockTransport instead of a socket, so batch runs and the
end-to-end fixture work with zero network access. The response quiz is
a pure function of the prompt: stems are word windows lifted from the
prompt (which embeds the document body), so generated questions carry
real token overlap with their source text.

URL query parameters tune the behavior:
    style      json (default) or lettered response layout
    format     mcq (default) or saq, when not inferable from the prompt
    questions  question count fallback, default 5
    options    option count fallback, default 5
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from urllib.parse import parse_qs, urlsplit

import httpx

from .textutil import WORD_RE

_COUNT_RE = re.compile(r"(\d+)\s+adet\s+(çoktan seçmeli|kısa cevaplı)")
_OPTIONS_RE = re.compile(r"\((\d+)\s+seçenekli")
_LAST_LABEL_RE = re.compile(r"ile\s+([A-E])\)")

_FALLBACK_WORDS = (
    "bilgi", "kavram", "konu", "ders", "örnek", "tanım", "süreç", "yapı",
)


def _infer(prompt: str, params: dict[str, str]) -> tuple[str, int, int]:
    fmt = params.get("format", "")
    questions = int(params.get("questions", 0) or 0)
    count_match = _COUNT_RE.search(prompt)
    if count_match:
        questions = questions or int(count_match.group(1))
        if not fmt:
            fmt = "mcq" if count_match.group(2) == "çoktan seçmeli" else "saq"
    options = int(params.get("options", 0) or 0)
    if not options:
        options_match = _OPTIONS_RE.search(prompt)
        if options_match:
            options = int(options_match.group(1))
        else:
            label_match = _LAST_LABEL_RE.search(prompt)
            if label_match:
                options = ord(label_match.group(1)) - ord("A") + 1
    return fmt or "mcq", questions or 5, min(max(options or 5, 2), 5)


def _pick_distinct(rng: random.Random, pool: list[str], n: int, seeded: str) -> list[str]:
    unique = list(dict.fromkeys(pool))
    rng.shuffle(unique)
    chosen = [seeded]
    for word in unique:
        if len(chosen) == n:
            break
        if word not in chosen:
            chosen.append(word)
    while len(chosen) < n:
        chosen.append(f"{seeded}-{len(chosen)}")
    return chosen


def build_quiz_payload(prompt: str, params: dict[str, str]) -> str:
    fmt, questions, option_count = _infer(prompt, params)
    rng = random.Random(hashlib.sha256(prompt.encode("utf-8")).digest())
    # Prefer the passage embedded after the bundled templates' final
    # "Metin:" marker so stems overlap the source document.
    source = prompt
    marker = prompt.rfind("Metin:")
    if marker != -1 and WORD_RE.search(prompt[marker + len("Metin:"):]):
        source = prompt[marker + len("Metin:"):]
    words = [w for w in WORD_RE.findall(source) if len(w) >= 3] or list(_FALLBACK_WORDS)

    entries = []
    for _ in range(questions):
        start = rng.randrange(len(words))
        window = [words[(start + j) % len(words)] for j in range(6)]
        stem = " ".join(window[:5]) + " ifadesinde anlatılan kavram nedir?"
        answer_word = window[5]
        if fmt == "mcq":
            texts = _pick_distinct(rng, words, option_count, answer_word)
            rng.shuffle(texts)
            labels = [chr(65 + i) for i in range(option_count)]
            correct = labels[texts.index(answer_word)]
            entries.append(
                {
                    "question": stem,
                    "options": dict(zip(labels, texts)),
                    "answer": correct,
                }
            )
        else:
            entries.append({"question": stem, "answer": answer_word})

    if params.get("style") == "lettered":
        blocks = []
        for number, entry in enumerate(entries, start=1):
            lines = [f"{number}. {entry['question']}"]
            if fmt == "mcq":
                for label, text in entry["options"].items():
                    lines.append(f"{label}) {text}")
            lines.append(f"Cevap: {entry['answer']}")
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks)
    return json.dumps(entries, ensure_ascii=False, indent=2)


def transport_for(mock_url: str) -> tuple[httpx.MockTransport, str]:
    """MockTransport plus the rewritten in-process request URL."""
    parts = urlsplit(mock_url)
    params = {key: values[-1] for key, values in parse_qs(parts.query).items()}

    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content.decode("utf-8"))
        prompt = body["messages"][-1]["content"]
        content = build_quiz_payload(prompt, params)
        return httpx.Response(
            200,
            json={
                "id": "mock-completion",
                "model": body.get("model", "mock"),
                "choices": [
                    {"index": 0, "message": {"role": "assistant", "content": content}}
                ],
            },
        )

    return httpx.MockTransport(handler), "http://mock.internal/v1/chat/completions"
