"""Subject-aware prompt templates for quiz generation.

Templates are plain UTF-8 files, one per subject (filename = subject
slug, `default` is the mandatory fallback). The placeholder set is
closed: {{title}}, {{body}}, {{num_questions}}, {{format}},
{{output_schema}}. Anything else is rejected at load time.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Optional

from pydantic import model_validator

from .model import Entity, KNOWN_SUBJECT_SLUGS, QuizKind, Subject

ALLOWED_PLACEHOLDERS = frozenset({"title", "body", "num_questions", "format", "output_schema"})
_PLACEHOLDER_RE = re.compile(r"\{\{([^{}]*)\}\}")

FORMAT_PHRASES = {QuizKind.MCQ: "çoktan seçmeli", QuizKind.SAQ: "kısa cevaplı"}


class TemplateSyntaxError(ValueError):
    def __init__(self, name: str, line: int, message: str):
        self.name = name
        self.line = line
        super().__init__(f"{name}, line {line}: {message}")


class MissingFallback(ValueError):
    """No `default` template found."""


class RenderParams(Entity):
    num_questions: int = 5
    format: QuizKind = QuizKind.MCQ
    options_per_question: int = 5

    @model_validator(mode="after")
    def _check(self) -> "RenderParams":
        if self.num_questions <= 0:
            raise ValueError("num_questions must be positive")
        if not 2 <= self.options_per_question <= 5:
            raise ValueError("options_per_question must be in 2..5")
        return self


class PromptTemplate(Entity):
    name: str
    subject: Optional[Subject] = None
    template_text: str
    output_schema: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "PromptTemplate":
        names = _scan_placeholders(self.name, self.template_text)
        for required in ("body", "num_questions"):
            if required not in names:
                raise ValueError(f"template {self.name!r} must reference {{{{{required}}}}}")
        return self


def _scan_placeholders(name: str, text: str) -> set[str]:
    """Collect placeholder names; reject unknown or malformed ones."""
    found: set[str] = set()
    for lineno, line in enumerate(text.split("\n"), start=1):
        for match in _PLACEHOLDER_RE.finditer(line):
            inner = match.group(1).strip()
            if inner not in ALLOWED_PLACEHOLDERS:
                raise TemplateSyntaxError(name, lineno, f"unknown placeholder {{{{{inner}}}}}")
            found.add(inner)
        stripped = _PLACEHOLDER_RE.sub("", line)
        if "{{" in stripped or "}}" in stripped:
            raise TemplateSyntaxError(name, lineno, "stray '{{' or '}}' outside a placeholder")
    return found


def load_templates(path: str | Path) -> dict[str, PromptTemplate]:
    """Load every *.tmpl file in a directory, keyed by file stem.

    Requires a `default` entry; unknown placeholders raise
    TemplateSyntaxError with the offending line number.
    """
    path = Path(path)
    templates: dict[str, PromptTemplate] = {}
    for file in sorted(path.glob("*.tmpl")):
        stem = file.stem
        text = file.read_text(encoding="utf-8")
        # scan before model construction so syntax errors surface
        # directly instead of wrapped in a pydantic error
        _scan_placeholders(stem, text)
        subject = Subject(slug=stem) if stem in KNOWN_SUBJECT_SLUGS else None
        templates[stem] = PromptTemplate(name=stem, subject=subject, template_text=text)
    if "default" not in templates:
        raise MissingFallback(f"no default.tmpl in {path}")
    return templates


def bundled_template_dir() -> Path:
    """Directory of the templates shipped with the package."""
    return Path(str(resources.files("quizforge") / "assets" / "templates"))


def output_schema_json(params: RenderParams) -> str:
    """Instructions for the machine-readable JSON answer layout."""
    if params.format is QuizKind.MCQ:
        labels = ", ".join(f'"{chr(65 + i)}"' for i in range(params.options_per_question))
        return (
            "Yanıtını yalnızca geçerli bir JSON dizisi olarak ver. Dizideki her öğe şu "
            'alanlara sahip bir nesne olsun: "question" (soru metni), "options" '
            f"({params.options_per_question} seçenekli bir nesne; anahtarlar sırasıyla {labels}) "
            've "answer" (doğru seçeneğin harfi). JSON dışında hiçbir şey yazma.'
        )
    return (
        "Yanıtını yalnızca geçerli bir JSON dizisi olarak ver. Dizideki her öğe şu "
        'alanlara sahip bir nesne olsun: "question" (soru metni) ve "answer" (kısa '
        "cevap metni). JSON dışında hiçbir şey yazma."
    )


def output_schema_lettered(params: RenderParams) -> str:
    """Instructions for the plain-text lettered answer layout."""
    if params.format is QuizKind.MCQ:
        last = chr(65 + params.options_per_question - 1)
        return (
            "Her soruyu numaralandır (1., 2., ...). Her sorunun altına A) ile "
            f"{last}) arasında birer satırlık seçenekler yaz ve ardından tek satırda "
            '"Cevap: <harf>" biçiminde doğru seçeneği belirt.'
        )
    return (
        "Her soruyu numaralandır (1., 2., ...). Her sorunun altına tek satırda "
        '"Cevap: <kısa cevap>" biçiminde cevabı yaz.'
    )


def select_template(subject: Subject, templates: dict[str, PromptTemplate]) -> PromptTemplate:
    if subject.slug in KNOWN_SUBJECT_SLUGS and subject.slug in templates:
        return templates[subject.slug]
    return templates["default"]


def render(doc, params: RenderParams, templates: dict[str, PromptTemplate]) -> str:
    """Fill the subject's template (or the fallback) for one document."""
    template = select_template(doc.subject, templates)
    schema = template.output_schema or output_schema_json(params)
    values = {
        "title": doc.title,
        "body": doc.body,
        "num_questions": str(params.num_questions),
        "format": FORMAT_PHRASES[params.format],
        "output_schema": schema,
    }
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1).strip()], template.template_text)
