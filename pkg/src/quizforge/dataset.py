"""Assemble instruct records, split train/eval, emit files and configs.

Records follow the two-field instruct convention: the task prompt goes
in `instruction`, the source text in `input`, and the quiz rendered in
the canonical lettered layout in `output`. Splitting shuffles whole
documents with an explicit Fisher-Yates over a seeded PRNG, so a seed
pins the split byte-for-byte on any machine.
"""

from __future__ import annotations

import hashlib
import random
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from pydantic import model_validator

from .generation import format_lettered
from .model import Entity, QuizKind, QuizSet, Subject, SourceDocument
from .prompting import FORMAT_PHRASES

DEFAULT_INSTRUCTION_TEMPLATE = (
    "Aşağıdaki eğitim metnini oku ve metne dayanarak {{num_questions}} adet "
    "{{format}} soru hazırla. Her sorunun cevabını belirt."
)


class UnresolvedDoc(LookupError):
    """A quiz set references a document missing from the corpus."""


class InsufficientRecords(ValueError):
    """Fewer documents available than the requested split sizes."""


class RecordMeta(Entity):
    doc_id: str
    subject: Subject
    format: QuizKind


class InstructRecord(Entity):
    instruction: str
    input: str
    output: str
    meta: RecordMeta

    @model_validator(mode="after")
    def _check(self) -> "InstructRecord":
        for name in ("instruction", "input", "output"):
            if not getattr(self, name).strip():
                raise ValueError(f"{name} must be non-empty")
        return self


def render_instruction(template: str, qs: QuizSet) -> str:
    return template.replace("{{num_questions}}", str(len(qs.items))).replace(
        "{{format}}", FORMAT_PHRASES[qs.format]
    )


def build_records(
    quiz_sets: Sequence[QuizSet],
    corpus: Sequence[SourceDocument],
    instruction_template: str = DEFAULT_INSTRUCTION_TEMPLATE,
) -> list[InstructRecord]:
    """One instruct record per quiz set; deterministic."""
    docs = {doc.id: doc for doc in corpus}
    records = []
    for qs in quiz_sets:
        doc = docs.get(qs.doc_id)
        if doc is None:
            raise UnresolvedDoc(f"quiz set references unknown document {qs.doc_id!r}")
        records.append(
            InstructRecord(
                instruction=render_instruction(instruction_template, qs),
                input=doc.body,
                output=format_lettered(qs),
                meta=RecordMeta(doc_id=doc.id, subject=doc.subject, format=qs.format),
            )
        )
    return records


class SideManifest(Entity):
    documents: int
    records: int
    subjects: dict[str, int]


class SplitManifest(Entity):
    seed: int
    train: SideManifest
    eval: SideManifest


class DatasetSplit(Entity):
    train: tuple[InstructRecord, ...]
    eval: tuple[InstructRecord, ...]
    seed: int
    manifest: SplitManifest

    @model_validator(mode="after")
    def _check(self) -> "DatasetSplit":
        train_docs = {r.meta.doc_id for r in self.train}
        eval_docs = {r.meta.doc_id for r in self.eval}
        if train_docs & eval_docs:
            raise ValueError("train and eval share documents")
        return self


def _side_manifest(records: Sequence[InstructRecord]) -> SideManifest:
    subjects: dict[str, int] = {}
    for record in records:
        key = str(record.meta.subject)
        subjects[key] = subjects.get(key, 0) + 1
    return SideManifest(
        documents=len({r.meta.doc_id for r in records}),
        records=len(records),
        subjects=dict(sorted(subjects.items())),
    )


def _shuffled(items: list[str], seed: int) -> list[str]:
    # Explicit Fisher-Yates over randrange keeps the permutation stable
    # across Python versions, unlike random.shuffle's implementation.
    rng = random.Random(seed)
    items = list(items)
    for i in range(len(items) - 1, 0, -1):
        j = rng.randrange(i + 1)
        items[i], items[j] = items[j], items[i]
    return items


def split(
    records: Sequence[InstructRecord], train_n: int, eval_n: int, seed: int
) -> DatasetSplit:
    """Assign whole documents to sides; sizes are document counts.

    No document straddles the split, so contexts never leak from train
    into eval. The same seed reproduces the same split exactly.
    """
    if train_n < 0 or eval_n < 0:
        raise InsufficientRecords("split sizes must be non-negative")
    doc_ids: list[str] = []
    seen = set()
    for record in records:
        if record.meta.doc_id not in seen:
            seen.add(record.meta.doc_id)
            doc_ids.append(record.meta.doc_id)
    if train_n + eval_n > len(doc_ids):
        raise InsufficientRecords(
            f"requested {train_n}+{eval_n} documents, corpus has {len(doc_ids)}"
        )
    order = _shuffled(doc_ids, seed)
    train_ids = set(order[:train_n])
    eval_ids = set(order[train_n : train_n + eval_n])
    train = tuple(r for r in records if r.meta.doc_id in train_ids)
    eval_records = tuple(r for r in records if r.meta.doc_id in eval_ids)
    manifest = SplitManifest(
        seed=seed, train=_side_manifest(train), eval=_side_manifest(eval_records)
    )
    return DatasetSplit(train=train, eval=eval_records, seed=seed, manifest=manifest)


class EmitResult(Entity):
    train_path: str
    eval_path: str
    manifest_path: str
    checksums: dict[str, str]


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def emit_jsonl(split_result: DatasetSplit, out_dir: str | Path) -> EmitResult:
    """Write train.jsonl, eval.jsonl and manifest.json; returns checksums."""
    import json

    from .jsonl import write_jsonl

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        train_path = out_dir / "train.jsonl"
        eval_path = out_dir / "eval.jsonl"
        write_jsonl(train_path, split_result.train)
        write_jsonl(eval_path, split_result.eval)
        checksums = {
            "train.jsonl": _sha256(train_path),
            "eval.jsonl": _sha256(eval_path),
        }
        manifest_path = out_dir / "manifest.json"
        manifest = split_result.manifest.model_dump(mode="json")
        manifest["checksums"] = checksums
        manifest_path.write_text(
            json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise OSError(f"cannot write dataset under {out_dir}: {exc}") from exc
    return EmitResult(
        train_path=str(train_path),
        eval_path=str(eval_path),
        manifest_path=str(manifest_path),
        checksums=checksums,
    )


class ModelKind(str, Enum):
    GPT35_TURBO = "gpt-3.5-turbo"
    LLAMA2_CHAT_7B = "llama-2-7b-chat"
    LLAMA2_CHAT_13B = "llama-2-13b-chat"


class FinetuneMethod(str, Enum):
    FULL_SERVICE_API = "full-service-api"
    PEFT = "peft"


class FinetuneConfig(Entity):
    model_kind: ModelKind
    method: FinetuneMethod
    batch_size: int
    learning_rate: float
    epochs: int
    peft_r: Optional[int] = None
    peft_alpha: Optional[int] = None

    @model_validator(mode="after")
    def _check(self) -> "FinetuneConfig":
        if self.method is FinetuneMethod.PEFT:
            if self.peft_r is None or self.peft_alpha is None:
                raise ValueError("PEFT requires peft_r and peft_alpha")
        elif self.peft_r is not None or self.peft_alpha is not None:
            raise ValueError("full-service API fine-tuning forbids peft_r/peft_alpha")
        return self


def finetune_config_for(model_kind: ModelKind) -> FinetuneConfig:
    if model_kind is ModelKind.GPT35_TURBO:
        return FinetuneConfig(
            model_kind=model_kind,
            method=FinetuneMethod.FULL_SERVICE_API,
            batch_size=16,
            learning_rate=0.001,
            epochs=3,
        )
    return FinetuneConfig(
        model_kind=model_kind,
        method=FinetuneMethod.PEFT,
        batch_size=64,
        learning_rate=0.0001,
        epochs=3,
        peft_r=16,
        peft_alpha=32,
    )


def emit_finetune_config(model_kind: ModelKind, out_path: str | Path) -> FinetuneConfig:
    from .model import serialize

    config = finetune_config_for(model_kind)
    Path(out_path).write_text(serialize(config) + "\n", encoding="utf-8")
    return config


def load_finetune_config(path: str | Path) -> FinetuneConfig:
    from .model import deserialize

    return deserialize(Path(path).read_text(encoding="utf-8"), FinetuneConfig)
