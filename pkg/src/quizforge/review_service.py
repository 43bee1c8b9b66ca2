"""HTTP JSON API for the human review workflow.

Serves quiz items with their source context, accepts A-E ratings into
the append-only annotation log, and reports progress. The browser UI
is plain static assets mounted at /; the API is fully usable without
it (curl or any HTTP client).
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotations import AnnotationStore
from .jsonl import load_jsonl
from .model import Annotation, QuizItem, QuizKind, QuizSet, Rating, SourceDocument
from .evaluation import aggregate_ratings


def load_rubric() -> dict:
    text = (resources.files("quizforge") / "assets" / "rubric.json").read_text("utf-8")
    return json.loads(text)


class RatingSubmission(BaseModel):
    item_id: str
    annotator_id: str
    rating: str
    comment: Optional[str] = None


class OptionView(BaseModel):
    label: str
    text: str


class ItemView(BaseModel):
    item_id: str
    index: int
    kind: str
    stem: str
    options: list[OptionView]
    answer: str
    doc_id: str
    doc_title: str
    context: str


class NextResponse(BaseModel):
    done: bool
    item: Optional[ItemView] = None
    rated: int
    total: int
    distribution: Optional[dict] = None


class ProgressResponse(BaseModel):
    total_items: int
    effective_ratings: int
    by_annotator: dict[str, int]
    annotator: Optional[str] = None
    rated: Optional[int] = None


def _item_view(index: int, qs: QuizSet, item: QuizItem, doc: SourceDocument) -> ItemView:
    if item.kind is QuizKind.MCQ:
        options = [OptionView(label=o.label, text=o.text) for o in item.options or ()]
    else:
        options = []
    return ItemView(
        item_id=item.item_id,
        index=index,
        kind=item.kind.value,
        stem=item.stem,
        options=options,
        answer=item.correct_text,
        doc_id=qs.doc_id,
        doc_title=doc.title,
        context=doc.body,
    )


def create_review_app(
    quiz_path: str | Path,
    corpus_path: str | Path,
    store_path: str | Path,
    ui_dir: Optional[str | Path] = None,
) -> FastAPI:
    quiz_sets = load_jsonl(quiz_path, QuizSet)
    docs = {doc.id: doc for doc in load_jsonl(corpus_path, SourceDocument)}
    for qs in quiz_sets:
        if qs.doc_id not in docs:
            raise ValueError(f"quiz set references unknown document {qs.doc_id!r}")
    items: list[tuple[QuizSet, QuizItem]] = [
        (qs, item) for qs in quiz_sets for item in qs.items
    ]
    by_id = {item.item_id: (index, qs, item) for index, (qs, item) in enumerate(items)}
    store = AnnotationStore(store_path)
    rubric = load_rubric()

    app = FastAPI(title="quizforge review", version="1.0")

    @app.exception_handler(RequestValidationError)
    async def _validation_to_400(request, exc):  # this API answers 400, not 422
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/api/rubric")
    def get_rubric() -> dict:
        return rubric

    @app.get("/api/items/next", response_model=NextResponse)
    def next_item(annotator: str = Query(min_length=1)) -> NextResponse:
        rated = store.rated_items(annotator)
        total = len(items)
        for index, (qs, item) in enumerate(items):
            if item.item_id not in rated:
                return NextResponse(
                    done=False,
                    item=_item_view(index, qs, item, docs[qs.doc_id]),
                    rated=len(rated & set(by_id)),
                    total=total,
                )
        distribution = aggregate_ratings(store)
        return NextResponse(
            done=True,
            rated=total,
            total=total,
            distribution=distribution.model_dump(mode="json"),
        )

    @app.get("/api/items/{item_id}", response_model=ItemView)
    def get_item(item_id: str) -> ItemView:
        entry = by_id.get(item_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id!r}")
        index, qs, item = entry
        return _item_view(index, qs, item, docs[qs.doc_id])

    @app.post("/api/ratings", status_code=201)
    def post_rating(submission: RatingSubmission) -> dict:
        if submission.rating not in Rating.__members__:
            raise HTTPException(
                status_code=400,
                detail=f"rating must be one of A-E, got {submission.rating!r}",
            )
        if not submission.annotator_id.strip():
            raise HTTPException(status_code=400, detail="annotator_id must be non-empty")
        if submission.item_id not in by_id:
            raise HTTPException(
                status_code=404, detail=f"unknown item {submission.item_id!r}"
            )
        annotation = Annotation(
            item_id=submission.item_id,
            annotator_id=submission.annotator_id,
            rating=Rating(submission.rating),
            timestamp=datetime.now(timezone.utc),
            comment=submission.comment,
        )
        store.append(annotation)
        rated = store.rated_items(submission.annotator_id)
        return {
            "recorded": True,
            "item_id": submission.item_id,
            "rated": len(rated & set(by_id)),
            "total": len(items),
        }

    @app.get("/api/progress", response_model=ProgressResponse)
    def progress(annotator: Optional[str] = None) -> ProgressResponse:
        effective = store.effective()
        by_annotator: dict[str, int] = {}
        for (_, who) in effective:
            by_annotator[who] = by_annotator.get(who, 0) + 1
        response = ProgressResponse(
            total_items=len(items),
            effective_ratings=len(effective),
            by_annotator=dict(sorted(by_annotator.items())),
        )
        if annotator is not None:
            rated = store.rated_items(annotator) & set(by_id)
            response = response.model_copy(
                update={"annotator": annotator, "rated": len(rated)}
            )
        return response

    ui_path = Path(ui_dir) if ui_dir else None
    if ui_path and ui_path.is_dir():
        app.mount("/", StaticFiles(directory=ui_path, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def placeholder() -> str:
            return (
                "<!doctype html><html><body><h1>quizforge review API</h1>"
                "<p>The browser UI is not built. The JSON API is live under "
                "<code>/api/</code> (items/next, items/{id}, ratings, progress, "
                "rubric).</p></body></html>"
            )

    return app


def serve_review(
    port: int,
    quiz_path: str | Path,
    corpus_path: str | Path,
    store_path: str | Path,
    ui_dir: Optional[str | Path] = None,
    host: str = "127.0.0.1",
) -> None:
    """Run the review service until interrupted.

    Startup problems (unreadable inputs, busy port) raise before the
    server loop begins.
    """
    import socket

    import uvicorn

    app = create_review_app(quiz_path, corpus_path, store_path, ui_dir)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise OSError(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        probe.close()
    uvicorn.run(app, host=host, port=port, log_level="info")
