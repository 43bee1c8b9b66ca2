"""Single front-door executable wiring the pipeline stages.

Exit codes: 0 success, 1 validation failure, 2 I/O or network failure.
A JSON --config file supplies defaults per subcommand path, e.g.
{"generate": {"endpoint": "mock://chat"}}; explicit flags win.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import corpus as corpus_mod
from . import dataset as dataset_mod
from . import evaluation as eval_mod
from . import transform as transform_mod
from .generation import (
    BatchPolicy,
    ModelConfig,
    OutcomeStatus,
    RequestError,
    run_batch,
)
from .jsonl import load_jsonl, write_jsonl
from .model import QuizKind, QuizSet, SourceDocument, ValidationError, serialize
from .prompting import RenderParams, bundled_template_dir, load_templates
from .rouge import GateAggregate, GateConfig, quality_gate


def _echo_json(data) -> None:
    click.echo(json.dumps(data, ensure_ascii=False, sort_keys=True, indent=2))


def _write_json(path: str | Path, data) -> None:
    Path(path).write_text(
        json.dumps(data, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise click.UsageError(f"{what} not found: {path}")
    return p


def _load_config(ctx: click.Context, param: click.Parameter, value):
    if value is None:
        return None
    try:
        data = json.loads(Path(value).read_text(encoding="utf-8"))
    except OSError as exc:
        raise click.ClickException(f"cannot read config {value}: {exc}")
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"config {value} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise click.UsageError(f"config {value} must hold a JSON object")
    ctx.default_map = data
    return value


@click.group()
@click.option(
    "--config",
    type=click.Path(),
    callback=_load_config,
    expose_value=False,
    is_eager=True,
    help="JSON file with per-subcommand default options (flags win).",
)
@click.version_option(package_name="quizforge")
def cli() -> None:
    """Build and evaluate Turkish educational quiz datasets."""


# ---------------------------------------------------------------------------
# corpus


@cli.group()
def corpus() -> None:
    """Corpus intake and filtering."""


@corpus.command("clean")
@click.option("--in", "in_path", required=True, type=click.Path(), help="Raw records JSONL.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Cleaned corpus JSONL.")
@click.option("--rejects", "rejects_path", type=click.Path(), help="Rejection report JSON.")
@click.option("--min-tokens", default=100, show_default=True, help="Inclusive lower token bound.")
@click.option("--max-tokens", default=3000, show_default=True, help="Inclusive upper token bound.")
@click.option(
    "--tokenizer",
    type=click.Choice([t.value for t in corpus_mod.TokenizerKind]),
    default=corpus_mod.TokenizerKind.UNICODE_WORDS.value,
    show_default=True,
)
@click.option(
    "--fragment-min-tokens",
    default=corpus_mod.DEFAULT_FRAGMENT_MIN_TOKENS,
    show_default=True,
    help="Lines below this token count are dropped from multi-line text.",
)
def corpus_clean(
    in_path, out_path, rejects_path, min_tokens, max_tokens, tokenizer, fragment_min_tokens
):
    """Clean and filter raw records into a corpus."""
    _require_file(in_path, "input")
    cfg = corpus_mod.FilterConfig(
        min_tokens=min_tokens,
        max_tokens=max_tokens,
        tokenizer=corpus_mod.TokenizerKind(tokenizer),
    )
    records = load_jsonl(in_path, corpus_mod.RawRecord)
    result = corpus_mod.ingest(records, cfg, fragment_min_tokens)
    write_jsonl(out_path, result.documents)
    if rejects_path:
        _write_json(
            rejects_path,
            {
                "input": len(records),
                "kept": len(result.documents),
                "rejected": [r.model_dump(mode="json") for r in result.rejected],
            },
        )
    click.echo(f"kept {len(result.documents)} of {len(records)} records -> {out_path}")


@cli.command("stats")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--bucket-width", default=100, show_default=True)
@click.option("--out", "out_path", type=click.Path(), help="Also write the stats JSON here.")
def stats(corpus_path, bucket_width, out_path):
    """Subject distribution and token histogram of a corpus."""
    _require_file(corpus_path, "corpus")
    if bucket_width <= 0:
        raise click.UsageError("bucket-width must be positive")
    docs = load_jsonl(corpus_path, SourceDocument)
    data = {
        "documents": len(docs),
        "subjects": {
            key: value.model_dump(mode="json")
            for key, value in corpus_mod.subject_distribution(docs).items()
        },
        "token_histogram": [
            bucket.model_dump(mode="json")
            for bucket in corpus_mod.token_histogram(docs, bucket_width)
        ],
    }
    if out_path:
        _write_json(out_path, data)
    _echo_json(data)


# ---------------------------------------------------------------------------
# generate


@cli.command("generate")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path(), help="Quiz sets JSONL.")
@click.option("--template-dir", type=click.Path(), help="Prompt templates; bundled set by default.")
@click.option("--model", "model_name", required=True, help="Model name sent to the endpoint.")
@click.option("--endpoint", required=True, help="Chat-completions URL (mock:// for the bundled mock).")
@click.option("--api-key-env", help="Environment variable holding the API key.")
@click.option("--format", "fmt", type=click.Choice(["mcq", "saq"]), default="mcq", show_default=True)
@click.option("--num-questions", default=5, show_default=True)
@click.option("--options-per-question", default=5, show_default=True)
@click.option("--temperature", default=0.7, show_default=True)
@click.option("--max-output-tokens", default=2048, show_default=True)
@click.option("--timeout", default=60.0, show_default=True)
@click.option("--concurrency", default=4, show_default=True)
@click.option("--rpm", default=600, show_default=True, help="Requests per minute.")
@click.option("--max-retries", default=3, show_default=True)
@click.option("--backoff-base", default=2.0, show_default=True)
@click.option(
    "--outcomes",
    "outcomes_path",
    type=click.Path(),
    help="Outcome checkpoint JSONL [default: <out>.outcomes.jsonl].",
)
def generate(
    corpus_path,
    out_path,
    template_dir,
    model_name,
    endpoint,
    api_key_env,
    fmt,
    num_questions,
    options_per_question,
    temperature,
    max_output_tokens,
    timeout,
    concurrency,
    rpm,
    max_retries,
    backoff_base,
    outcomes_path,
):
    """Generate quiz sets for every corpus document.

    Per-document failures are recorded in the outcomes file, not fatal;
    re-running with the same outcomes file skips finished documents.
    """
    _require_file(corpus_path, "corpus")
    template_path = Path(template_dir) if template_dir else bundled_template_dir()
    templates = load_templates(template_path)
    docs = load_jsonl(corpus_path, SourceDocument)
    params = RenderParams(
        num_questions=num_questions,
        format=QuizKind(fmt),
        options_per_question=options_per_question,
    )
    model_cfg = ModelConfig(
        endpoint_url=endpoint,
        model_name=model_name,
        temperature=temperature,
        max_output_tokens=max_output_tokens,
        api_key_env=api_key_env,
        timeout=timeout,
    )
    policy = BatchPolicy(
        max_concurrency=concurrency,
        requests_per_minute=rpm,
        max_retries=max_retries,
        backoff_base=backoff_base,
    )
    checkpoint = outcomes_path or f"{out_path}.outcomes.jsonl"
    result = run_batch(docs, templates, params, model_cfg, policy, checkpoint_path=checkpoint)
    quizzes = [o.quiz for o in result.outcomes if o.status is OutcomeStatus.OK and o.quiz]
    write_jsonl(out_path, quizzes)
    _echo_json(result.summary.model_dump(mode="json"))
    click.echo(f"wrote {len(quizzes)} quiz sets -> {out_path}; outcomes -> {checkpoint}")


# ---------------------------------------------------------------------------
# transform


@cli.group()
def transform() -> None:
    """Dataset format transformations."""


@transform.command("mcq-to-saq")
@click.option("--in", "in_path", required=True, type=click.Path(), help="MCQ quiz sets JSONL.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="SAQ quiz sets JSONL.")
@click.option("--report", "report_path", type=click.Path(), help="Summary JSON.")
def transform_mcq_to_saq(in_path, out_path, report_path):
    """Derive short-answer sets by dropping MCQ distractors."""
    _require_file(in_path, "input")
    summary = transform_mod.transform_corpus(in_path, out_path)
    if report_path:
        _write_json(report_path, summary.model_dump(mode="json"))
    _echo_json(summary.model_dump(mode="json"))
    for item_id in summary.flagged_item_ids:
        click.echo(f"warning: stem of {item_id} presupposes visible options", err=True)


# ---------------------------------------------------------------------------
# score


@cli.command("score")
@click.option("--quiz", "quiz_path", required=True, type=click.Path(), help="Quiz sets JSONL.")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--gate-min", default=0.05, show_default=True, help="Minimum ROUGE-L F1.")
@click.option("--gate-max", type=float, help="Optional maximum ROUGE-L F1 (leakage guard).")
@click.option(
    "--aggregate",
    type=click.Choice([a.value for a in GateAggregate]),
    default=GateAggregate.PER_ITEM.value,
    show_default=True,
)
@click.option("--stem-only", is_flag=True, help="Score stems without options/answers.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Report JSON.")
def score(quiz_path, corpus_path, gate_min, gate_max, aggregate, stem_only, out_path):
    """ROUGE-score quiz sets against their source documents."""
    _require_file(quiz_path, "quiz file")
    _require_file(corpus_path, "corpus")
    try:
        gate = GateConfig(
            min_rouge_l=gate_min,
            max_rouge_l=gate_max,
            aggregate=GateAggregate(aggregate),
        )
    except (ValidationError, ValueError) as exc:
        raise click.UsageError(str(exc))
    docs = {doc.id: doc for doc in load_jsonl(corpus_path, SourceDocument)}
    sets = load_jsonl(quiz_path, QuizSet)
    results = []
    passed = 0
    for qs in sets:
        doc = docs.get(qs.doc_id)
        if doc is None:
            raise click.UsageError(f"quiz set references unknown document {qs.doc_id!r}")
        result = quality_gate(qs, doc, gate, stem_only=stem_only)
        passed += result.set_passed
        results.append(result.model_dump(mode="json"))
    report = {
        "gate": gate.model_dump(mode="json"),
        "sets": results,
        "sets_total": len(results),
        "sets_passed": passed,
    }
    _write_json(out_path, report)
    click.echo(f"{passed}/{len(results)} sets passed the gate -> {out_path}")


# ---------------------------------------------------------------------------
# dataset


@cli.group()
def dataset() -> None:
    """Instruct records, splits and fine-tune configs."""


@dataset.command("build")
@click.option("--quiz", "quiz_path", required=True, type=click.Path(), help="Quiz sets JSONL.")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path(), help="Instruct records JSONL.")
@click.option("--instruction-template", help="Override the built-in instruction text.")
def dataset_build(quiz_path, corpus_path, out_path, instruction_template):
    """Assemble (instruction, input, output) records from quiz sets."""
    _require_file(quiz_path, "quiz file")
    _require_file(corpus_path, "corpus")
    sets = load_jsonl(quiz_path, QuizSet)
    docs = load_jsonl(corpus_path, SourceDocument)
    template = instruction_template or dataset_mod.DEFAULT_INSTRUCTION_TEMPLATE
    try:
        records = dataset_mod.build_records(sets, docs, template)
    except dataset_mod.UnresolvedDoc as exc:
        raise click.UsageError(str(exc))
    write_jsonl(out_path, records)
    click.echo(f"wrote {len(records)} records -> {out_path}")


@dataset.command("split")
@click.option("--records", "records_path", required=True, type=click.Path())
@click.option("--train", "train_n", required=True, type=int, help="Documents in train.")
@click.option("--eval", "eval_n", required=True, type=int, help="Documents in eval.")
@click.option("--seed", required=True, type=int)
@click.option("--out-dir", required=True, type=click.Path())
def dataset_split(records_path, train_n, eval_n, seed, out_dir):
    """Seeded document-level split into train.jsonl / eval.jsonl."""
    _require_file(records_path, "records file")
    records = load_jsonl(records_path, dataset_mod.InstructRecord)
    try:
        result = dataset_mod.split(records, train_n, eval_n, seed)
    except dataset_mod.InsufficientRecords as exc:
        raise click.UsageError(str(exc))
    emitted = dataset_mod.emit_jsonl(result, out_dir)
    manifest = result.manifest.model_dump(mode="json")
    manifest["checksums"] = emitted.checksums
    _echo_json(manifest)


@dataset.command("emit-config")
@click.option(
    "--model-kind",
    required=True,
    type=click.Choice([k.value for k in dataset_mod.ModelKind]),
)
@click.option("--out", "out_path", required=True, type=click.Path())
def dataset_emit_config(model_kind, out_path):
    """Write the fine-tuning configuration for a model family."""
    config = dataset_mod.emit_finetune_config(dataset_mod.ModelKind(model_kind), out_path)
    _echo_json(config.model_dump(mode="json"))


# ---------------------------------------------------------------------------
# eval


@cli.group("eval")
def eval_group() -> None:
    """Model evaluation runs and comparison reports."""


@eval_group.command("run")
@click.option("--eval-set", "eval_set", required=True, type=click.Path(), help="Eval records JSONL.")
@click.option("--model", "model_name", required=True)
@click.option("--endpoint", required=True)
@click.option("--api-key-env", help="Environment variable holding the API key.")
@click.option("--label", required=True, help='Run label, e.g. "base" or "finetuned".')
@click.option("--format", "fmt", type=click.Choice(["mcq", "saq"]), default="mcq", show_default=True)
@click.option("--temperature", default=0.7, show_default=True)
@click.option("--max-output-tokens", default=2048, show_default=True)
@click.option("--timeout", default=60.0, show_default=True)
@click.option("--concurrency", default=4, show_default=True)
@click.option("--rpm", default=600, show_default=True)
@click.option("--max-retries", default=3, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(), help="Eval result JSON.")
def eval_run(
    eval_set,
    model_name,
    endpoint,
    api_key_env,
    label,
    fmt,
    temperature,
    max_output_tokens,
    timeout,
    concurrency,
    rpm,
    max_retries,
    out_path,
):
    """Evaluate an endpoint on the eval split with ROUGE-1/2/L."""
    _require_file(eval_set, "eval set")
    cfg = eval_mod.EvalRunConfig(
        model_cfg=ModelConfig(
            endpoint_url=endpoint,
            model_name=model_name,
            temperature=temperature,
            max_output_tokens=max_output_tokens,
            api_key_env=api_key_env,
            timeout=timeout,
        ),
        eval_set=eval_set,
        format=QuizKind(fmt),
        label=label,
    )
    policy = BatchPolicy(
        max_concurrency=concurrency, requests_per_minute=rpm, max_retries=max_retries
    )
    result = eval_mod.evaluate_model(cfg, policy)
    Path(out_path).write_text(serialize(result) + "\n", encoding="utf-8")
    means = result.means
    click.echo(
        f"{result.label}: {means.rouge1_f1 * 100:.2f} / {means.rouge2_f1 * 100:.2f} / "
        f"{means.rougeL_f1 * 100:.2f} (scored {result.scored}, "
        f"request_failed {result.failures.request_failed}, "
        f"parse_failed {result.failures.parse_failed}) -> {out_path}"
    )


@eval_group.command("report")
@click.option(
    "--in",
    "in_paths",
    required=True,
    multiple=True,
    type=click.Path(),
    help="Eval result JSON files (repeatable; glob patterns allowed).",
)
@click.argument("more_paths", nargs=-1, type=click.Path())
@click.option("--out-json", type=click.Path())
@click.option("--out-md", type=click.Path())
@click.option("--out-html", type=click.Path())
def eval_report(in_paths, more_paths, out_json, out_md, out_html):
    """Render the comparison table for one or more eval runs.

    `--in runs/*.json` works whether the shell expands the glob (the
    extra files arrive as trailing arguments) or passes it quoted.
    """
    import glob as globlib

    paths = []
    for path in (*in_paths, *more_paths):
        if any(ch in path for ch in "*?["):
            matches = sorted(globlib.glob(path))
            if not matches:
                raise click.UsageError(f"no files match {path}")
            paths.extend(matches)
        else:
            paths.append(path)
    results = []
    for path in paths:
        _require_file(path, "eval result")
        from .model import deserialize

        results.append(deserialize(Path(path).read_text(encoding="utf-8"), eval_mod.EvalResult))
    report = eval_mod.compare_runs(results)
    if out_json:
        Path(out_json).write_text(report.render_json(), encoding="utf-8")
    if out_md:
        Path(out_md).write_text(report.render_markdown(), encoding="utf-8")
    if out_html:
        Path(out_html).write_text(report.render_html(), encoding="utf-8")
    click.echo(report.render_text(), nl=False)


# ---------------------------------------------------------------------------
# review


@cli.group()
def review() -> None:
    """Human review sampling and the annotation service."""


@review.command("sample")
@click.option("--quiz", "quiz_path", required=True, type=click.Path())
@click.option("--n", "n", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--stratify-by-subject", is_flag=True)
@click.option("--corpus", "corpus_path", type=click.Path(), help="Needed for stratification.")
def review_sample(quiz_path, n, seed, out_path, stratify_by_subject, corpus_path):
    """Seeded sample of quiz items for human review."""
    _require_file(quiz_path, "quiz file")
    sets = load_jsonl(quiz_path, QuizSet)
    docs = None
    if stratify_by_subject:
        if not corpus_path:
            raise click.UsageError("--stratify-by-subject requires --corpus")
        _require_file(corpus_path, "corpus")
        docs = load_jsonl(corpus_path, SourceDocument)
    try:
        sampled = eval_mod.sample_for_review(
            sets, n, seed, by_subject=stratify_by_subject, corpus=docs
        )
    except eval_mod.InsufficientItems as exc:
        raise click.UsageError(str(exc))
    write_jsonl(out_path, sampled)
    total = sum(len(qs.items) for qs in sampled)
    click.echo(f"sampled {total} items into {len(sampled)} sets -> {out_path}")


@review.command("serve")
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--quiz", "quiz_path", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--store", "store_path", required=True, type=click.Path(), help="Annotations JSONL.")
@click.option("--ui-dir", type=click.Path(), help="Built review UI assets (frontend/dist).")
def review_serve(port, host, quiz_path, corpus_path, store_path, ui_dir):
    """Serve the review UI and its JSON API."""
    _require_file(quiz_path, "quiz file")
    _require_file(corpus_path, "corpus")
    from .review_service import serve_review

    serve_review(port, quiz_path, corpus_path, store_path, ui_dir=ui_dir, host=host)


# ---------------------------------------------------------------------------
# entry


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except RequestError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (ValidationError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
