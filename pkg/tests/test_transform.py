import pytest
from hypothesis import given, settings

from quizforge.jsonl import load_jsonl, write_jsonl
from quizforge.model import QuizItem, QuizKind, QuizOption, QuizSet, serialize
from quizforge.transform import (
    InvalidInput,
    flag_option_dependent_stems,
    mcq_to_saq,
    transform_corpus,
)

from conftest import FIXED_PROVENANCE, make_mcq_set, make_saq_set, quiz_sets


def test_correct_option_text_becomes_answer():
    qs = QuizSet(
        doc_id="d",
        format=QuizKind.MCQ,
        items=(
            QuizItem(
                item_id="d#0",
                kind=QuizKind.MCQ,
                stem="S",
                options=(QuizOption(label="A", text="x"), QuizOption(label="B", text="y")),
                correct_label="B",
            ),
        ),
        provenance=FIXED_PROVENANCE,
    )
    out = mcq_to_saq(qs)
    assert out.format is QuizKind.SAQ
    assert out.items[0].stem == "S"
    assert out.items[0].answer_text == "y"
    assert out.items[0].options is None


def test_item_count_and_ids_preserved():
    qs = make_mcq_set(n_items=5, seed=4)
    out = mcq_to_saq(qs)
    assert len(out.items) == 5
    assert [i.item_id for i in out.items] == [i.item_id for i in qs.items]
    assert out.doc_id == qs.doc_id
    assert out.provenance.note == "derived:mcq-to-saq"
    assert out.provenance.generated_at == qs.provenance.generated_at


def test_applying_to_saq_set_rejected():
    with pytest.raises(InvalidInput):
        mcq_to_saq(make_saq_set())


@settings(max_examples=80)
@given(quiz_sets(format=QuizKind.MCQ))
def test_no_distractor_text_survives(qs):
    out = mcq_to_saq(qs)
    assert len(out.items) == len(qs.items)
    for before, after in zip(qs.items, out.items):
        correct = before.correct_text
        assert after.answer_text == correct
        for opt in before.options or ():
            if opt.text != correct:
                assert opt.text != after.answer_text
        assert after.stem == before.stem


def test_flag_option_dependent_stems():
    qs = QuizSet(
        doc_id="d",
        format=QuizKind.SAQ,
        items=(
            QuizItem(
                item_id="d#0",
                kind=QuizKind.SAQ,
                stem="AŞAĞIDAKİLERDEN HANGİSİ bir asittir?",
                answer_text="sirke",
            ),
            QuizItem(item_id="d#1", kind=QuizKind.SAQ, stem="Asit nedir?", answer_text="tanım"),
        ),
        provenance=FIXED_PROVENANCE,
    )
    assert flag_option_dependent_stems(qs) == ["d#0"]


def test_transform_corpus_counts_and_determinism(tmp_path):
    sets = [make_mcq_set(doc_id=f"doc-{i:04d}", seed=i) for i in range(10)]
    src = tmp_path / "mcq.jsonl"
    write_jsonl(src, sets)
    out1 = tmp_path / "saq1.jsonl"
    out2 = tmp_path / "saq2.jsonl"
    summary1 = transform_corpus(src, out1)
    summary2 = transform_corpus(src, out2)
    assert summary1.sets_in == summary1.sets_out == 10
    assert summary1.items_out == 50
    assert out1.read_bytes() == out2.read_bytes()
    assert summary1 == summary2
    reloaded = load_jsonl(out1, QuizSet)
    assert all(qs.format is QuizKind.SAQ for qs in reloaded)


def test_transform_corpus_skips_corrupt_line(tmp_path):
    sets = [make_mcq_set(doc_id=f"doc-{i:04d}", seed=i) for i in range(3)]
    src = tmp_path / "mcq.jsonl"
    lines = [serialize(qs) for qs in sets]
    lines.insert(2, '{"doc_id": "broken"')
    src.write_text("\n".join(lines) + "\n", encoding="utf-8")
    out = tmp_path / "saq.jsonl"
    summary = transform_corpus(src, out)
    assert summary.sets_in == 4
    assert summary.sets_out == 3
    assert len(summary.errors) == 1 and summary.errors[0].line == 3
    assert len(load_jsonl(out, QuizSet)) == 3


def test_transform_corpus_empty_input(tmp_path):
    src = tmp_path / "empty.jsonl"
    src.write_text("", encoding="utf-8")
    out = tmp_path / "out.jsonl"
    summary = transform_corpus(src, out)
    assert summary.sets_in == 0 and summary.sets_out == 0 and summary.items_out == 0
    assert out.read_text(encoding="utf-8") == ""
