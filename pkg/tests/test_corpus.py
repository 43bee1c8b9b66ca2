import random

import pytest
from hypothesis import given, settings, strategies as st

from quizforge.corpus import (
    EMOJI_RE,
    EmptyAfterCleaning,
    FilterConfig,
    FilterReason,
    RawRecord,
    TokenizerKind,
    URL_RE,
    build_document,
    clean,
    filter_docs,
    ingest,
    subject_distribution,
    token_count,
    token_histogram,
)

from conftest import make_doc
from oracles import unicode_word_segments


def test_clean_strips_emoji_and_links():
    assert clean("Merhaba 😀 dünya https://x.example") == "Merhaba dünya"


def test_clean_leaves_clean_text_unchanged():
    text = "Türkiye Cumhuriyeti 1923 yılında kuruldu."
    assert clean(text) == text


def test_clean_url_only_input_raises():
    with pytest.raises(EmptyAfterCleaning):
        clean("https://only-a-url.example")


def test_clean_drops_short_fragment_lines():
    text = "Ana Sayfa\nHücre zarı hücreyi dış ortamdan ayıran bir yapıdır.\nMenü"
    assert clean(text) == "Hücre zarı hücreyi dış ortamdan ayıran bir yapıdır."


def test_clean_strips_html_tags_and_entities():
    cleaned = clean("Bu <b>önemli</b> bir konu &amp; ders notudur.")
    assert "<" not in cleaned and ">" not in cleaned
    assert "&amp;" not in cleaned
    assert "önemli" in cleaned


noisy_text = st.text(
    alphabet=st.sampled_from(
        list("abcçdefgğhıijklmnoöprsştuüvyz ABC .,!\n\t")
        + ["😀", "🎓", "©", "\U0001F1F9", "\U0001F1F7"]  # incl. regional indicators
    ),
    min_size=0,
    max_size=300,
)


@settings(max_examples=120)
@given(noisy_text)
def test_clean_idempotent_and_scrubbed(text):
    try:
        once = clean(text)
    except EmptyAfterCleaning:
        return
    assert clean(once) == once
    assert not EMOJI_RE.search(once)
    assert not URL_RE.search(once)
    assert "  " not in once and "\n" not in once


def test_token_count_examples():
    assert token_count("") == 0
    assert token_count("kedi evde uyur") == 3
    assert token_count("kedi evde uyur", TokenizerKind.WHITESPACE_SPLIT) == 3
    assert token_count("yüz-yıl, 1923!") == 3
    assert token_count("yüz-yıl, 1923!", TokenizerKind.WHITESPACE_SPLIT) == 2


@settings(max_examples=150)
@given(noisy_text)
def test_unicode_token_count_matches_segmentation_oracle(text):
    assert token_count(text, TokenizerKind.UNICODE_WORDS) == len(unicode_word_segments(text))


def test_unicode_oracle_hand_checked_case():
    assert unicode_word_segments("yüz-yıl, 1923!") == ["yüz", "yıl", "1923"]


def _docs_with_counts(counts):
    body = "kelime " * 5
    return [
        make_doc(i, body=body.strip()).model_copy(update={"token_count": count})
        for i, count in enumerate(counts)
    ]


def test_filter_docs_bounds_inclusive():
    cfg = FilterConfig(min_tokens=100, max_tokens=3000)
    docs = _docs_with_counts([50, 100, 3000, 3001])
    kept, rejected = filter_docs(docs, cfg)
    assert [d.token_count for d in kept] == [100, 3000]
    assert [(d.token_count, reason) for d, reason in rejected] == [
        (50, FilterReason.TOO_SHORT),
        (3001, FilterReason.TOO_LONG),
    ]


def test_filter_docs_all_within_bounds():
    cfg = FilterConfig(min_tokens=1, max_tokens=10)
    docs = _docs_with_counts([2, 5])
    kept, rejected = filter_docs(docs, cfg)
    assert len(kept) == 2 and rejected == []


@settings(max_examples=60)
@given(st.lists(st.integers(min_value=0, max_value=4000), max_size=40))
def test_filter_partition_preserves_order(counts):
    cfg = FilterConfig(min_tokens=100, max_tokens=3000)
    docs = _docs_with_counts(counts)
    kept, rejected = filter_docs(docs, cfg)
    assert len(kept) + len(rejected) == len(docs)
    merged = sorted(kept + [d for d, _ in rejected], key=lambda d: d.id)
    assert merged == sorted(docs, key=lambda d: d.id)
    assert [d.id for d in kept] == [d.id for d in docs if 100 <= d.token_count <= 3000]


def test_subject_distribution_percentages():
    docs = [make_doc(i, subject="biology") for i in range(3)] + [make_doc(3, subject="history")]
    dist = subject_distribution(docs)
    assert dist["biology"].count == 3 and dist["biology"].percentage == 75.0
    assert dist["history"].count == 1 and dist["history"].percentage == 25.0


def test_subject_distribution_empty():
    assert subject_distribution([]) == {}


def test_subject_distribution_matches_groupby_oracle():
    from quizforge.model import Subject

    rng = random.Random(5)
    slugs = ["biology", "history", "chemistry", "geography", "philosophy"]
    base = make_doc(0)
    docs = [
        base.model_copy(update={"id": f"doc-{i:05d}", "subject": Subject(slug=rng.choice(slugs))})
        for i in range(8260)
    ]
    dist = subject_distribution(docs)
    oracle = {}
    for doc in docs:
        oracle[str(doc.subject)] = oracle.get(str(doc.subject), 0) + 1
    assert {k: v.count for k, v in dist.items()} == oracle
    assert sum(v.count for v in dist.values()) == 8260
    drift = abs(sum(round(v.percentage, 1) for v in dist.values()) - 100.0)
    assert drift <= 0.1 + 1e-9  # epsilon for binary float representation


def test_token_histogram_single_doc():
    docs = _docs_with_counts([150])
    buckets = token_histogram(docs, 100)
    assert [(b.lo, b.hi, b.count) for b in buckets] == [(0, 100, 0), (100, 200, 1)]


def test_token_histogram_empty_corpus():
    assert token_histogram([], 100) == []


def test_token_histogram_matches_recount_oracle():
    rng = random.Random(9)
    counts = [rng.randrange(0, 1200) for _ in range(300)]
    buckets = token_histogram(_docs_with_counts(counts), 100)
    assert sum(b.count for b in buckets) == len(counts)
    for bucket in buckets:
        assert bucket.count == sum(1 for c in counts if bucket.lo <= c < bucket.hi)


def test_build_document_token_count_matches_tokenizer():
    raw = RawRecord(
        source_url="https://x/1",
        subject_hint="Kimya",
        raw_text="Atomlar maddenin yapı taşlarıdır ve çekirdek ile elektronlardan oluşur.",
    )
    doc = build_document(raw)
    assert doc.token_count == token_count(doc.body)
    assert str(doc.subject) == "chemistry"
    assert build_document(raw) == doc  # content-hash id is stable


def test_ingest_reports_reasons_and_keeps_order(fixture_corpus):
    raw_path, corpus_path, docs = fixture_corpus
    assert len(docs) == 10
    assert all(doc.token_count >= 20 for doc in docs)
    short = RawRecord(source_url="u1", raw_text="çok kısa metin")
    empty = RawRecord(source_url="u2", raw_text="https://sadece.link")
    result = ingest([short, empty], FilterConfig(min_tokens=20, max_tokens=100))
    assert [r.reason for r in result.rejected] == [
        FilterReason.TOO_SHORT,
        FilterReason.EMPTY_AFTER_CLEANING,
    ]
