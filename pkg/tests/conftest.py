import json
import random
from datetime import datetime, timezone
from pathlib import Path

import pytest
from hypothesis import strategies as st

from quizforge.model import (
    Provenance,
    QuizItem,
    QuizKind,
    QuizOption,
    QuizSet,
    SourceDocument,
    Subject,
)

TR_LETTERS = "abcçdefgğhıijklmnoöprsştuüvyz"

FIXED_INSTANT = datetime(2024, 3, 1, 12, 0, 0, tzinfo=timezone.utc)

FIXED_PROVENANCE = Provenance(
    model_name="test-model",
    endpoint_url="mock://chat",
    temperature=0.7,
    generated_at=FIXED_INSTANT,
)

_SENTENCES = {
    "Biyoloji": [
        "Hücre zarı hücreyi dış ortamdan ayıran seçici geçirgen bir yapıdır.",
        "Mitokondri hücrenin enerji üretim merkezidir ve oksijenli solunum burada gerçekleşir.",
        "Fotosentez bitkilerin güneş enerjisini kimyasal enerjiye dönüştürdüğü süreçtir.",
        "Enzimler biyokimyasal tepkimeleri hızlandıran protein yapılı katalizörlerdir.",
    ],
    "Tarih": [
        "Osmanlı Devleti 1299 yılında Söğüt ve çevresinde kurulmuştur.",
        "İstanbul 1453 yılında Fatih Sultan Mehmet tarafından fethedilmiştir.",
        "Türkiye Cumhuriyeti 29 Ekim 1923 tarihinde ilan edilmiştir.",
        "Tanzimat Fermanı 1839 yılında ilan edilerek yenileşme dönemini başlatmıştır.",
    ],
    "Coğrafya": [
        "Türkiye üç tarafı denizlerle çevrili bir yarımada ülkesidir.",
        "Karadeniz iklimi her mevsim yağışlı ve ılıman bir iklim tipidir.",
        "Akdeniz bölgesinde yazlar sıcak ve kurak kışlar ılık ve yağışlı geçer.",
        "Erozyon toprağın su ve rüzgar etkisiyle taşınması olayıdır.",
    ],
    "Kimya": [
        "Atom maddenin kimyasal özelliklerini taşıyan en küçük yapı taşıdır.",
        "Periyodik tabloda elementler artan atom numarasına göre sıralanır.",
        "Asitler sulu çözeltilerinde hidrojen iyonu veren bileşiklerdir.",
        "Kimyasal tepkimelerde kütle korunur ve atomlar yeniden düzenlenir.",
    ],
    "Felsefe": [
        "Felsefe varlığı bilgiyi ve değerleri akıl yoluyla sorgulayan bir disiplindir.",
        "Sokrates sorgulanmamış bir hayatın yaşamaya değmeyeceğini savunmuştur.",
        "Bilgi felsefesi bilginin kaynağını ve sınırlarını inceler.",
        "Etik insan eylemlerinin iyi ve kötü açısından değerlendirilmesidir.",
    ],
    "Türk Edebiyatı": [
        "Divan edebiyatı Osmanlı döneminde saray çevresinde gelişen edebiyattır.",
        "Halk edebiyatı sözlü gelenek içinde aşıklar tarafından sürdürülmüştür.",
        "Tanzimat edebiyatı Batı etkisindeki Türk edebiyatının ilk dönemidir.",
        "Roman türü Türk edebiyatına Tanzimat döneminde girmiştir.",
    ],
}


def write_fixture_raw(path: Path, n_docs: int = 10) -> None:
    """Raw-record JSONL with markup noise, for intake tests."""
    hints = list(_SENTENCES)
    with path.open("w", encoding="utf-8") as fh:
        for i in range(n_docs):
            hint = hints[i % len(hints)]
            pool = _SENTENCES[hint]
            body = [pool[j % len(pool)] for j in range(i, i + 8)]
            text = (
                f"Konu Anlatımı {i}\n"
                + "\n".join(" ".join(body[k : k + 2]) for k in range(0, 8, 2))
                + "\nMenü 😀\nhttps://kaynak.example/sayfa"
            )
            fh.write(
                json.dumps(
                    {
                        "source_url": f"https://kaynak.example/{i}",
                        "subject_hint": hint,
                        "raw_text": text,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def make_doc(i: int = 0, subject: str = "history", body: str | None = None) -> SourceDocument:
    from quizforge.corpus import token_count

    if body is None:
        pool = _SENTENCES["Tarih"]
        body = " ".join(pool[j % len(pool)] for j in range(i, i + 4))
    return SourceDocument(
        id=f"doc-{i:04d}",
        subject=Subject(slug=subject) if not subject.startswith("other:") else Subject.other(subject[6:]),
        title=f"Başlık {i}",
        body=body,
        source_url=f"https://kaynak.example/{i}",
        token_count=token_count(body),
    )


def random_words(rng: random.Random, n: int, min_len: int = 2, max_len: int = 9) -> list[str]:
    return [
        "".join(rng.choice(TR_LETTERS) for _ in range(rng.randint(min_len, max_len)))
        for _ in range(n)
    ]


def make_mcq_set(
    doc_id: str = "doc-0000",
    n_items: int = 5,
    n_options: int = 5,
    seed: int = 0,
) -> QuizSet:
    rng = random.Random(seed)
    items = []
    for index in range(n_items):
        stem = " ".join(random_words(rng, rng.randint(3, 8))) + " nedir?"
        texts = []
        while len(texts) < n_options:
            word = " ".join(random_words(rng, rng.randint(1, 3)))
            if word not in texts:
                texts.append(word)
        labels = [chr(65 + k) for k in range(n_options)]
        items.append(
            QuizItem(
                item_id=f"{doc_id}#{index}",
                kind=QuizKind.MCQ,
                stem=stem,
                options=tuple(
                    QuizOption(label=label, text=text) for label, text in zip(labels, texts)
                ),
                correct_label=rng.choice(labels),
            )
        )
    return QuizSet(
        doc_id=doc_id, format=QuizKind.MCQ, items=tuple(items), provenance=FIXED_PROVENANCE
    )


def make_saq_set(doc_id: str = "doc-0000", n_items: int = 5, seed: int = 0) -> QuizSet:
    rng = random.Random(seed)
    items = tuple(
        QuizItem(
            item_id=f"{doc_id}#{index}",
            kind=QuizKind.SAQ,
            stem=" ".join(random_words(rng, rng.randint(3, 8))) + " nedir?",
            answer_text=" ".join(random_words(rng, rng.randint(1, 4))),
        )
        for index in range(n_items)
    )
    return QuizSet(
        doc_id=doc_id, format=QuizKind.SAQ, items=tuple(items), provenance=FIXED_PROVENANCE
    )


# ---------------------------------------------------------------------------
# hypothesis strategies


def tr_word(min_size: int = 2, max_size: int = 9) -> st.SearchStrategy[str]:
    return st.text(alphabet=TR_LETTERS, min_size=min_size, max_size=max_size)


def phrase(min_words: int = 1, max_words: int = 6) -> st.SearchStrategy[str]:
    return st.lists(tr_word(), min_size=min_words, max_size=max_words).map(" ".join)


@st.composite
def mcq_items(draw, doc_id: str = "doc-hyp", index: int = 0) -> QuizItem:
    n_options = draw(st.integers(min_value=2, max_value=5))
    texts = draw(
        st.lists(phrase(1, 3), min_size=n_options, max_size=n_options, unique=True)
    )
    labels = [chr(65 + k) for k in range(n_options)]
    return QuizItem(
        item_id=f"{doc_id}#{index}",
        kind=QuizKind.MCQ,
        stem=draw(phrase(2, 8)),
        options=tuple(QuizOption(label=l, text=t) for l, t in zip(labels, texts)),
        correct_label=draw(st.sampled_from(labels)),
    )


@st.composite
def saq_items(draw, doc_id: str = "doc-hyp", index: int = 0) -> QuizItem:
    return QuizItem(
        item_id=f"{doc_id}#{index}",
        kind=QuizKind.SAQ,
        stem=draw(phrase(2, 8)),
        answer_text=draw(phrase(1, 4)),
    )


@st.composite
def quiz_sets(draw, format: QuizKind | None = None) -> QuizSet:
    fmt = format or draw(st.sampled_from([QuizKind.MCQ, QuizKind.SAQ]))
    n = draw(st.integers(min_value=1, max_value=6))
    maker = mcq_items if fmt is QuizKind.MCQ else saq_items
    items = tuple(draw(maker(index=index)) for index in range(n))
    return QuizSet(doc_id="doc-hyp", format=fmt, items=items, provenance=FIXED_PROVENANCE)


@pytest.fixture
def fixture_corpus(tmp_path):
    """(raw_path, corpus_path, docs) for a 10-document fixture."""
    from quizforge.corpus import FilterConfig, ingest
    from quizforge.jsonl import load_jsonl, write_jsonl
    from quizforge.corpus import RawRecord

    raw_path = tmp_path / "raw.jsonl"
    write_fixture_raw(raw_path)
    records = load_jsonl(raw_path, RawRecord)
    result = ingest(records, FilterConfig(min_tokens=20, max_tokens=3000))
    corpus_path = tmp_path / "corpus.jsonl"
    write_jsonl(corpus_path, result.documents)
    return raw_path, corpus_path, list(result.documents)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            if "test_acceptance" in report.nodeid and report.when == "call":
                rows.append((report.nodeid.split("::")[-1], status == "passed"))
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, ok in rows:
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
