import json
import random

import pytest

from xsumforge.corpus_io import (
    CorpusFormatError,
    Document,
    DuplicateIdError,
    MatchedPair,
    UnresolvedIdError,
    atomic_write,
    iter_corpus,
    load_corpus,
    make_pair,
    normalize_lang,
    read_pairs,
    write_corpus,
    write_pairs,
)


def test_normalize_lang_basic():
    assert normalize_lang("EN") == "en"
    assert normalize_lang("zh-CN") == "zh-cn"
    assert normalize_lang("pt-br") == "pt-br"


def test_normalize_lang_idempotent_random():
    rng = random.Random(7)
    alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-"
    for _ in range(200):
        raw = "".join(rng.choice(alphabet) for _ in range(rng.randint(2, 15)))
        once = normalize_lang(raw)
        assert normalize_lang(once) == once


@pytest.mark.parametrize("bad", ["", "e", "a" * 16, "en_US", "fr!", "日本語", " "])
def test_normalize_lang_rejects(bad):
    with pytest.raises(ValueError):
        normalize_lang(bad)


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def test_load_corpus_roundtrip(tmp_path):
    docs = [
        Document("d1", "en", "some text", "a summary"),
        Document("d2", "ru", "", "кратко"),
        Document("d3", "en", "more", "another"),
    ]
    p = tmp_path / "corpus.jsonl"
    write_corpus(docs, p)
    corpus = load_corpus(p)
    assert corpus.documents == docs
    assert corpus.manifest.languages == ["en", "ru"]
    assert corpus.manifest.counts == {"en": 2, "ru": 1}
    assert corpus.manifest.total == 3


def test_iter_corpus_normalizes_lang(tmp_path):
    p = tmp_path / "c.jsonl"
    _write_lines(p, [json.dumps({"id": "x", "lang": "EN", "text": "t", "summary": "s"})])
    (doc,) = list(iter_corpus(p))
    assert doc.lang == "en"


def test_iter_corpus_reports_line_number(tmp_path):
    p = tmp_path / "c.jsonl"
    _write_lines(
        p,
        [
            json.dumps({"id": "a", "lang": "en", "text": "t", "summary": "s"}),
            "not json",
        ],
    )
    with pytest.raises(CorpusFormatError) as exc_info:
        list(iter_corpus(p))
    assert exc_info.value.line_no == 2
    assert "line 2" in str(exc_info.value)


def test_iter_corpus_rejects_empty_summary(tmp_path):
    p = tmp_path / "c.jsonl"
    _write_lines(p, [json.dumps({"id": "a", "lang": "en", "text": "t", "summary": ""})])
    with pytest.raises(CorpusFormatError, match="empty summary"):
        list(iter_corpus(p))


def test_iter_corpus_allows_empty_text(tmp_path):
    p = tmp_path / "c.jsonl"
    _write_lines(p, [json.dumps({"id": "a", "lang": "en", "text": "", "summary": "s"})])
    (doc,) = list(iter_corpus(p))
    assert doc.text == ""


def test_iter_corpus_missing_field(tmp_path):
    p = tmp_path / "c.jsonl"
    _write_lines(p, [json.dumps({"id": "a", "lang": "en", "text": "t"})])
    with pytest.raises(CorpusFormatError, match="summary"):
        list(iter_corpus(p))


def test_iter_corpus_duplicate_id_names_it(tmp_path):
    p = tmp_path / "c.jsonl"
    rec = {"id": "dup-1", "lang": "en", "text": "t", "summary": "s"}
    _write_lines(p, [json.dumps(rec), json.dumps(rec)])
    with pytest.raises(DuplicateIdError, match="dup-1"):
        list(iter_corpus(p))


def test_make_pair_canonical_orientation():
    p = make_pair("r9", "ru", "e1", "en", 0.9, "direct")
    assert (p.lang_a, p.lang_b) == ("en", "ru")
    assert (p.a_id, p.b_id) == ("e1", "r9")
    q = make_pair("e1", "en", "r9", "ru", 0.9, "direct")
    assert p == q


def test_make_pair_rejects_same_language():
    with pytest.raises(ValueError):
        make_pair("a", "en", "b", "en", 0.9, "direct")


def test_make_pair_rejects_unknown_kind():
    with pytest.raises(ValueError):
        make_pair("a", "en", "b", "ru", 0.9, "mutual")


def test_write_pairs_sorted_and_six_decimals(tmp_path):
    pairs = [
        make_pair("e2", "en", "r1", "ru", 0.75, "direct"),
        make_pair("e1", "en", "r2", "ru", 0.8123456789, "induced"),
        make_pair("b1", "bn", "e1", "en", 1.0, "direct"),
    ]
    p = tmp_path / "pairs.jsonl"
    write_pairs(pairs, p)
    lines = p.read_text(encoding="utf-8").splitlines()
    assert [json.loads(l)["lang_a"] for l in lines] == ["bn", "en", "en"]
    assert [json.loads(l)["a_id"] for l in lines] == ["b1", "e1", "e2"]
    assert '"similarity":0.812346' in lines[1]
    assert '"similarity":1.000000' in lines[0]
    back = read_pairs(p)
    assert [(q.a_id, q.b_id) for q in back] == [("b1", "e1"), ("e1", "r2"), ("e2", "r1")]
    assert back[1].similarity == pytest.approx(0.812346, abs=1e-9)


def test_write_pairs_byte_identical_rewrite(tmp_path):
    rng = random.Random(3)
    pairs = [
        make_pair(f"e{i}", "en", f"r{i}", "ru", rng.uniform(0.6, 1.0), "direct")
        for i in range(50)
    ]
    p1 = tmp_path / "a.jsonl"
    p2 = tmp_path / "b.jsonl"
    write_pairs(pairs, p1)
    write_pairs(read_pairs(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_write_pairs_validates_known_ids(tmp_path):
    pairs = [make_pair("e1", "en", "r1", "ru", 0.9, "direct")]
    with pytest.raises(UnresolvedIdError, match="r1"):
        write_pairs(pairs, tmp_path / "p.jsonl", known_ids={"e1"})
    write_pairs(pairs, tmp_path / "p.jsonl", known_ids={"e1", "r1"})


def test_atomic_write_leaves_no_temp_on_error(tmp_path):
    target = tmp_path / "out.txt"
    with pytest.raises(RuntimeError):
        with atomic_write(target) as fh:
            fh.write("partial")
            raise RuntimeError("boom")
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_atomic_write_replaces_existing(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    with atomic_write(target) as fh:
        fh.write("new")
    assert target.read_text() == "new"
