import json

import numpy as np
import pytest

from xsumbridge.corpus import CorpusError
from xsumbridge.embed import ModelError, embed_corpus, load_backend

from xsumforge.corpus_io import load_corpus
from xsumforge.embedding_store import import_embeddings, read_xemb


def write_corpus(path, rows):
    path.write_text(
        "\n".join(json.dumps(r, ensure_ascii=False) for r in rows) + "\n"
    )


SUMMARIES = [
    "the river flooded the northern villages overnight",
    "parliament approved the new budget after a long debate",
    "the railway strike ended with a wage agreement",
]


def rows(summaries=SUMMARIES):
    return [
        {"id": f"en-{i}", "lang": "en", "text": "body", "summary": s}
        for i, s in enumerate(summaries)
    ]


def test_embed_writes_unit_float32(tmp_path, tiny_model_dir):
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, rows())
    out = tmp_path / "vectors.xemb"
    summary = embed_corpus(corpus, out, model_spec=f"st:{tiny_model_dir}")
    assert summary["records"] == 3
    assert summary["dim"] == 32
    dim, raw = read_xemb(out)
    assert dim == 32
    assert [doc_id for doc_id, _ in raw] == ["en-0", "en-1", "en-2"]
    for _, vec in raw:
        assert vec.dtype == np.float32
        assert abs(float(np.linalg.norm(vec)) - 1.0) < 1e-3


def test_output_loads_into_dataset_toolkit(tmp_path, tiny_model_dir):
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, rows())
    out = tmp_path / "vectors.xemb"
    embed_corpus(corpus, out, model_spec=f"st:{tiny_model_dir}")
    docs = load_corpus(corpus).documents
    store = import_embeddings(docs, out)  # raises on any norm violation
    assert store.dim == 32


def test_identical_summaries_near_identical_vectors(tmp_path, tiny_model_dir):
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(
        corpus,
        [
            {"id": "a", "lang": "en", "text": "x", "summary": SUMMARIES[0]},
            {"id": "b", "lang": "en", "text": "y", "summary": SUMMARIES[0]},
            {"id": "c", "lang": "en", "text": "z", "summary": SUMMARIES[1]},
        ],
    )
    out = tmp_path / "vectors.xemb"
    embed_corpus(corpus, out, model_spec=f"st:{tiny_model_dir}")
    _, raw = read_xemb(out)
    vecs = dict(raw)
    assert float(vecs["a"] @ vecs["b"]) > 0.99
    # distinct texts must stay distinguishable from the identical pair
    assert float(vecs["a"] @ vecs["c"]) < float(vecs["a"] @ vecs["b"])


def test_deterministic_output(tmp_path, tiny_model_dir):
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, rows())
    out_a = tmp_path / "a.xemb"
    out_b = tmp_path / "b.xemb"
    embed_corpus(corpus, out_a, model_spec=f"st:{tiny_model_dir}")
    embed_corpus(corpus, out_b, model_spec=f"st:{tiny_model_dir}")
    assert out_a.read_bytes() == out_b.read_bytes()


def test_batching_matches_single_pass(tmp_path, tiny_model_dir):
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, rows(SUMMARIES * 3))  # 9 rows, ids en-0..en-8
    out_a = tmp_path / "a.xemb"
    out_b = tmp_path / "b.xemb"
    embed_corpus(corpus, out_a, model_spec=f"st:{tiny_model_dir}", batch_size=2)
    embed_corpus(corpus, out_b, model_spec=f"st:{tiny_model_dir}", batch_size=64)
    _, raw_a = read_xemb(out_a)
    _, raw_b = read_xemb(out_b)
    for (id_a, vec_a), (id_b, vec_b) in zip(raw_a, raw_b):
        assert id_a == id_b
        np.testing.assert_allclose(vec_a, vec_b, atol=1e-5)


def test_sidecar_records_model(tmp_path, tiny_model_dir):
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, rows())
    out = tmp_path / "vectors.xemb"
    embed_corpus(corpus, out, model_spec=f"st:{tiny_model_dir}")
    meta = json.loads((tmp_path / "vectors.xemb.meta.json").read_text())
    assert meta == {"records": 3, "dim": 32, "model": f"st:{tiny_model_dir}"}


def test_unknown_backend(tmp_path):
    with pytest.raises(ModelError, match="unknown embedding backend"):
        load_backend("bert:whatever")


def test_corpus_errors_surface_before_model_load(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(
        corpus,
        [{"id": "a", "lang": "en", "text": "x", "summary": "  "}],
    )
    # a bogus model spec proves validation does not require a model
    with pytest.raises(CorpusError, match="zero vector"):
        embed_corpus(corpus, tmp_path / "v.xemb", model_spec="st:/nonexistent")


def test_bad_batch_size(tmp_path, tiny_model_dir):
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, rows())
    with pytest.raises(ModelError, match="batch size"):
        embed_corpus(
            corpus, tmp_path / "v.xemb", model_spec=f"st:{tiny_model_dir}", batch_size=0
        )
