import numpy as np
import pytest

from xsumforge.aligner import AlignConfig, align_all, align_language_pair
from xsumforge.embedding_store import EmbeddingStore, SummaryRecord, similarity


def unit(values):
    v = np.asarray(values, dtype=np.float64)
    return (v / np.linalg.norm(v)).astype(np.float32)


def make_store(lang_vectors, dim):
    recs = [
        SummaryRecord(doc_id, lang, np.asarray(vec, dtype=np.float32))
        for lang, items in lang_vectors.items()
        for doc_id, vec in items
    ]
    return EmbeddingStore.from_records(recs, dim)


def brute_force_pairs(store, lang_a, lang_b, tau):
    """Independent oracle: enumerate all cross pairs, check mutual-NN and
    threshold directly from the similarity matrix."""
    ids_a = store.ids(lang_a)
    ids_b = store.ids(lang_b)
    sims = {
        (x, y): similarity(store.vector(x), store.vector(y)) for x in ids_a for y in ids_b
    }
    out = set()
    for x in ids_a:
        for y in ids_b:
            s = sims[(x, y)]
            if s < tau:
                continue
            # x's best in lang_b: max sim, smallest id on ties
            best_y = min(ids_b, key=lambda c: (-sims[(x, c)], c))
            best_x = min(ids_a, key=lambda c: (-sims[(c, y)], c))
            if best_y == y and best_x == x:
                out.add((x, y))
    return out


def test_identical_singletons_pair():
    store = make_store({"en": [("a1", unit([1, 0]))], "ru": [("b1", unit([1, 0]))]}, 2)
    pairs = align_language_pair(store, "en", "ru", AlignConfig())
    assert len(pairs) == 1
    assert (pairs[0].a_id, pairs[0].b_id) == ("a1", "b1")
    assert pairs[0].similarity == pytest.approx(1.0, abs=1e-6)
    assert pairs[0].kind == "direct"


def test_mutuality_excludes_one_sided_match():
    # NN of b1 is a2 (0.96 > 0.8 to a1... actually a1 gives 0.8), NN of a2 is b1
    store = make_store(
        {
            "en": [("a1", unit([1, 0])), ("a2", unit([0.6, 0.8]))],
            "ru": [("b1", unit([0.8, 0.6]))],
        },
        2,
    )
    pairs = align_language_pair(store, "en", "ru", AlignConfig())
    assert [(p.a_id, p.b_id) for p in pairs] == [("a2", "b1")]
    assert pairs[0].similarity == pytest.approx(0.96, abs=1e-6)


def test_threshold_blocks_low_similarity_mutual_pair():
    store = make_store(
        {"en": [("a1", unit([1.0, 0.0]))], "ru": [("b1", unit([0.70, 0.7141]))]}, 2
    )
    sim = similarity(store.vector("a1"), store.vector("b1"))
    assert sim < 0.7437
    assert align_language_pair(store, "en", "ru", AlignConfig()) == []
    # same geometry passes once tau drops below the similarity
    assert len(align_language_pair(store, "en", "ru", AlignConfig(tau=0.5))) == 1


def test_empty_language_yields_empty():
    store = make_store({"en": [("a1", unit([1, 0]))]}, 2)
    assert align_language_pair(store, "en", "ru", AlignConfig()) == []


def test_single_language_align_all_empty():
    store = make_store({"en": [("a1", unit([1, 0]))]}, 2)
    assert align_all(store, ["en"], AlignConfig()) == []


def test_three_identical_languages_give_three_pairs():
    v = unit([0.3, 0.7, 0.2])
    store = make_store(
        {"bn": [("b1", v)], "en": [("e1", v.copy())], "ru": [("r1", v.copy())]}, 3
    )
    pairs = align_all(store, ["en", "bn", "ru"], AlignConfig())
    assert {(p.lang_a, p.lang_b) for p in pairs} == {("bn", "en"), ("bn", "ru"), ("en", "ru")}
    assert len(pairs) == 3


def test_matches_brute_force_oracle_random():
    rng = np.random.default_rng(21)
    for trial in range(10):
        na, nb = rng.integers(1, 30), rng.integers(1, 30)
        a = [(f"a{i:02d}", None) for i in range(na)]
        b = [(f"b{i:02d}", None) for i in range(nb)]
        mat = rng.standard_normal((na + nb, 8))
        mat /= np.linalg.norm(mat, axis=1, keepdims=True)
        mat = mat.astype(np.float32)
        a = [(f"a{i:02d}", mat[i]) for i in range(na)]
        b = [(f"b{i:02d}", mat[na + i]) for i in range(nb)]
        store = make_store({"en": a, "ru": b}, 8)
        tau = float(rng.uniform(0.2, 0.9))
        got = {(p.a_id, p.b_id) for p in align_language_pair(store, "en", "ru", AlignConfig(tau=tau))}
        assert got == brute_force_pairs(store, "en", "ru", tau), f"trial {trial}, tau {tau}"


def test_monotone_in_tau():
    rng = np.random.default_rng(22)
    mat = rng.standard_normal((40, 8))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    mat = mat.astype(np.float32)
    store = make_store(
        {
            "en": [(f"a{i:02d}", mat[i]) for i in range(20)],
            "ru": [(f"b{i:02d}", mat[20 + i]) for i in range(20)],
        },
        8,
    )
    lo = {(p.a_id, p.b_id) for p in align_language_pair(store, "en", "ru", AlignConfig(tau=0.3))}
    hi = {(p.a_id, p.b_id) for p in align_language_pair(store, "en", "ru", AlignConfig(tau=0.6))}
    assert hi <= lo


def test_degree_bound_within_language_pair():
    rng = np.random.default_rng(23)
    mat = rng.standard_normal((60, 6))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    mat = mat.astype(np.float32)
    store = make_store(
        {
            "en": [(f"a{i:02d}", mat[i]) for i in range(30)],
            "ru": [(f"b{i:02d}", mat[30 + i]) for i in range(30)],
        },
        6,
    )
    pairs = align_language_pair(store, "en", "ru", AlignConfig(tau=0.1))
    a_side = [p.a_id for p in pairs]
    b_side = [p.b_id for p in pairs]
    assert len(a_side) == len(set(a_side))
    assert len(b_side) == len(set(b_side))
    assert a_side == sorted(a_side)


def test_config_validation():
    with pytest.raises(ValueError):
        AlignConfig(tau=0.0)
    with pytest.raises(ValueError):
        AlignConfig(tau=1.0)
