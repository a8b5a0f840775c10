"""Bundled synthetic corpus generator.

Builds a small three-language corpus with controlled geometry so every
pipeline stage has real work to do: story clusters whose members sit close
enough for direct pairs, a slice of clusters with one member pushed into
the induced-pair band, within-language near-duplicates for dedup, and
singleton stories that never pair. Text is generated from per-language word
pools in three different scripts so the language identifier separates them.

Everything is driven by one seed and a fixed draw order; the same seed
always produces byte-identical files.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus_io import Document, write_corpus, write_jsonl
from .embedding_store import write_xemb

DIM = 32
LANGS = ("bn", "en", "ru")

_WORDS = {
    "en": (
        "storm flood market village council river bridge harvest road school "
        "minister election factory strike rescue border crowd festival power "
        "water train accident doctor hospital farmer protest court ruling tax"
    ).split(),
    "ru": (
        "буря наводнение рынок деревня совет река мост урожай дорога школа "
        "министр выборы завод забастовка спасение граница толпа праздник ток "
        "вода поезд авария врач больница фермер протест суд решение налог"
    ).split(),
    "bn": (
        "ঝড় বন্যা বাজার গ্রাম পরিষদ নদী সেতু ফসল রাস্তা বিদ্যালয় "
        "মন্ত্রী নির্বাচন কারখানা ধর্মঘট উদ্ধার সীমান্ত ভিড় উৎসব বিদ্যুৎ "
        "পানি ট্রেন দুর্ঘটনা চিকিৎসক হাসপাতাল কৃষক প্রতিবাদ আদালত রায় কর"
    ).split(),
}

# cluster geometry (radians from the cluster base direction)
_TIGHT_MAX_ANGLE = 0.22  # pairwise sims stay well above the direct threshold
_INDUCED_NEAR = 0.35  # cos 0.35 ~ 0.939: direct edge to the base member
_INDUCED_FAR = 0.76  # cos 0.76 ~ 0.725: lands between tau' and tau
_DUP_ANGLE = 0.08  # cos 0.08 ~ 0.997: above the dedup threshold
# bases at angle >= acos(0.35) ~ 1.21 rad; tight members stray <= 0.22, so
# cross-cluster angles stay >= 0.77 rad (cos ~ 0.72, under the direct cutoff)
_BASE_MAX_COS = 0.35


@dataclass
class SynthResult:
    corpus_path: Path
    vectors_path: Path
    references_path: Path
    predictions_path: Path
    ref_vectors_path: Path
    pred_vectors_path: Path
    n_documents: int


def _unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(DIM)
    return v / np.linalg.norm(v)


def _orthonormal_to(base: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(DIM)
    v -= (v @ base) * base
    return v / np.linalg.norm(v)


def _rotate(base: np.ndarray, direction: np.ndarray, angle: float) -> np.ndarray:
    return math.cos(angle) * base + math.sin(angle) * direction


def _sentence(pyrng: random.Random, lang: str, n_words: int) -> str:
    return " ".join(pyrng.choice(_WORDS[lang]) for _ in range(n_words))


def generate(out_dir: str | Path, seed: int = 0, n_clusters: int = 60) -> SynthResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    pyrng = random.Random(seed)

    bases: list[np.ndarray] = []
    while len(bases) < n_clusters:
        cand = _unit(rng)
        if all(abs(float(cand @ b)) < _BASE_MAX_COS for b in bases):
            bases.append(cand)

    docs: list[Document] = []
    vectors: dict[str, np.ndarray] = {}

    def add_doc(doc_id: str, lang: str, vec: np.ndarray) -> None:
        summary = _sentence(pyrng, lang, pyrng.randint(5, 10))
        text = _sentence(pyrng, lang, pyrng.randint(15, 40))
        docs.append(Document(doc_id, lang, text, summary))
        vectors[doc_id] = (vec / np.linalg.norm(vec)).astype(np.float32)

    for k, base in enumerate(bases):
        roll = pyrng.random()
        if roll < 0.15:
            # singleton: one language, never pairs
            lang = pyrng.choice(LANGS)
            add_doc(f"{lang}-{k:03d}", lang, base)
        elif roll < 0.30:
            # induced triangle: bn and en sit close (direct edges through bn),
            # ru is pushed into the band below tau but above tau'
            plane = _orthonormal_to(base, rng)
            add_doc(f"bn-{k:03d}", "bn", base)
            add_doc(f"en-{k:03d}", "en", _rotate(base, plane, _INDUCED_NEAR))
            add_doc(f"ru-{k:03d}", "ru", _rotate(base, plane, _INDUCED_FAR))
        else:
            # tight cluster over 2 or 3 languages: all pairs direct
            langs = list(LANGS) if pyrng.random() < 0.6 else pyrng.sample(LANGS, 2)
            members = []
            for lang in langs:
                angle = pyrng.uniform(0.0, _TIGHT_MAX_ANGLE)
                vec = _rotate(base, _orthonormal_to(base, rng), angle)
                add_doc(f"{lang}-{k:03d}", lang, vec)
                members.append((lang, vec))
            if pyrng.random() < 0.25:
                # near-duplicate of one member, same language
                lang, vec = members[pyrng.randrange(len(members))]
                dup = _rotate(vec, _orthonormal_to(vec, rng), _DUP_ANGLE)
                add_doc(f"{lang}-{k:03d}-d", lang, dup)

    docs.sort(key=lambda d: d.id)
    corpus_path = out_dir / "corpus.jsonl"
    write_corpus(docs, corpus_path)
    vectors_path = out_dir / "vectors.xemb"
    write_xemb(sorted(vectors.items()), vectors_path, dim=DIM)

    # evaluation fixtures: a reference per document; predictions are
    # perturbed copies, a slice of them in the wrong language entirely
    references = []
    predictions = []
    ref_vecs: dict[str, np.ndarray] = {}
    pred_vecs: dict[str, np.ndarray] = {}
    for doc in docs:
        references.append({"id": doc.id, "lang": doc.lang, "text": doc.summary})
        ref_vecs[doc.id] = vectors[doc.id]
        base_vec = vectors[doc.id].astype(np.float64)
        if pyrng.random() < 0.15:
            # generator slipped into another language
            other = pyrng.choice([l for l in LANGS if l != doc.lang])
            pred_text = _sentence(pyrng, other, pyrng.randint(5, 10))
            angle = 0.8
        else:
            words = doc.summary.split()
            if len(words) > 2 and pyrng.random() < 0.7:
                words[pyrng.randrange(len(words))] = pyrng.choice(_WORDS[doc.lang])
            pred_text = " ".join(words)
            angle = pyrng.uniform(0.05, 0.3)
        predictions.append({"id": doc.id, "lang": doc.lang, "text": pred_text})
        pred_vecs[doc.id] = _rotate(
            base_vec, _orthonormal_to(base_vec, rng), angle
        ).astype(np.float32)

    references_path = out_dir / "references.jsonl"
    predictions_path = out_dir / "predictions.jsonl"
    write_jsonl(references, references_path)
    write_jsonl(predictions, predictions_path)
    ref_vectors_path = out_dir / "ref.xemb"
    pred_vectors_path = out_dir / "pred.xemb"
    write_xemb(sorted(ref_vecs.items()), ref_vectors_path, dim=DIM)
    write_xemb(sorted(pred_vecs.items()), pred_vectors_path, dim=DIM)

    return SynthResult(
        corpus_path=corpus_path,
        vectors_path=vectors_path,
        references_path=references_path,
        predictions_path=predictions_path,
        ref_vectors_path=ref_vectors_path,
        pred_vectors_path=pred_vectors_path,
        n_documents=len(docs),
    )
