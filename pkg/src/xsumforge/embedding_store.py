"""Unit-norm summary embeddings with exact nearest-neighbor search.

Two implementations answer every query: a scalar brute-force oracle and a
blocked matrix kernel. They must pick identical neighbor ids, so the kernel
re-scores anything near the row maximum with the same canonical float32
accumulation the oracle uses. Approximate indexes are out of scope; the
corpus sizes here allow exact search and mutual-NN filtering depends on it.

Vector file layout (little-endian): magic "XEMB", u32 version, u32 dim,
u32 count, then per record a u16 id length, the id's UTF-8 bytes, and
dim float32 values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .corpus_io import Document, atomic_write, normalize_lang

XEMB_MAGIC = b"XEMB"
XEMB_VERSION = 1

# |L2 - 1| within this is a rounding artifact of float32 export: renormalize.
# Anything further off means the upstream encoder broke its contract: reject.
NORM_TOL = 1e-3

# Blocked search re-checks every candidate within this of the row max using
# canonical accumulation, so BLAS reduction-order drift cannot flip an argmax.
_REFINE_MARGIN = 1e-4

_BLOCK = 512


class VectorFormatError(ValueError):
    pass


class NormError(ValueError):
    pass


@dataclass(frozen=True)
class SummaryRecord:
    doc_id: str
    lang: str
    embedding: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, SummaryRecord):
            return NotImplemented
        return (
            self.doc_id == other.doc_id
            and self.lang == other.lang
            and np.array_equal(self.embedding, other.embedding)
        )

    def __hash__(self):
        return hash((self.doc_id, self.lang))


@dataclass(frozen=True)
class NearestNeighbor:
    query_id: str
    neighbor_id: str
    similarity: float


def similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Canonical inner product: float32 multiply, sequential accumulation
    in index order. Every threshold decision in the pipeline routes through
    this exact reduction so results do not depend on BLAS internals.
    """
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.add.accumulate(a * b)[-1])


def normalize_vector(values: np.ndarray, doc_id: str = "?") -> np.ndarray:
    """Validate and renormalize one embedding at ingest.

    Norm is measured in float64; vectors within NORM_TOL of unit length are
    rescaled exactly to unit norm and stored as float32.
    """
    vec = np.asarray(values, dtype=np.float32)
    if vec.ndim != 1:
        raise VectorFormatError(f"embedding for {doc_id!r} must be 1-d, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise NormError(f"embedding for {doc_id!r} has non-finite entries")
    norm = float(np.linalg.norm(vec.astype(np.float64)))
    if abs(norm - 1.0) > NORM_TOL:
        raise NormError(f"embedding for {doc_id!r} has norm {norm:.6f}, outside 1 ± {NORM_TOL}")
    return (vec.astype(np.float64) / norm).astype(np.float32)


def write_xemb(records: Iterable[tuple[str, np.ndarray]], path: str | Path, dim: int) -> None:
    items = list(records)
    with atomic_write(path, "wb") as fh:
        fh.write(XEMB_MAGIC)
        fh.write(struct.pack("<III", XEMB_VERSION, dim, len(items)))
        for doc_id, vec in items:
            raw = doc_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise VectorFormatError(f"id too long: {doc_id[:32]!r}...")
            arr = np.asarray(vec, dtype=np.float32)
            if arr.shape != (dim,):
                raise VectorFormatError(
                    f"embedding for {doc_id!r} has dimension {arr.shape}, expected ({dim},)"
                )
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(arr.astype("<f4").tobytes())


def read_xemb(path: str | Path) -> tuple[int, list[tuple[str, np.ndarray]]]:
    """Read a vector file; returns (dimension, [(id, float32 vector), ...])."""
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != XEMB_MAGIC:
        raise VectorFormatError(f"{path}: not a vector file (bad magic)")
    version, dim, count = struct.unpack_from("<III", data, 4)
    if version != XEMB_VERSION:
        raise VectorFormatError(f"{path}: unsupported version {version}")
    offset = 16
    records: list[tuple[str, np.ndarray]] = []
    vec_bytes = 4 * dim
    for i in range(count):
        if offset + 2 > len(data):
            raise VectorFormatError(f"{path}: truncated at record {i}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(data):
            raise VectorFormatError(f"{path}: truncated at record {i}")
        doc_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(np.float32)
        offset += vec_bytes
        records.append((doc_id, vec))
    if offset != len(data):
        raise VectorFormatError(f"{path}: {len(data) - offset} trailing bytes")
    return dim, records


class EmbeddingStore:
    """Immutable per-language embedding matrices with exact NN queries."""

    def __init__(self, dim: int):
        self.dim = dim
        self._ids: dict[str, list[str]] = {}
        self._matrix: dict[str, np.ndarray] = {}
        self._lang_of: dict[str, str] = {}
        self._row_of: dict[str, int] = {}

    @classmethod
    def from_records(cls, records: Iterable[SummaryRecord], dim: int) -> "EmbeddingStore":
        store = cls(dim)
        by_lang: dict[str, list[tuple[str, np.ndarray]]] = {}
        for rec in records:
            if rec.doc_id in store._lang_of:
                raise ValueError(f"duplicate embedding id {rec.doc_id!r}")
            if rec.embedding.shape != (dim,):
                raise VectorFormatError(
                    f"embedding for {rec.doc_id!r} has dimension "
                    f"{rec.embedding.shape[0] if rec.embedding.ndim == 1 else rec.embedding.shape},"
                    f" expected {dim}"
                )
            lang = normalize_lang(rec.lang)
            store._lang_of[rec.doc_id] = lang
            by_lang.setdefault(lang, []).append((rec.doc_id, normalize_vector(rec.embedding, rec.doc_id)))
        for lang, items in by_lang.items():
            items.sort(key=lambda t: t[0])
            store._ids[lang] = [doc_id for doc_id, _ in items]
            store._matrix[lang] = (
                np.stack([vec for _, vec in items]) if items else np.zeros((0, dim), np.float32)
            )
            for row, (doc_id, _) in enumerate(items):
                store._row_of[doc_id] = row
        return store

    @property
    def languages(self) -> list[str]:
        return sorted(self._ids)

    def ids(self, lang: str) -> list[str]:
        return list(self._ids.get(lang, []))

    def size(self, lang: str | None = None) -> int:
        if lang is None:
            return len(self._lang_of)
        return len(self._ids.get(lang, []))

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._lang_of

    def lang_of(self, doc_id: str) -> str:
        if doc_id not in self._lang_of:
            raise KeyError(f"unknown document id {doc_id!r}")
        return self._lang_of[doc_id]

    def vector(self, doc_id: str) -> np.ndarray:
        lang = self.lang_of(doc_id)
        return self._matrix[lang][self._row_of[doc_id]]

    def records(self) -> Iterator[SummaryRecord]:
        for lang in self.languages:
            for doc_id in self._ids[lang]:
                yield SummaryRecord(doc_id, lang, self._matrix[lang][self._row_of[doc_id]])

    def pair_similarity(self, id_a: str, id_b: str) -> float:
        return similarity(self.vector(id_a), self.vector(id_b))

    def nearest_in_language(self, query_id: str, target_lang: str) -> NearestNeighbor | None:
        """Brute-force oracle: scan candidates in id order, keep the strictly
        best, so equal similarities resolve to the smallest doc_id.
        """
        query_lang = self.lang_of(query_id)
        target_lang = normalize_lang(target_lang)
        if target_lang == query_lang:
            raise ValueError(f"target language equals query language {query_lang!r}")
        ids = self._ids.get(target_lang)
        if not ids:
            return None
        q = self.vector(query_id)
        matrix = self._matrix[target_lang]
        best_row = 0
        best_sim = similarity(q, matrix[0])
        for row in range(1, len(ids)):
            sim = similarity(q, matrix[row])
            if sim > best_sim:
                best_sim = sim
                best_row = row
        return NearestNeighbor(query_id, ids[best_row], best_sim)

    def all_nearest(
        self, lang_a: str, lang_b: str
    ) -> tuple[dict[str, NearestNeighbor | None], dict[str, NearestNeighbor | None]]:
        """Nearest neighbors in both directions between two languages.

        Blocked float32 matmul proposes candidates; every candidate within
        _REFINE_MARGIN of a row's max is re-scored canonically, so the
        returned ids and similarities match per-query oracle calls exactly.
        """
        lang_a = normalize_lang(lang_a)
        lang_b = normalize_lang(lang_b)
        if lang_a == lang_b:
            raise ValueError(f"language pair must differ, got {lang_a!r} twice")
        return (
            self._nearest_direction(lang_a, lang_b),
            self._nearest_direction(lang_b, lang_a),
        )

    def _nearest_direction(self, src: str, dst: str) -> dict[str, NearestNeighbor | None]:
        src_ids = self._ids.get(src, [])
        dst_ids = self._ids.get(dst, [])
        if not src_ids:
            return {}
        if not dst_ids:
            return {doc_id: None for doc_id in src_ids}
        src_mat = self._matrix[src]
        dst_mat = self._matrix[dst]
        out: dict[str, NearestNeighbor | None] = {}
        for start in range(0, len(src_ids), _BLOCK):
            stop = min(start + _BLOCK, len(src_ids))
            scores = src_mat[start:stop] @ dst_mat.T
            row_max = scores.max(axis=1)
            for local, row_scores in enumerate(scores):
                query_id = src_ids[start + local]
                # candidate rows come out ascending, i.e. smallest id first
                cand = np.nonzero(row_scores >= row_max[local] - _REFINE_MARGIN)[0]
                q = src_mat[start + local]
                best_row = int(cand[0])
                best_sim = similarity(q, dst_mat[best_row])
                for row in cand[1:]:
                    sim = similarity(q, dst_mat[int(row)])
                    if sim > best_sim:
                        best_sim = sim
                        best_row = int(row)
                out[query_id] = NearestNeighbor(query_id, dst_ids[best_row], best_sim)
        return out


def import_embeddings(corpus: Iterable[Document], vectors_path: str | Path) -> EmbeddingStore:
    """Join corpus documents with their vectors; both sides must cover each
    other exactly (a vector without a document or a document without a
    vector is an error).
    """
    docs = list(corpus)
    dim, raw = read_xemb(vectors_path)
    lang_by_id = {d.id: d.lang for d in docs}
    vec_ids = set()
    records = []
    for doc_id, vec in raw:
        if doc_id in vec_ids:
            raise ValueError(f"duplicate embedding id {doc_id!r}")
        vec_ids.add(doc_id)
        if doc_id not in lang_by_id:
            raise ValueError(f"vector id {doc_id!r} absent from corpus")
        records.append(SummaryRecord(doc_id, lang_by_id[doc_id], vec))
    missing = [d.id for d in docs if d.id not in vec_ids]
    if missing:
        raise ValueError(
            f"{len(missing)} documents lack vectors, first: {sorted(missing)[:5]}"
        )
    return EmbeddingStore.from_records(records, dim)
