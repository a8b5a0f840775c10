"""Sentence-embedding backends and the corpus -> vectors pipeline.

Backends are named by a spec string so new ones can be added without
touching the CLI; "st:<model-name-or-path>" loads a sentence-transformers
model lazily (the package is an optional dependency). Every vector is
re-normalized here regardless of what the model claims, because the
downstream toolkit rejects stores whose rows are not unit length.
"""

from __future__ import annotations

import json
import os
import logging
from pathlib import Path

import numpy as np

from .corpus import read_rows
from .xemb import write_xemb

log = logging.getLogger(__name__)

DEFAULT_MODEL = "st:sentence-transformers/LaBSE"
DEFAULT_BATCH_SIZE = 32


class ModelError(Exception):
    """Raised when a model backend cannot be loaded or misbehaves."""


class SentenceTransformerBackend:
    """Wraps a sentence-transformers model behind a two-method surface."""

    def __init__(self, ref: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError:
            raise ModelError(
                "the sentence-transformers package is not installed; "
                "install the [embed] extra to use st: backends"
            ) from None
        try:
            self._model = SentenceTransformer(ref, device="cpu")
        except Exception as exc:
            raise ModelError(f"cannot load embedding model {ref!r}: {exc}") from None
        self.identifier = f"st:{ref}"

    def encode(self, texts: list[str]) -> np.ndarray:
        vecs = self._model.encode(
            texts,
            batch_size=len(texts),
            convert_to_numpy=True,
            normalize_embeddings=True,
            show_progress_bar=False,
        )
        return np.asarray(vecs, dtype=np.float32)


def load_backend(spec: str):
    if spec.startswith("st:") and len(spec) > 3:
        return SentenceTransformerBackend(spec[3:])
    raise ModelError(
        f"unknown embedding backend {spec!r}; expected st:<model-name-or-path>"
    )


def embed_corpus(
    corpus_path: str | Path,
    out_path: str | Path,
    model_spec: str = DEFAULT_MODEL,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> dict:
    """Embed every summary in the corpus and write an XEMB container.

    Returns a summary dict (records, dim, model) that is also written to
    a ``<out>.meta.json`` sidecar so consumers can tell which model
    produced the vectors.
    """
    if batch_size < 1:
        raise ModelError(f"batch size must be >= 1, got {batch_size}")
    # Validate the corpus before paying for model load; format errors
    # should not require a working model to surface.
    rows = read_rows(corpus_path)
    backend = load_backend(model_spec)

    vectors: list[tuple[str, np.ndarray]] = []
    for start in range(0, len(rows), batch_size):
        chunk = rows[start : start + batch_size]
        arr = backend.encode([row.summary for row in chunk])
        if arr.ndim != 2 or arr.shape[0] != len(chunk):
            raise ModelError(
                f"backend returned shape {arr.shape} for {len(chunk)} texts"
            )
        for row, vec in zip(chunk, arr):
            norm = float(np.linalg.norm(vec.astype(np.float64)))
            if not np.isfinite(norm) or norm == 0.0:
                raise ModelError(
                    f"model produced a zero or non-finite vector for id {row.id!r}"
                )
            vectors.append((row.id, (vec / norm).astype(np.float32)))

    dim = int(vectors[0][1].shape[0])
    write_xemb(vectors, out_path, dim)
    summary = {"records": len(vectors), "dim": dim, "model": backend.identifier}
    _write_sidecar(Path(out_path), summary)
    log.info("embedded %d summaries at dim %d", len(vectors), dim)
    return summary


def _write_sidecar(out_path: Path, summary: dict) -> None:
    sidecar = out_path.with_name(out_path.name + ".meta.json")
    tmp = sidecar.with_name(sidecar.name + ".tmp")
    tmp.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    os.replace(tmp, sidecar)
