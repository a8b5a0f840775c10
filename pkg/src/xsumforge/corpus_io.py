"""Corpus ingestion and the line-oriented file formats shared by the pipeline.

Every text-bearing artifact is JSONL: one record per line, UTF-8, no BOM.
Writers emit keys in a fixed order and format similarities at six decimal
places so that rewriting an unchanged artifact is byte-identical.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

FORMAT_VERSION = 1

_LANG_RE = re.compile(r"^[a-z0-9-]+$")

PAIR_KINDS = ("direct", "induced")


class CorpusFormatError(ValueError):
    """A corpus or artifact file violates its schema.

    Carries the 1-based line number when the failure is tied to a line.
    """

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class DuplicateIdError(ValueError):
    pass


class UnresolvedIdError(ValueError):
    pass


def normalize_lang(code: str) -> str:
    """Normalize a language tag to lowercase ASCII (e.g. "zh-CN" -> "zh-cn").

    Raises ValueError for tags that are empty, too long/short, or contain
    characters outside [a-z0-9-] after lowercasing. Idempotent.
    """
    if not isinstance(code, str):
        raise ValueError(f"language code must be a string, got {type(code).__name__}")
    norm = code.strip().lower()
    if not 2 <= len(norm) <= 15:
        raise ValueError(f"language code {code!r} must be 2-15 characters")
    if not _LANG_RE.match(norm):
        raise ValueError(f"language code {code!r} contains invalid characters")
    return norm


@dataclass(frozen=True)
class Document:
    """One article with its summary. The summary is the unit of alignment."""

    id: str
    lang: str
    text: str
    summary: str


@dataclass
class CorpusManifest:
    languages: list[str]
    counts: dict[str, int]
    format_version: int = FORMAT_VERSION

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass
class Corpus:
    documents: list[Document]
    manifest: CorpusManifest

    def by_id(self) -> dict[str, Document]:
        return {d.id: d for d in self.documents}


@dataclass(frozen=True)
class MatchedPair:
    """A cross-lingual summary pair.

    Canonically oriented: lang_a < lang_b, and a_id belongs to lang_a.
    Direct pairs come straight from mutual nearest-neighbor alignment;
    induced pairs are recovered through shared graph components.
    """

    a_id: str
    b_id: str
    lang_a: str
    lang_b: str
    similarity: float
    kind: str
    component_id: str | None = field(default=None, compare=False)

    def key(self) -> tuple[str, str]:
        return (self.a_id, self.b_id)


def make_pair(
    id_x: str,
    lang_x: str,
    id_y: str,
    lang_y: str,
    similarity: float,
    kind: str,
    component_id: str | None = None,
) -> MatchedPair:
    """Build a MatchedPair in canonical orientation regardless of input order."""
    if lang_x == lang_y:
        raise ValueError(f"pair endpoints share language {lang_x!r} ({id_x}, {id_y})")
    if kind not in PAIR_KINDS:
        raise ValueError(f"unknown pair kind {kind!r}")
    if lang_x < lang_y:
        return MatchedPair(id_x, id_y, lang_x, lang_y, similarity, kind, component_id)
    return MatchedPair(id_y, id_x, lang_y, lang_x, similarity, kind, component_id)


@contextmanager
def atomic_write(path: str | Path, mode: str = "w"):
    """Write to a temp file in the target directory, then rename over `path`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    encoding = None if "b" in mode else "utf-8"
    newline = None if "b" in mode else "\n"
    try:
        with os.fdopen(fd, mode, encoding=encoding, newline=newline) as fh:
            yield fh
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def iter_corpus(path: str | Path) -> Iterator[Document]:
    """Stream documents from a corpus JSONL file, validating as it goes.

    Each line must be a JSON object with string fields id, lang, text, and
    summary; lang is normalized, summary must be nonempty, id must be unique.
    Raises CorpusFormatError with the offending line number, or
    DuplicateIdError naming the repeated id.
    """
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                raise CorpusFormatError("blank line", line_no)
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", line_no) from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError("record is not a JSON object", line_no)
            for key in ("id", "lang", "text", "summary"):
                if key not in obj:
                    raise CorpusFormatError(f"missing field {key!r}", line_no)
                if not isinstance(obj[key], str):
                    raise CorpusFormatError(f"field {key!r} must be a string", line_no)
            try:
                lang = normalize_lang(obj["lang"])
            except ValueError as exc:
                raise CorpusFormatError(str(exc), line_no) from exc
            if not obj["summary"]:
                raise CorpusFormatError("empty summary", line_no)
            doc_id = obj["id"]
            if not doc_id:
                raise CorpusFormatError("empty id", line_no)
            if doc_id in seen:
                raise DuplicateIdError(f"duplicate document id {doc_id!r}")
            seen.add(doc_id)
            yield Document(id=doc_id, lang=lang, text=obj["text"], summary=obj["summary"])


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus in one streaming pass, aggregating the manifest."""
    documents: list[Document] = []
    counts: dict[str, int] = {}
    for doc in iter_corpus(path):
        documents.append(doc)
        counts[doc.lang] = counts.get(doc.lang, 0) + 1
    manifest = CorpusManifest(languages=sorted(counts), counts=dict(sorted(counts.items())))
    return Corpus(documents=documents, manifest=manifest)


def write_corpus(documents: Iterable[Document], path: str | Path) -> None:
    with atomic_write(path) as fh:
        for doc in documents:
            fh.write(
                json.dumps(
                    {"id": doc.id, "lang": doc.lang, "text": doc.text, "summary": doc.summary},
                    ensure_ascii=False,
                )
                + "\n"
            )


def format_similarity(similarity: float) -> str:
    """Six decimal places: finer than any threshold gap, coarser than noise."""
    if not math.isfinite(similarity):
        raise ValueError(f"similarity must be finite, got {similarity!r}")
    return f"{similarity:.6f}"


def write_pairs(
    pairs: Iterable[MatchedPair],
    path: str | Path,
    known_ids: set[str] | None = None,
) -> None:
    """Write matched pairs as JSONL, sorted by (lang_a, lang_b, a_id).

    When `known_ids` is given, every endpoint must resolve in it.
    """
    ordered = sorted(pairs, key=lambda p: (p.lang_a, p.lang_b, p.a_id, p.b_id))
    if known_ids is not None:
        for p in ordered:
            for endpoint in (p.a_id, p.b_id):
                if endpoint not in known_ids:
                    raise UnresolvedIdError(f"pair references unknown id {endpoint!r}")
    with atomic_write(path) as fh:
        for p in ordered:
            if p.lang_a >= p.lang_b:
                raise ValueError(f"pair ({p.a_id}, {p.b_id}) is not canonically oriented")
            if p.kind not in PAIR_KINDS:
                raise ValueError(f"unknown pair kind {p.kind!r}")
            fh.write(
                "{"
                + f'"a_id":{json.dumps(p.a_id, ensure_ascii=False)}'
                + f',"b_id":{json.dumps(p.b_id, ensure_ascii=False)}'
                + f',"lang_a":{json.dumps(p.lang_a)}'
                + f',"lang_b":{json.dumps(p.lang_b)}'
                + f',"similarity":{format_similarity(p.similarity)}'
                + f',"kind":{json.dumps(p.kind)}'
                + "}\n"
            )


def read_pairs(path: str | Path) -> list[MatchedPair]:
    pairs: list[MatchedPair] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", line_no) from exc
            try:
                pair = MatchedPair(
                    a_id=obj["a_id"],
                    b_id=obj["b_id"],
                    lang_a=obj["lang_a"],
                    lang_b=obj["lang_b"],
                    similarity=float(obj["similarity"]),
                    kind=obj["kind"],
                )
            except KeyError as exc:
                raise CorpusFormatError(f"missing field {exc.args[0]!r}", line_no) from exc
            if pair.kind not in PAIR_KINDS:
                raise CorpusFormatError(f"unknown pair kind {pair.kind!r}", line_no)
            pairs.append(pair)
    return pairs


def write_jsonl(records: Iterable[dict], path: str | Path) -> None:
    """Generic JSONL writer with deterministic key order (insertion order)."""
    with atomic_write(path) as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", line_no) from exc
    return records
