"""Minimal reader for the corpus JSONL interchange format.

Deliberately reimplemented rather than imported from the dataset toolkit:
the only coupling between the two packages is the files themselves. The
reader enforces just what the bridge needs — four string fields, unique
ids, a sane language code, and a non-empty summary (an empty summary
would embed to a meaningless vector, so it is refused up front).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

_LANG_RE = re.compile(r"^[a-z0-9-]{2,15}$")
_FIELDS = ("id", "lang", "text", "summary")


class CorpusError(Exception):
    """Raised when a corpus file violates the interchange format."""


@dataclass(frozen=True)
class Row:
    id: str
    lang: str
    text: str
    summary: str


def iter_rows(path: str | Path) -> Iterator[Row]:
    """Yield validated rows from a corpus JSONL file.

    Raises CorpusError with the offending line number on the first
    malformed record; callers get either a clean stream or nothing.
    """
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                raise CorpusError(f"{path}:{line_no}: blank line")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{line_no}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}:{line_no}: expected a JSON object")
            for field in _FIELDS:
                if not isinstance(obj.get(field), str):
                    raise CorpusError(
                        f"{path}:{line_no}: missing or non-string field {field!r}"
                    )
            doc_id = obj["id"]
            if not doc_id:
                raise CorpusError(f"{path}:{line_no}: empty id")
            if doc_id in seen:
                raise CorpusError(f"{path}:{line_no}: duplicate id {doc_id!r}")
            seen.add(doc_id)
            lang = obj["lang"].strip().lower()
            if not _LANG_RE.match(lang):
                raise CorpusError(
                    f"{path}:{line_no}: bad language code {obj['lang']!r}"
                )
            if not obj["summary"].strip():
                raise CorpusError(
                    f"{path}:{line_no}: empty summary for id {doc_id!r}; "
                    "refusing to emit a zero vector"
                )
            yield Row(doc_id, lang, obj["text"], obj["summary"])


def read_rows(path: str | Path) -> list[Row]:
    rows = list(iter_rows(path))
    if not rows:
        raise CorpusError(f"{path}: no documents")
    return rows
