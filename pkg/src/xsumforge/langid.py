"""Character n-gram language identification.

A deliberately small stand-in for a real language-ID model so the pipeline
and scorer run with no external downloads: per-language 1/2/3-gram counts
with add-one smoothing, scored by mean log-probability per order and pooled
with a softmax. External classifiers can replace it through the langid
interchange file format.
"""

from __future__ import annotations

import json
import logging
import math
import struct
from pathlib import Path
from typing import Iterable

from .corpus_io import CorpusFormatError, atomic_write, normalize_lang
from .lase import LangIdDistribution

log = logging.getLogger(__name__)

XLID_MAGIC = b"XLID"
XLID_VERSION = 1
ORDERS = (1, 2, 3)


def _grams(text: str, order: int) -> list[str]:
    lowered = text.lower()
    return [lowered[i : i + order] for i in range(len(lowered) - order + 1)]


class LangIdModel:
    """Immutable after training. counts[lang][order] maps gram -> count."""

    def __init__(
        self,
        counts: dict[str, dict[int, dict[str, int]]],
        vocab_sizes: dict[int, int],
    ):
        self.counts = counts
        self.vocab_sizes = vocab_sizes
        self.totals = {
            lang: {order: sum(by_gram.values()) for order, by_gram in per.items()}
            for lang, per in counts.items()
        }

    @property
    def languages(self) -> list[str]:
        return sorted(self.counts)

    def _log_prob(self, lang: str, order: int, gram: str) -> float:
        count = self.counts[lang][order].get(gram, 0)
        denom = self.totals[lang][order] + self.vocab_sizes[order] + 1
        return math.log((count + 1) / denom)

    def classify(self, text: str) -> LangIdDistribution:
        """Softmax over per-language mean n-gram log-probabilities.

        Empty input carries no evidence: uniform distribution, with a
        warning so silent garbage doesn't look like confidence.
        """
        langs = self.languages
        per_order_grams = {order: _grams(text, order) for order in ORDERS}
        total_grams = sum(len(g) for g in per_order_grams.values())
        if total_grams == 0:
            log.warning("classifying empty text: returning uniform distribution")
            uniform = 1.0 / len(langs)
            probs = {lang: uniform for lang in langs}
            probs[langs[-1]] = 1.0 - uniform * (len(langs) - 1)
            return LangIdDistribution(probs)
        scores = {}
        for lang in langs:
            order_means = []
            for order in ORDERS:
                grams = per_order_grams[order]
                if not grams:
                    continue
                s = sum(self._log_prob(lang, order, g) for g in grams)
                order_means.append(s / len(grams))
            scores[lang] = sum(order_means) / len(order_means)
        peak = max(scores.values())
        exps = {lang: math.exp(s - peak) for lang, s in scores.items()}
        z = sum(exps.values())
        return LangIdDistribution({lang: e / z for lang, e in exps.items()})


def train_langid(samples: Iterable[tuple[str, str]]) -> LangIdModel:
    """Count 1-3 grams per language. Every declared language must
    contribute at least one gram, otherwise it could never be predicted."""
    counts: dict[str, dict[int, dict[str, int]]] = {}
    for lang, text in samples:
        lang = normalize_lang(lang)
        per = counts.setdefault(lang, {order: {} for order in ORDERS})
        for order in ORDERS:
            table = per[order]
            for gram in _grams(text, order):
                table[gram] = table.get(gram, 0) + 1
    if not counts:
        raise ValueError("no training samples")
    empty = sorted(lang for lang, per in counts.items() if not per[1])
    if empty:
        raise ValueError(f"languages with no usable text: {empty}")
    vocab_sizes = {
        order: len({g for per in counts.values() for g in per[order]}) for order in ORDERS
    }
    return LangIdModel(counts, vocab_sizes)


def save_model(model: LangIdModel, path: str | Path) -> None:
    """Versioned binary; grams sorted so identical models share bytes."""
    with atomic_write(path, "wb") as fh:
        fh.write(XLID_MAGIC)
        fh.write(struct.pack("<I", XLID_VERSION))
        langs = model.languages
        fh.write(struct.pack("<I", len(langs)))
        for lang in langs:
            raw = lang.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        for order in ORDERS:
            fh.write(struct.pack("<I", model.vocab_sizes[order]))
        for lang in langs:
            for order in ORDERS:
                table = model.counts[lang][order]
                fh.write(struct.pack("<I", len(table)))
                for gram in sorted(table):
                    raw = gram.encode("utf-8")
                    fh.write(struct.pack("<H", len(raw)))
                    fh.write(raw)
                    fh.write(struct.pack("<I", table[gram]))


def load_model(path: str | Path) -> LangIdModel:
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != XLID_MAGIC:
        raise ValueError(f"{path}: not a language-id model file (bad magic)")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != XLID_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    offset = 8
    (n_langs,) = struct.unpack_from("<I", data, offset)
    offset += 4
    langs = []
    for _ in range(n_langs):
        (ln,) = struct.unpack_from("<H", data, offset)
        offset += 2
        langs.append(data[offset : offset + ln].decode("utf-8"))
        offset += ln
    vocab_sizes = {}
    for order in ORDERS:
        (v,) = struct.unpack_from("<I", data, offset)
        offset += 4
        vocab_sizes[order] = v
    counts: dict[str, dict[int, dict[str, int]]] = {}
    for lang in langs:
        per: dict[int, dict[str, int]] = {}
        for order in ORDERS:
            (n_entries,) = struct.unpack_from("<I", data, offset)
            offset += 4
            table = {}
            for _ in range(n_entries):
                (gl,) = struct.unpack_from("<H", data, offset)
                offset += 2
                gram = data[offset : offset + gl].decode("utf-8")
                offset += gl
                (count,) = struct.unpack_from("<I", data, offset)
                offset += 4
                table[gram] = count
            per[order] = table
        counts[lang] = per
    if offset != len(data):
        raise ValueError(f"{path}: {len(data) - offset} trailing bytes")
    return LangIdModel(counts, vocab_sizes)


def write_langid_file(records: Iterable[tuple[str, LangIdDistribution]], path: str | Path) -> None:
    """Interchange JSONL for externally computed distributions."""
    with atomic_write(path) as fh:
        for doc_id, dist in records:
            fh.write(
                json.dumps(
                    {"id": doc_id, "probs": dict(sorted(dist.probs.items()))},
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_langid_file(path: str | Path) -> dict[str, LangIdDistribution]:
    out: dict[str, LangIdDistribution] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", line_no) from exc
            if "id" not in obj or "probs" not in obj:
                raise CorpusFormatError("record needs 'id' and 'probs'", line_no)
            if obj["id"] in out:
                raise CorpusFormatError(f"duplicate id {obj['id']!r}", line_no)
            try:
                dist = LangIdDistribution(
                    {normalize_lang(k): float(v) for k, v in obj["probs"].items()}
                )
            except ValueError as exc:
                raise CorpusFormatError(str(exc), line_no) from exc
            out[obj["id"]] = dist
    return out
