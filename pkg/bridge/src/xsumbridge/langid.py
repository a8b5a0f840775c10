"""Language-ID backends and the interchange writer.

Two backends: "fasttext:<path>" wraps a fastText .bin model (lazy import,
optional dependency), and "builtin" is a dependency-free classifier over
Unicode script counts plus high-frequency function words, so the bridge
stays usable where no binary model is available.

Raw classifier labels are normalized to corpus language codes; labels
that cannot be mapped are dropped with a warning and the remaining mass
renormalized, so the emitted distributions always sum to one.
"""

from __future__ import annotations

import json
import os
import logging
import re
from pathlib import Path
from typing import Iterable

from .corpus import read_rows
from .embed import ModelError

log = logging.getLogger(__name__)

DEFAULT_MODEL = "builtin"

_LABEL_RE = re.compile(r"^[a-z0-9-]{2,15}$")
_FT_PREFIX = "__label__"


def normalize_labels(
    labels: Iterable[str], probs: Iterable[float]
) -> tuple[dict[str, float], list[str]]:
    """Map raw labels to corpus codes; returns (distribution, dropped).

    Strips the fastText label prefix, lowercases, and swaps underscores
    for hyphens ("__label__zh_CN" -> "zh-cn"). Anything that still fails
    the code pattern is dropped and reported; the survivors are
    renormalized to sum to one.
    """
    out: dict[str, float] = {}
    dropped: list[str] = []
    for label, p in zip(labels, probs):
        code = label
        if code.startswith(_FT_PREFIX):
            code = code[len(_FT_PREFIX) :]
        code = code.strip().lower().replace("_", "-")
        if not _LABEL_RE.match(code):
            dropped.append(label)
            continue
        out[code] = out.get(code, 0.0) + max(float(p), 0.0)
    total = sum(out.values())
    if total <= 0.0:
        raise ModelError("no usable labels survived normalization")
    return {code: mass / total for code, mass in out.items()}, dropped


class FastTextBackend:
    def __init__(self, path: str):
        try:
            import fasttext
        except ImportError:
            raise ModelError(
                "the fasttext package is not installed; install the "
                "[fasttext] extra or use the builtin backend"
            ) from None
        if not Path(path).is_file():
            raise ModelError(f"fasttext model not found: {path}")
        self._model = fasttext.load_model(path)
        self.identifier = f"fasttext:{path}"

    def classify(self, text: str) -> tuple[dict[str, float], list[str]]:
        # fastText predict() rejects embedded newlines
        labels, probs = self._model.predict(text.replace("\n", " "), k=-1)
        return normalize_labels(labels, probs)


# Script ranges -> the language that script most plausibly indicates.
# Latin is resolved separately via stopwords; CJK is attributed to
# Japanese when any kana is present (Chinese text contains no kana).
_SCRIPTS: tuple[tuple[str, tuple[tuple[int, int], ...]], ...] = (
    ("cyrillic", ((0x0400, 0x04FF),)),
    ("bengali", ((0x0980, 0x09FF),)),
    ("devanagari", ((0x0900, 0x097F),)),
    ("arabic", ((0x0600, 0x06FF), (0x0750, 0x077F))),
    ("cjk", ((0x4E00, 0x9FFF), (0x3400, 0x4DBF), (0xF900, 0xFAFF))),
    ("kana", ((0x3040, 0x309F), (0x30A0, 0x30FF), (0x31F0, 0x31FF))),
    ("hangul", ((0xAC00, 0xD7AF), (0x1100, 0x11FF))),
    ("thai", ((0x0E00, 0x0E7F),)),
    ("greek", ((0x0370, 0x03FF),)),
    ("hebrew", ((0x0590, 0x05FF),)),
)

_SCRIPT_LANG = {
    "cyrillic": "ru",
    "bengali": "bn",
    "devanagari": "hi",
    "arabic": "ar",
    "hangul": "ko",
    "thai": "th",
    "greek": "el",
    "hebrew": "he",
}

# Function words separating the Latin-script languages we claim to know.
_STOPWORDS: dict[str, frozenset[str]] = {
    "en": frozenset(
        "the and of to in is that it for was on are as with his they at "
        "be this have from or had by not but what all were when".split()
    ),
    # "le" (clitic pronoun) is deliberately absent: it collides with the
    # most frequent French word and drags French text into ties
    "es": frozenset(
        "el la los las de que y en un una para con no es por se del al "
        "como pero sus ha este cuando muy sin sobre".split()
    ),
    "fr": frozenset(
        "le la les des une du et en pour que ce il est dans qui pas sur "
        "au avec ne je son plus par mais ses comme".split()
    ),
    "de": frozenset(
        "der die das und ist nicht ein eine mit auf zu den von im sich "
        "des auch es an werden aus er hat dass sie nach wird bei".split()
    ),
    "pt": frozenset(
        "o os as de que e em um uma para com uma por se do da na no mais "
        "dos como mas foi ele das tem seu sua ou quando muito".split()
    ),
    "it": frozenset(
        "il lo la gli le di che e in un una per con non si del alla i "
        "sono da come anche piu questo questa ma hanno essere".split()
    ),
}
_LATIN_LANGS = tuple(sorted(_STOPWORDS))

_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


def _script_of(ch: str) -> str | None:
    cp = ord(ch)
    if cp < 0x0250:
        return "latin" if ch.isalpha() else None
    for name, ranges in _SCRIPTS:
        for lo, hi in ranges:
            if lo <= cp <= hi:
                return name
    return None


class BuiltinClassifier:
    """Script-count classifier with stopword splitting for Latin text.

    Not a serious language identifier; it exists so the pipeline can be
    exercised end to end without downloading a model. Per-script mass is
    the fraction of letters in that script; Latin mass is divided among
    the known Latin languages in proportion to stopword hits (uniformly
    when nothing matches).
    """

    identifier = "builtin-script-stopwords"

    def classify(self, text: str) -> tuple[dict[str, float], list[str]]:
        counts: dict[str, int] = {}
        for ch in text:
            script = _script_of(ch)
            if script is not None:
                counts[script] = counts.get(script, 0) + 1
        if counts.get("kana"):
            # kanji in the presence of kana reads as Japanese
            counts["kana"] += counts.pop("cjk", 0)
        total = sum(counts.values())
        if total == 0:
            uniform = 1.0 / (len(_SCRIPT_LANG) + len(_LATIN_LANGS) + 2)
            probs = {lang: uniform for lang in _SCRIPT_LANG.values()}
            probs.update({lang: uniform for lang in _LATIN_LANGS})
            probs["zh"] = uniform
            probs["ja"] = uniform
            return probs, []

        probs: dict[str, float] = {}
        for script, n in counts.items():
            share = n / total
            if script == "latin":
                for lang, weight in self._latin_split(text).items():
                    probs[lang] = probs.get(lang, 0.0) + share * weight
            elif script == "cjk":
                probs["zh"] = probs.get("zh", 0.0) + share
            elif script == "kana":
                probs["ja"] = probs.get("ja", 0.0) + share
            else:
                lang = _SCRIPT_LANG[script]
                probs[lang] = probs.get(lang, 0.0) + share
        return probs, []

    @staticmethod
    def _latin_split(text: str) -> dict[str, float]:
        tokens = [t.lower() for t in _WORD_RE.findall(text)]
        hits = {
            lang: sum(1 for t in tokens if t in words)
            for lang, words in _STOPWORDS.items()
        }
        total = sum(hits.values())
        if total == 0:
            return {lang: 1.0 / len(_LATIN_LANGS) for lang in _LATIN_LANGS}
        return {lang: n / total for lang, n in hits.items() if n > 0}


def load_langid_backend(spec: str):
    if spec == "builtin":
        return BuiltinClassifier()
    if spec.startswith("fasttext:") and len(spec) > len("fasttext:"):
        return FastTextBackend(spec.split(":", 1)[1])
    raise ModelError(
        f"unknown language-ID backend {spec!r}; expected builtin or fasttext:<path>"
    )


def langid_corpus(
    corpus_path: str | Path,
    out_path: str | Path,
    model_spec: str = DEFAULT_MODEL,
) -> dict:
    """Classify every summary and write the language-ID interchange file.

    One JSON object per line, {"id": ..., "probs": {code: mass}}, in
    corpus order. Returns a summary dict mirrored to a sidecar.
    """
    rows = read_rows(corpus_path)
    backend = load_langid_backend(model_spec)

    records: list[tuple[str, dict[str, float]]] = []
    dropped_all: set[str] = set()
    for row in rows:
        probs, dropped = backend.classify(row.summary)
        dropped_all.update(dropped)
        total = sum(probs.values())
        if abs(total - 1.0) > 1e-6:
            raise ModelError(
                f"backend distribution for id {row.id!r} sums to {total}"
            )
        records.append((row.id, probs))
    if dropped_all:
        log.warning(
            "dropped unmappable label codes: %s", ", ".join(sorted(dropped_all))
        )

    out_path = Path(out_path)
    tmp = out_path.with_name(out_path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for doc_id, probs in records:
            obj = {"id": doc_id, "probs": {k: probs[k] for k in sorted(probs)}}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    os.replace(tmp, out_path)

    summary = {"records": len(records), "model": backend.identifier}
    sidecar = out_path.with_name(out_path.name + ".meta.json")
    tmp = sidecar.with_name(sidecar.name + ".tmp")
    tmp.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    os.replace(tmp, sidecar)
    return summary
