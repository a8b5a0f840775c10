"""Language-agnostic summary scoring.

A generated summary is scored as the product of three factors: meaning
similarity (embedding inner product against the reference), language
confidence (did the generator write in the intended language), and a length
penalty (brevity-style, tolerant up to a fixed token offset). The product is
reported alongside its factors, plus ROUGE and correlation helpers for
comparing the metric against lexical overlap.

The language-confidence target is the intended output language, never the
language of the reference text: references may legitimately be in another
language when none exist in the target one.
"""

from __future__ import annotations

import json
import logging
import math
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .corpus_io import CorpusFormatError, normalize_lang
from .embedding_store import similarity

log = logging.getLogger(__name__)

DEFAULT_LENGTH_OFFSET = 6
DEFAULT_MIN_EVAL_SAMPLES = 500

# scripts written without word spacing: count per character instead of
# splitting on whitespace (CJK ideographs + extension A + compat, kana,
# Thai, Lao, Myanmar, Khmer)
_UNSPACED_RANGES = (
    (0x3040, 0x309F),
    (0x30A0, 0x30FF),
    (0x31F0, 0x31FF),
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x0E00, 0x0E7F),
    (0x0E80, 0x0EFF),
    (0x1000, 0x109F),
    (0x1780, 0x17FF),
)


@dataclass(frozen=True)
class LangIdDistribution:
    probs: dict[str, float]

    def __post_init__(self):
        total = 0.0
        for lang, p in self.probs.items():
            if p < 0:
                raise ValueError(f"negative probability {p} for {lang!r}")
            total += p
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {total}, expected 1")

    def argmax(self) -> str:
        """Highest-probability language; ties go to the smallest code."""
        best = None
        best_p = -1.0
        for lang in sorted(self.probs):
            if self.probs[lang] > best_p:
                best_p = self.probs[lang]
                best = lang
        return best


@dataclass(frozen=True)
class LaseConfig:
    target_lang: str
    length_offset: int = DEFAULT_LENGTH_OFFSET

    def __post_init__(self):
        if self.length_offset < 0:
            raise ValueError(f"length offset must be >= 0, got {self.length_offset}")


@dataclass(frozen=True)
class LaseScore:
    ms: float
    lc: float
    lp: float
    lase: float


def meaning_similarity(gen_emb: np.ndarray, ref_emb: np.ndarray) -> float:
    return similarity(gen_emb, ref_emb)


def language_confidence(dist: LangIdDistribution, target: str) -> float:
    """1 when the target wins the argmax (smallest code breaks ties),
    otherwise the target's own probability, 0 if absent entirely."""
    target = normalize_lang(target)
    if dist.argmax() == target:
        return 1.0
    return dist.probs.get(target, 0.0)


def length_penalty(len_gen: int, len_ref: int, c: int = DEFAULT_LENGTH_OFFSET) -> float:
    """1 while the generation is at most `c` tokens longer than the
    reference; exponential decay beyond that."""
    if len_gen < 0 or len_ref < 0:
        raise ValueError("token counts must be nonnegative")
    budget = len_ref + c
    if len_gen <= budget:
        return 1.0
    if budget == 0:
        log.info("length penalty hit zero budget (len_ref=%d, c=%d): defined as 0", len_ref, c)
        return 0.0
    return math.exp(1.0 - len_gen / budget)


def tokenize(text: str) -> list[str]:
    """Whitespace tokens for spaced scripts; one token per character for
    unspaced scripts, with combining marks attached to their base."""
    tokens: list[str] = []
    word = ""
    for ch in text:
        if ch.isspace():
            if word:
                tokens.append(word)
                word = ""
            continue
        code = ord(ch)
        unspaced = any(lo <= code <= hi for lo, hi in _UNSPACED_RANGES)
        # category, not combining class: Thai vowel signs are Mn with class 0
        is_mark = unicodedata.category(ch).startswith("M")
        if unspaced and not is_mark:
            if word:
                tokens.append(word)
                word = ""
            tokens.append(ch)
        elif unspaced:
            # mark inside an unspaced run rides on its base character
            if tokens and not word:
                tokens[-1] += ch
            else:
                word += ch
        else:
            word += ch
    if word:
        tokens.append(word)
    return tokens


def segment_tokens(text: str, lang: str | None = None) -> int:
    """Token count for length penalties. `lang` is accepted as a hint for
    callers that have it; counting is purely script-driven."""
    return len(tokenize(text))


def lase(
    gen_text: str,
    ref_text: str,
    gen_emb: np.ndarray,
    ref_emb: np.ndarray,
    dist: LangIdDistribution,
    cfg: LaseConfig,
) -> LaseScore:
    ms = meaning_similarity(gen_emb, ref_emb)
    lc = language_confidence(dist, cfg.target_lang)
    lp = length_penalty(segment_tokens(gen_text), segment_tokens(ref_text), cfg.length_offset)
    return LaseScore(ms=ms, lc=lc, lp=lp, lase=ms * lc * lp)


def _ngrams(tokens: list[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        key = tuple(tokens[i : i + n])
        counts[key] = counts.get(key, 0) + 1
    return counts


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[-1]))
        prev = cur
    return prev[-1]


def rouge(gen_text: str, ref_text: str, variant: int | str) -> tuple[float, float, float]:
    """Clipped n-gram overlap (variants 1 and 2) or LCS (variant "L").

    Returns (precision, recall, f1); any ratio with a zero denominator is 0.
    """
    gen = tokenize(gen_text)
    ref = tokenize(ref_text)
    key = str(variant).upper()
    if key in ("1", "2"):
        n = int(key)
        gen_counts = _ngrams(gen, n)
        ref_counts = _ngrams(ref, n)
        overlap = sum(min(c, ref_counts.get(g, 0)) for g, c in gen_counts.items())
        gen_total = sum(gen_counts.values())
        ref_total = sum(ref_counts.values())
    elif key == "L":
        overlap = _lcs_length(gen, ref)
        gen_total = len(gen)
        ref_total = len(ref)
    else:
        raise ValueError(f"unknown variant {variant!r}, expected 1, 2, or L")
    p = overlap / gen_total if gen_total else 0.0
    r = overlap / ref_total if ref_total else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return (p, r, f1)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def correlate(xs: list[float], ys: list[float]) -> tuple[float, float]:
    """(Pearson, Spearman). Zero variance on either side yields NaN for the
    affected coefficient rather than raising."""
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValueError("need at least 2 points")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)

    def pearson(a, b):
        if a.std() == 0.0 or b.std() == 0.0:
            return float("nan")
        return float(np.corrcoef(a, b)[0, 1])

    return (pearson(x, y), pearson(_average_ranks(x), _average_ranks(y)))


@dataclass(frozen=True)
class SampleScore:
    id: str
    src_lang: str  # language of the reference text
    tgt_lang: str  # intended output language (drives LC)
    ms: float
    lc: float
    lp: float
    lase: float
    rouge1_f1: float
    rouge2_f1: float
    rougeL_f1: float


@dataclass(frozen=True)
class AggregateRow:
    src_lang: str
    tgt_lang: str
    n: int
    mean_lase: float
    mean_rouge2_f1: float
    low_confidence: bool


def read_text_records(path: str | Path) -> list[dict]:
    """JSONL of {"id", "lang", "text"}; langs normalized, ids must be unique."""
    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", line_no) from exc
            for key in ("id", "lang", "text"):
                if key not in obj or not isinstance(obj[key], str):
                    raise CorpusFormatError(f"missing or non-string field {key!r}", line_no)
            if obj["id"] in seen:
                raise CorpusFormatError(f"duplicate id {obj['id']!r}", line_no)
            seen.add(obj["id"])
            records.append({"id": obj["id"], "lang": normalize_lang(obj["lang"]), "text": obj["text"]})
    return records


def evaluate_run(
    predictions_path: str | Path,
    references_path: str | Path,
    langid_provider: Callable[[str, str], LangIdDistribution],
    gen_embedder: Callable[[str, str], np.ndarray],
    ref_embedder: Callable[[str, str], np.ndarray],
    length_offset: int = DEFAULT_LENGTH_OFFSET,
    min_samples: int = DEFAULT_MIN_EVAL_SAMPLES,
) -> tuple[list[SampleScore], list[AggregateRow]]:
    """Score every prediction against the reference with the same id.

    Providers take (id, text) and return a language distribution or an
    embedding; this keeps the scorer independent of where those come from
    (built-in classifier, interchange files, external models).
    """
    predictions = read_text_records(predictions_path)
    if not predictions:
        raise ValueError(f"{predictions_path}: no predictions to evaluate")
    references = {r["id"]: r for r in read_text_records(references_path)}
    missing = sorted(p["id"] for p in predictions if p["id"] not in references)
    if missing:
        raise ValueError(
            f"{len(missing)} prediction ids lack references: {missing[:10]}"
        )
    samples: list[SampleScore] = []
    for pred in sorted(predictions, key=lambda r: r["id"]):
        ref = references[pred["id"]]
        cfg = LaseConfig(target_lang=pred["lang"], length_offset=length_offset)
        score = lase(
            pred["text"],
            ref["text"],
            gen_embedder(pred["id"], pred["text"]),
            ref_embedder(ref["id"], ref["text"]),
            langid_provider(pred["id"], pred["text"]),
            cfg,
        )
        r1 = rouge(pred["text"], ref["text"], 1)[2]
        r2 = rouge(pred["text"], ref["text"], 2)[2]
        rl = rouge(pred["text"], ref["text"], "L")[2]
        samples.append(
            SampleScore(
                id=pred["id"],
                src_lang=ref["lang"],
                tgt_lang=pred["lang"],
                ms=score.ms,
                lc=score.lc,
                lp=score.lp,
                lase=score.lase,
                rouge1_f1=r1,
                rouge2_f1=r2,
                rougeL_f1=rl,
            )
        )
    groups: dict[tuple[str, str], list[SampleScore]] = {}
    for s in samples:
        groups.setdefault((s.src_lang, s.tgt_lang), []).append(s)
    aggregates = [
        AggregateRow(
            src_lang=src,
            tgt_lang=tgt,
            n=len(members),
            mean_lase=sum(s.lase for s in members) / len(members),
            mean_rouge2_f1=sum(s.rouge2_f1 for s in members) / len(members),
            low_confidence=len(members) < min_samples,
        )
        for (src, tgt), members in sorted(groups.items())
    ]
    return samples, aggregates


def write_scores(samples: Iterable[SampleScore], path: str | Path) -> None:
    from .corpus_io import atomic_write

    with atomic_write(path) as fh:
        for s in samples:
            fh.write(
                json.dumps(
                    {
                        "id": s.id,
                        "src_lang": s.src_lang,
                        "tgt_lang": s.tgt_lang,
                        "ms": round(s.ms, 6),
                        "lc": round(s.lc, 6),
                        "lp": round(s.lp, 6),
                        "lase": round(s.lase, 6),
                        "rouge1_f1": round(s.rouge1_f1, 6),
                        "rouge2_f1": round(s.rouge2_f1, 6),
                        "rougeL_f1": round(s.rougeL_f1, 6),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_scores(path: str | Path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


def render_aggregates(rows: Iterable[AggregateRow]) -> str:
    lines = ["src_lang\ttgt_lang\tn\tmean_lase\tmean_rouge2_f1\tlow_confidence"]
    for r in rows:
        lines.append(
            f"{r.src_lang}\t{r.tgt_lang}\t{r.n}\t{r.mean_lase:.6f}"
            f"\t{r.mean_rouge2_f1:.6f}\t{str(r.low_confidence).lower()}"
        )
    return "\n".join(lines) + "\n"
