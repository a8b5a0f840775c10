"""Multistage smoothed batch sampling over language-pair sample pools.

Rare language pairs starve under plain data-frequency sampling, so pivot
languages are drawn from an exponent-smoothed marginal (q_i proportional to
p_i^alpha) and partner languages from a smoothed conditional (q_{j|i}
proportional to p_{j|i}^beta). A coin flip decides whether the batch pivots
on the source or the target side; all m mini-batches of a batch share the
pivot language.

Smoothing exponents sample from q, not the raw p: with raw p the exponents
would have no effect at all.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .corpus_io import atomic_write

DEFAULT_ALPHA = 0.5
DEFAULT_BETA = 0.75
DEFAULT_MIN_PAIR_COUNT = 30
DEFAULT_M = 8
DEFAULT_MB = 32


@dataclass
class PairCounts:
    """Directional sample counts per (src_lang, tgt_lang) on the train split.

    Pairs under `min_pair_count` are zeroed: a mini-batch drawn from a pool
    smaller than the mini-batch itself would be mostly duplicates.
    """

    counts: dict[tuple[str, str], int]
    min_pair_count: int = DEFAULT_MIN_PAIR_COUNT

    def __post_init__(self):
        for key, n in self.counts.items():
            if n < 0:
                raise ValueError(f"negative count for {key}: {n}")

    def effective(self) -> dict[tuple[str, str], int]:
        return {
            key: n for key, n in self.counts.items() if n >= self.min_pair_count and n > 0
        }

    @property
    def languages(self) -> list[str]:
        langs = set()
        for src, tgt in self.counts:
            langs.add(src)
            langs.add(tgt)
        return sorted(langs)


@dataclass(frozen=True)
class SamplingPlan:
    languages: tuple[str, ...]
    alpha: float
    beta: float
    q_src: dict[str, float]
    q_tgt: dict[str, float]
    q_tgt_given_src: dict[str, dict[str, float]]
    q_src_given_tgt: dict[str, dict[str, float]]


@dataclass(frozen=True)
class MiniBatch:
    src_lang: str
    tgt_lang: str
    sample_ids: tuple[str, ...]


@dataclass(frozen=True)
class Batch:
    pivot_side: str  # "source" or "target"
    pivot_lang: str
    mini_batches: tuple[MiniBatch, ...]


def _smooth(masses: dict[str, float], exponent: float) -> dict[str, float]:
    """Normalize masses^exponent over positive entries; zero mass stays zero
    (0^0 is treated as 0 so absent languages never gain probability)."""
    powered = {k: (m ** exponent if m > 0 else 0.0) for k, m in masses.items()}
    total = sum(powered.values())
    if total <= 0:
        return {k: 0.0 for k in masses}
    return {k: v / total for k, v in powered.items()}


def compute_plan(
    counts: PairCounts, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA
) -> SamplingPlan:
    if alpha < 0 or beta < 0:
        raise ValueError(f"smoothing exponents must be >= 0, got alpha={alpha}, beta={beta}")
    effective = counts.effective()
    if not effective:
        raise ValueError("all pair counts are zero after applying the minimum-count floor")
    langs = counts.languages
    row_sums = {l: 0.0 for l in langs}
    col_sums = {l: 0.0 for l in langs}
    for (src, tgt), n in effective.items():
        row_sums[src] += n
        col_sums[tgt] += n
    grand = sum(row_sums.values())
    p_src = {l: row_sums[l] / grand for l in langs}
    p_tgt = {l: col_sums[l] / grand for l in langs}
    q_src = _smooth(p_src, alpha)
    q_tgt = _smooth(p_tgt, alpha)
    q_tgt_given_src: dict[str, dict[str, float]] = {}
    q_src_given_tgt: dict[str, dict[str, float]] = {}
    for i in langs:
        if row_sums[i] > 0:
            cond = {j: effective.get((i, j), 0) / row_sums[i] for j in langs}
            q_tgt_given_src[i] = _smooth(cond, beta)
        else:
            q_tgt_given_src[i] = {j: 0.0 for j in langs}
    for j in langs:
        if col_sums[j] > 0:
            cond = {i: effective.get((i, j), 0) / col_sums[j] for i in langs}
            q_src_given_tgt[j] = _smooth(cond, beta)
        else:
            q_src_given_tgt[j] = {i: 0.0 for i in langs}
    for name, dist in (("q_src", q_src), ("q_tgt", q_tgt)):
        total = sum(dist.values())
        if abs(total - 1.0) > 1e-9:
            raise AssertionError(f"{name} sums to {total}")
    return SamplingPlan(
        languages=tuple(langs),
        alpha=alpha,
        beta=beta,
        q_src=q_src,
        q_tgt=q_tgt,
        q_tgt_given_src=q_tgt_given_src,
        q_src_given_tgt=q_src_given_tgt,
    )


def _draw(dist: dict[str, float], langs: tuple[str, ...], rng: random.Random) -> str:
    """Categorical draw with a fixed cumulative order (sorted languages)."""
    r = rng.random()
    acc = 0.0
    last_positive = None
    for lang in langs:
        p = dist.get(lang, 0.0)
        if p <= 0.0:
            continue
        last_positive = lang
        acc += p
        if r < acc:
            return lang
    if last_positive is None:
        raise ValueError("cannot draw from an all-zero distribution")
    return last_positive  # guard against cumulative rounding at r ~ 1.0


def next_batch(
    plan: SamplingPlan,
    pools: dict[tuple[str, str], list[str]],
    m: int = DEFAULT_M,
    mb: int = DEFAULT_MB,
    rng: random.Random | None = None,
) -> Batch:
    """Draw one batch of m mini-batches, mb samples each, with replacement.

    The coin, the pivot draw, the m partner draws, and the pool draws all
    consume the given rng in a fixed order, so a seeded rng reproduces the
    stream exactly.
    """
    if rng is None:
        rng = random.Random()
    if m < 1 or mb < 1:
        raise ValueError(f"m and mb must be positive, got m={m}, mb={mb}")
    r = rng.random()
    minis = []
    if r > 0.5:
        pivot_side = "source"
        src = _draw(plan.q_src, plan.languages, rng)
        pivot = src
        for _ in range(m):
            tgt = _draw(plan.q_tgt_given_src[src], plan.languages, rng)
            minis.append(_fill(pools, src, tgt, mb, rng))
    else:
        pivot_side = "target"
        tgt = _draw(plan.q_tgt, plan.languages, rng)
        pivot = tgt
        for _ in range(m):
            src = _draw(plan.q_src_given_tgt[tgt], plan.languages, rng)
            minis.append(_fill(pools, src, tgt, mb, rng))
    return Batch(pivot_side=pivot_side, pivot_lang=pivot, mini_batches=tuple(minis))


def _fill(pools, src, tgt, mb, rng) -> MiniBatch:
    pool = pools.get((src, tgt))
    if not pool:
        raise ValueError(f"no samples available for language pair ({src}, {tgt})")
    ids = tuple(pool[rng.randrange(len(pool))] for _ in range(mb))
    return MiniBatch(src_lang=src, tgt_lang=tgt, sample_ids=ids)


def training_feed(
    plan: SamplingPlan,
    pools: dict[tuple[str, str], list[str]],
    steps: int,
    m: int = DEFAULT_M,
    mb: int = DEFAULT_MB,
    seed: int = 0,
) -> Iterator[Batch]:
    """Exactly `steps` batches from a seeded generator; same seed, same stream."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    rng = random.Random(seed)
    for _ in range(steps):
        yield next_batch(plan, pools, m=m, mb=mb, rng=rng)


def write_plan(plan: SamplingPlan, path: str | Path) -> None:
    payload = {
        "languages": list(plan.languages),
        "alpha": plan.alpha,
        "beta": plan.beta,
        "q_src": {k: v for k, v in sorted(plan.q_src.items()) if v > 0},
        "q_tgt": {k: v for k, v in sorted(plan.q_tgt.items()) if v > 0},
        "q_tgt_given_src": {
            i: {j: v for j, v in sorted(cond.items()) if v > 0}
            for i, cond in sorted(plan.q_tgt_given_src.items())
            if any(v > 0 for v in cond.values())
        },
        "q_src_given_tgt": {
            j: {i: v for i, v in sorted(cond.items()) if v > 0}
            for j, cond in sorted(plan.q_src_given_tgt.items())
            if any(v > 0 for v in cond.values())
        },
    }
    with atomic_write(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_plan(path: str | Path) -> SamplingPlan:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    langs = tuple(payload["languages"])

    def full(dist):
        return {l: float(dist.get(l, 0.0)) for l in langs}

    return SamplingPlan(
        languages=langs,
        alpha=float(payload["alpha"]),
        beta=float(payload["beta"]),
        q_src=full(payload["q_src"]),
        q_tgt=full(payload["q_tgt"]),
        q_tgt_given_src={l: full(payload["q_tgt_given_src"].get(l, {})) for l in langs},
        q_src_given_tgt={l: full(payload["q_src_given_tgt"].get(l, {})) for l in langs},
    )


def write_batches(batches: Iterable[Batch], path: str | Path) -> None:
    """Audit stream: one JSON line per batch with full id lists."""
    with atomic_write(path) as fh:
        for step, batch in enumerate(batches):
            fh.write(
                json.dumps(
                    {
                        "step": step,
                        "pivot_side": batch.pivot_side,
                        "pivot_lang": batch.pivot_lang,
                        "mini_batches": [
                            {
                                "src": mb.src_lang,
                                "tgt": mb.tgt_lang,
                                "ids": list(mb.sample_ids),
                            }
                            for mb in batch.mini_batches
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
