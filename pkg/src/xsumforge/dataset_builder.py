"""Dedup, leakage-safe splitting, and sample materialization.

The split unit is the graph component, never the document: all samples
derived from one component land in one split, so near-identical articles can
never sit on both sides of a train/test boundary. Components are recomputed
after dedup because re-pointing pairs at duplicate survivors can merge
previously separate components.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus_io import Document, MatchedPair, atomic_write
from .embedding_store import EmbeddingStore, similarity
from .pair_graph import ComponentGraph

log = logging.getLogger(__name__)

DEFAULT_DEDUP_THRESHOLD = 0.95
DEFAULT_RATIOS = (0.8, 0.1, 0.1)
SPLITS = ("train", "dev", "test")

# blocked prefilter slack; candidates above threshold - this get the exact check
_PREFILTER_MARGIN = 1e-3


@dataclass(frozen=True)
class DuplicateGroup:
    survivor: str
    members: tuple[str, ...]


@dataclass
class SplitManifest:
    assignment: dict[str, str]
    seed: int
    ratios: tuple[float, float, float]
    warnings: list[str]

    def split_of(self, component_id: str) -> str:
        return self.assignment[component_id]


@dataclass(frozen=True)
class CrossSample:
    src_id: str
    tgt_id: str
    src_lang: str
    tgt_lang: str
    article_text: str
    summary_text: str
    component_id: str
    split: str


def semantic_dedup(
    lang: str, store: EmbeddingStore, threshold: float = DEFAULT_DEDUP_THRESHOLD
) -> list[DuplicateGroup]:
    """Group within-language summaries whose similarity exceeds `threshold`
    (strictly), chaining transitively; the smallest doc_id survives.

    A blocked matmul proposes candidates; each is confirmed with the
    canonical accumulation before joining a group.
    """
    ids = store.ids(lang)
    n = len(ids)
    if n < 2:
        return []
    mat = np.stack([store.vector(i) for i in ids])
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    scores = mat @ mat.T
    cand_i, cand_j = np.nonzero(np.triu(scores > threshold - _PREFILTER_MARGIN, k=1))
    for i, j in zip(cand_i.tolist(), cand_j.tolist()):
        if similarity(mat[i], mat[j]) > threshold:
            ri, rj = find(i), find(j)
            if ri != rj:
                if ri < rj:
                    parent[rj] = ri
                else:
                    parent[ri] = rj
    groups: dict[int, list[str]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(ids[i])
    out = [
        DuplicateGroup(survivor=min(members), members=tuple(sorted(members)))
        for members in groups.values()
        if len(members) > 1
    ]
    out.sort(key=lambda grp: grp.survivor)
    return out


def dedup_all(
    store: EmbeddingStore, threshold: float = DEFAULT_DEDUP_THRESHOLD
) -> tuple[dict[str, str], list[DuplicateGroup]]:
    """Run dedup per language; returns (dropped_id -> survivor, all groups)."""
    replacement: dict[str, str] = {}
    groups: list[DuplicateGroup] = []
    for lang in store.languages:
        for grp in semantic_dedup(lang, store, threshold):
            groups.append(grp)
            for member in grp.members:
                if member != grp.survivor:
                    replacement[member] = grp.survivor
    return replacement, groups


def repoint_pairs(
    pairs: Iterable[MatchedPair], replacement: dict[str, str]
) -> list[MatchedPair]:
    """Rewrite pair endpoints onto dedup survivors.

    Collisions (two pairs collapsing onto the same endpoints) keep the
    direct pair over the induced one, then the higher similarity.
    """
    best: dict[tuple[str, str], MatchedPair] = {}
    for p in pairs:
        a = replacement.get(p.a_id, p.a_id)
        b = replacement.get(p.b_id, p.b_id)
        if a == b:
            log.info("dropping pair (%s, %s): endpoints merged by dedup", p.a_id, p.b_id)
            continue
        q = MatchedPair(a, b, p.lang_a, p.lang_b, p.similarity, p.kind, p.component_id)
        cur = best.get(q.key())
        if cur is None or _pair_rank(q) > _pair_rank(cur):
            best[q.key()] = q
    out = list(best.values())
    out.sort(key=lambda p: (p.lang_a, p.lang_b, p.a_id, p.b_id))
    return out


def _pair_rank(p: MatchedPair) -> tuple[int, float]:
    return (1 if p.kind == "direct" else 0, p.similarity)


def recompute_components(pairs: list[MatchedPair], lang_of: dict[str, str]) -> tuple[list[MatchedPair], ComponentGraph]:
    """Connected components over the rewritten pair set.

    Dedup can merge components, so ids are reassigned from scratch; each
    pair comes back annotated with its new component id.
    """
    g = ComponentGraph()
    for p in pairs:
        g.add_vertex(p.a_id, lang_of[p.a_id])
        g.add_vertex(p.b_id, lang_of[p.b_id])
        g.add_edge(p.a_id, p.b_id, p.similarity)
    annotated = [
        MatchedPair(
            p.a_id, p.b_id, p.lang_a, p.lang_b, p.similarity, p.kind,
            component_id=g.component_of(p.a_id),
        )
        for p in pairs
    ]
    return annotated, g


def pair_counts_by_component(pairs: Iterable[MatchedPair]) -> dict[str, dict[tuple[str, str], int]]:
    """Matched-pair counts per component, keyed by unordered language pair."""
    counts: dict[str, dict[tuple[str, str], int]] = {}
    for p in pairs:
        if p.component_id is None:
            raise ValueError(f"pair ({p.a_id!r}, {p.b_id!r}) lacks a component id")
        per = counts.setdefault(p.component_id, {})
        key = (p.lang_a, p.lang_b)
        per[key] = per.get(key, 0) + 1
    return counts


def assign_splits(
    component_counts: dict[str, dict[tuple[str, str], int]],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> SplitManifest:
    """Greedy component-atomic assignment toward the target split ratios.

    Components are placed largest first into the split with the greatest
    weighted deficit, summed over the component's language pairs. The seed
    is consumed only to break exact deficit ties, so assignment is stable
    under everything else.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    rng = random.Random(seed)
    totals: dict[tuple[str, str], int] = {}
    for per in component_counts.values():
        for key, n in per.items():
            totals[key] = totals.get(key, 0) + n
    order = sorted(
        component_counts,
        key=lambda cid: (-sum(component_counts[cid].values()), cid),
    )
    assigned: dict[str, dict[tuple[str, str], int]] = {s: {} for s in SPLITS}
    assignment: dict[str, str] = {}
    for cid in order:
        per = component_counts[cid]
        deficits = []
        for split, frac in zip(SPLITS, ratios):
            d = sum(
                frac * totals[key] - assigned[split].get(key, 0) for key in per
            )
            deficits.append(d)
        best = max(deficits)
        winners = [s for s, d in zip(SPLITS, deficits) if d == best]
        split = winners[0] if len(winners) == 1 else rng.choice(winners)
        assignment[cid] = split
        for key, n in per.items():
            assigned[split][key] = assigned[split].get(key, 0) + n
    warnings = []
    pair_components: dict[tuple[str, str], int] = {}
    for per in component_counts.values():
        for key in per:
            pair_components[key] = pair_components.get(key, 0) + 1
    for key in sorted(pair_components):
        if pair_components[key] < len(SPLITS):
            warnings.append(
                f"language pair {key[0]}-{key[1]} spans only {pair_components[key]} "
                f"component(s); its samples cannot cover all {len(SPLITS)} splits"
            )
    return SplitManifest(assignment=assignment, seed=seed, ratios=tuple(ratios), warnings=warnings)


def write_split_manifest(manifest: SplitManifest, path: str | Path) -> None:
    payload = {
        "assignment": dict(sorted(manifest.assignment.items())),
        "seed": manifest.seed,
        "ratios": list(manifest.ratios),
        "warnings": manifest.warnings,
    }
    with atomic_write(path) as fh:
        json.dump(payload, fh, indent=2, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def read_split_manifest(path: str | Path) -> SplitManifest:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return SplitManifest(
        assignment=payload["assignment"],
        seed=payload["seed"],
        ratios=tuple(payload["ratios"]),
        warnings=list(payload.get("warnings", [])),
    )


def materialize(
    pairs: Iterable[MatchedPair],
    docs: dict[str, Document],
    manifest: SplitManifest,
    include_in_language: bool = False,
) -> list[CrossSample]:
    """Expand matched pairs into directional article/summary samples.

    Every pair yields two samples (article of one side with summary of the
    other, and vice versa). With include_in_language, each distinct document
    seen in the pair set adds its own (article, summary) sample in the same
    split as its component. Pairs touching documents that disappeared
    upstream are skipped with a log entry.
    """
    samples: list[CrossSample] = []
    seen_docs: dict[str, str] = {}
    for p in pairs:
        if p.component_id is None:
            raise ValueError(f"pair ({p.a_id!r}, {p.b_id!r}) lacks a component id")
        if p.component_id not in manifest.assignment:
            raise ValueError(f"component {p.component_id!r} missing from split manifest")
        if p.a_id not in docs or p.b_id not in docs:
            missing = p.a_id if p.a_id not in docs else p.b_id
            log.info("skipping pair (%s, %s): document %s not available", p.a_id, p.b_id, missing)
            continue
        split = manifest.assignment[p.component_id]
        doc_a, doc_b = docs[p.a_id], docs[p.b_id]
        samples.append(
            CrossSample(p.a_id, p.b_id, p.lang_a, p.lang_b, doc_a.text, doc_b.summary,
                        p.component_id, split)
        )
        samples.append(
            CrossSample(p.b_id, p.a_id, p.lang_b, p.lang_a, doc_b.text, doc_a.summary,
                        p.component_id, split)
        )
        seen_docs.setdefault(p.a_id, p.component_id)
        seen_docs.setdefault(p.b_id, p.component_id)
    if include_in_language:
        for doc_id in sorted(seen_docs):
            doc = docs[doc_id]
            cid = seen_docs[doc_id]
            samples.append(
                CrossSample(doc_id, doc_id, doc.lang, doc.lang, doc.text, doc.summary,
                            cid, manifest.assignment[cid])
            )
    samples.sort(key=lambda s: (s.split, s.src_lang, s.tgt_lang, s.src_id, s.tgt_id))
    return samples


def write_samples(samples: Iterable[CrossSample], out_dir: str | Path) -> list[Path]:
    """One JSONL file per (split, src_lang, tgt_lang); returns written paths."""
    out_dir = Path(out_dir)
    buckets: dict[tuple[str, str, str], list[CrossSample]] = {}
    for s in samples:
        buckets.setdefault((s.split, s.src_lang, s.tgt_lang), []).append(s)
    written = []
    for (split, src, tgt) in sorted(buckets):
        path = out_dir / f"{split}.{src}-{tgt}.jsonl"
        rows = sorted(buckets[(split, src, tgt)], key=lambda s: (s.src_id, s.tgt_id))
        with atomic_write(path) as fh:
            for s in rows:
                fh.write(
                    json.dumps(
                        {
                            "src_id": s.src_id,
                            "tgt_id": s.tgt_id,
                            "src_lang": s.src_lang,
                            "tgt_lang": s.tgt_lang,
                            "article": s.article_text,
                            "summary": s.summary_text,
                            "component_id": s.component_id,
                            "split": s.split,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        written.append(path)
    return written


@dataclass
class PairCountMatrix:
    counts: dict[tuple[str, str], int]

    @property
    def languages(self) -> list[str]:
        langs = set()
        for src, tgt in self.counts:
            langs.add(src)
            langs.add(tgt)
        return sorted(langs)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def cross_lingual_total(self) -> int:
        return sum(n for (src, tgt), n in self.counts.items() if src != tgt)


def stats_matrix(samples: Iterable[CrossSample]) -> PairCountMatrix:
    counts: dict[tuple[str, str], int] = {}
    for s in samples:
        key = (s.src_lang, s.tgt_lang)
        counts[key] = counts.get(key, 0) + 1
    return PairCountMatrix(counts)


def render_stats(matrix: PairCountMatrix) -> str:
    """TSV: rows are the article language, columns the summary language."""
    langs = matrix.languages
    lines = ["\t".join(["article"] + langs)]
    for src in langs:
        row = [str(matrix.counts.get((src, tgt), 0)) for tgt in langs]
        lines.append(src + "\t" + "\t".join(row))
    lines.append(f"# total\t{matrix.total}")
    lines.append(f"# cross_lingual\t{matrix.cross_lingual_total}")
    return "\n".join(lines) + "\n"
