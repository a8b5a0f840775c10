"""Component graph over matched summaries: capping and induced pairs.

Vertices are summary ids, edges are direct pairs weighted by similarity.
Oversize components are split by repeatedly removing a global minimum-weight
cut (Stoer-Wagner) until every component fits under the cap; the weakest
cross-cluster ties go first. Induced pairs are then mined inside the capped
components: mutual nearest neighbors whose similarity fell short of the
direct threshold but clears the relaxed one.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus_io import CorpusFormatError, MatchedPair, atomic_write, make_pair
from .embedding_store import EmbeddingStore

log = logging.getLogger(__name__)

DEFAULT_MAX_COMPONENT = 50
DEFAULT_TAU_PRIME = 0.7437 - 0.10


@dataclass(frozen=True)
class CapConfig:
    max_component_size: int = DEFAULT_MAX_COMPONENT
    tau_prime: float = DEFAULT_TAU_PRIME

    def __post_init__(self):
        if self.max_component_size < 2:
            raise ValueError(f"max_component_size must be >= 2, got {self.max_component_size}")
        if not 0.0 < self.tau_prime < 1.0:
            raise ValueError(f"tau_prime must lie in (0, 1), got {self.tau_prime}")


@dataclass(frozen=True)
class RemovedEdge:
    u: str
    v: str
    weight: float


class ComponentGraph:
    """Undirected weighted graph with union-find connected components.

    Component ids are the lexicographically smallest member vertex id, which
    stays stable under edge removal as long as the vertex set is unchanged.
    """

    def __init__(self):
        self.vertex_lang: dict[str, str] = {}
        self.edges: dict[tuple[str, str], float] = {}
        self.removed_edges: list[RemovedEdge] = []
        self._comp_cache: dict[str, str] | None = None

    def copy(self) -> "ComponentGraph":
        return copy.deepcopy(self)

    def add_vertex(self, vertex_id: str, lang: str) -> None:
        existing = self.vertex_lang.get(vertex_id)
        if existing is not None and existing != lang:
            raise ValueError(f"vertex {vertex_id!r} declared with languages {existing!r} and {lang!r}")
        if existing is None:
            self.vertex_lang[vertex_id] = lang
            self._comp_cache = None

    def add_edge(self, u: str, v: str, weight: float) -> None:
        if u == v:
            raise ValueError(f"self-loop on {u!r}")
        for vid in (u, v):
            if vid not in self.vertex_lang:
                raise KeyError(f"unknown vertex {vid!r}")
        key = (u, v) if u < v else (v, u)
        if key in self.edges:
            raise ValueError(f"duplicate edge ({key[0]!r}, {key[1]!r})")
        self.edges[key] = weight
        self._comp_cache = None

    def has_edge(self, u: str, v: str) -> bool:
        key = (u, v) if u < v else (v, u)
        return key in self.edges

    def remove_edge(self, u: str, v: str) -> None:
        key = (u, v) if u < v else (v, u)
        weight = self.edges.pop(key)
        self.removed_edges.append(RemovedEdge(key[0], key[1], weight))
        self._comp_cache = None

    def _compute_components(self) -> dict[str, str]:
        parent = {v: v for v in self.vertex_lang}

        def find(x):
            root = x
            while parent[root] != root:
                root = parent[root]
            while parent[x] != root:
                parent[x], x = root, parent[x]
            return root

        for u, v in self.edges:
            ru, rv = find(u), find(v)
            if ru != rv:
                # smaller id stays root so component id falls out directly
                if ru < rv:
                    parent[rv] = ru
                else:
                    parent[ru] = rv
        return {v: find(v) for v in self.vertex_lang}

    def component_of(self, vertex_id: str) -> str:
        if self._comp_cache is None:
            self._comp_cache = self._compute_components()
        return self._comp_cache[vertex_id]

    def components(self) -> dict[str, list[str]]:
        """component_id -> sorted member ids, keyed by smallest member."""
        if self._comp_cache is None:
            self._comp_cache = self._compute_components()
        out: dict[str, list[str]] = {}
        for vertex, root in self._comp_cache.items():
            out.setdefault(root, []).append(vertex)
        for members in out.values():
            members.sort()
        return out

    def component_edges(self, members: list[str]) -> dict[tuple[str, str], float]:
        member_set = set(members)
        return {k: w for k, w in self.edges.items() if k[0] in member_set}


def build_graph(direct_pairs: Iterable[MatchedPair]) -> ComponentGraph:
    """One vertex per summary id, one edge per direct pair."""
    g = ComponentGraph()
    for p in direct_pairs:
        g.add_vertex(p.a_id, p.lang_a)
        g.add_vertex(p.b_id, p.lang_b)
        g.add_edge(p.a_id, p.b_id, p.similarity)
    return g


def stoer_wagner(vertices: list[str], edge_weights: dict[tuple[str, str], float]) -> tuple[float, set[str]]:
    """Global minimum-weight cut of a connected graph.

    Returns (cut weight, one side of the partition as original vertex ids).
    Fully deterministic: vertices are processed in sorted-id order, the
    max-adjacency scan keeps the first maximum, and the first minimum cut
    across phases wins ties.
    """
    nodes = sorted(vertices)
    n = len(nodes)
    if n < 2:
        raise ValueError("minimum cut needs at least 2 vertices")
    index = {v: i for i, v in enumerate(nodes)}
    w = [[0.0] * n for _ in range(n)]
    for (u, v), weight in edge_weights.items():
        i, j = index[u], index[v]
        w[i][j] += weight
        w[j][i] += weight
    groups: list[list[str]] = [[v] for v in nodes]
    active = list(range(n))
    best_weight = float("inf")
    best_side: set[str] = set()
    while len(active) > 1:
        start = active[0]
        in_a = [False] * n
        in_a[start] = True
        key = [0.0] * n
        for v in active:
            key[v] = w[start][v]
        order = [start]
        while len(order) < len(active):
            pick = -1
            for v in active:
                if not in_a[v] and (pick < 0 or key[v] > key[pick]):
                    pick = v
            in_a[pick] = True
            order.append(pick)
            for v in active:
                if not in_a[v]:
                    key[v] += w[pick][v]
        t = order[-1]
        s = order[-2]
        cut_of_phase = key[t]
        if cut_of_phase < best_weight:
            best_weight = cut_of_phase
            best_side = set(groups[t])
        # contract t into s
        for v in active:
            if v != s and v != t:
                w[s][v] += w[t][v]
                w[v][s] = w[s][v]
        groups[s].extend(groups[t])
        active.remove(t)
    return best_weight, best_side


def cap_components(g: ComponentGraph, cfg: CapConfig) -> ComponentGraph:
    """Split every oversize component by repeated global minimum cuts.

    Pure: the input graph is untouched. Removed edges accumulate on the
    returned graph's removed_edges. Idempotent once all components fit.
    """
    out = g.copy()
    while True:
        oversize = sorted(
            (cid, members)
            for cid, members in out.components().items()
            if len(members) > cfg.max_component_size
        )
        if not oversize:
            break
        for _, members in oversize:
            sub_edges = out.component_edges(members)
            cut_weight, side = stoer_wagner(members, sub_edges)
            crossing = sorted(k for k in sub_edges if (k[0] in side) != (k[1] in side))
            for u, v in crossing:
                out.remove_edge(u, v)
            log.info(
                "split component of %d vertices: removed %d edges, total weight %.6f",
                len(members),
                len(crossing),
                cut_weight,
            )
    return out


def induced_pairs(
    g: ComponentGraph, store: EmbeddingStore, tau: float, cfg: CapConfig
) -> list[MatchedPair]:
    """Cross-lingual mutual-NN pairs inside a component that missed the
    direct threshold: tau_prime <= similarity < tau, no existing edge.
    """
    if not cfg.tau_prime < tau:
        raise ValueError(f"tau_prime {cfg.tau_prime} must be below tau {tau}")
    nn_cache: dict[tuple[str, str], dict] = {}

    def nearest(src_lang: str, dst_lang: str):
        key = (src_lang, dst_lang)
        if key not in nn_cache:
            fwd, bwd = store.all_nearest(src_lang, dst_lang)
            nn_cache[key] = fwd
            nn_cache[(dst_lang, src_lang)] = bwd
        return nn_cache[key]

    out: list[MatchedPair] = []
    for cid in sorted(g.components()):
        members = g.components()[cid]
        for i, u in enumerate(members):
            lang_u = g.vertex_lang[u]
            for v in members[i + 1 :]:
                lang_v = g.vertex_lang[v]
                if lang_u == lang_v or g.has_edge(u, v):
                    continue
                nn_uv = nearest(lang_u, lang_v).get(u)
                if nn_uv is None or nn_uv.neighbor_id != v:
                    continue
                nn_vu = nearest(lang_v, lang_u).get(v)
                if nn_vu is None or nn_vu.neighbor_id != u:
                    continue
                sim = nn_uv.similarity
                if cfg.tau_prime <= sim < tau:
                    out.append(make_pair(u, lang_u, v, lang_v, sim, "induced", component_id=cid))
    out.sort(key=lambda p: (p.lang_a, p.lang_b, p.a_id, p.b_id))
    return out


def finalize_pairs(
    direct: Iterable[MatchedPair],
    induced: Iterable[MatchedPair],
    g: ComponentGraph,
) -> tuple[list[MatchedPair], list[MatchedPair]]:
    """Merge direct and induced pairs, annotate component ids.

    Direct pairs whose edge the capping stage severed now straddle two
    components; keeping them would leak content across splits, so they are
    dropped and returned separately. Raises if a pair shows up as both
    direct and induced (the stages guarantee disjointness).
    """
    kept: list[MatchedPair] = []
    dropped: list[MatchedPair] = []
    seen: dict[tuple[str, str], str] = {}
    for p in direct:
        if not g.has_edge(p.a_id, p.b_id):
            dropped.append(p)
            continue
        seen[p.key()] = "direct"
        kept.append(
            MatchedPair(
                p.a_id, p.b_id, p.lang_a, p.lang_b, p.similarity, "direct",
                component_id=g.component_of(p.a_id),
            )
        )
    for p in induced:
        if p.key() in seen:
            raise ValueError(f"pair ({p.a_id!r}, {p.b_id!r}) is both direct and induced")
        cid = g.component_of(p.a_id)
        if cid != g.component_of(p.b_id):
            raise ValueError(f"induced pair ({p.a_id!r}, {p.b_id!r}) spans components")
        kept.append(
            MatchedPair(p.a_id, p.b_id, p.lang_a, p.lang_b, p.similarity, "induced", component_id=cid)
        )
    if dropped:
        log.info("dropped %d direct pairs severed by component capping", len(dropped))
    kept.sort(key=lambda p: (p.lang_a, p.lang_b, p.a_id, p.b_id))
    return kept, dropped


def write_components(g: ComponentGraph, path: str | Path) -> None:
    """Manifest JSONL, one component per line sorted by component id.

    Each removed edge is listed under the final component of its smaller
    endpoint.
    """
    comps = g.components()
    removed_by_comp: dict[str, list[RemovedEdge]] = {cid: [] for cid in comps}
    for edge in g.removed_edges:
        removed_by_comp[g.component_of(edge.u)].append(edge)
    with atomic_write(path) as fh:
        for cid in sorted(comps):
            record = {
                "component_id": cid,
                "vertices": [
                    {"id": vid, "lang": g.vertex_lang[vid]} for vid in comps[cid]
                ],
                "removed_edges": [
                    {"u": e.u, "v": e.v, "weight": round(e.weight, 6)}
                    for e in sorted(removed_by_comp[cid], key=lambda e: (e.u, e.v))
                ],
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_components(path: str | Path) -> ComponentGraph:
    """Rebuild vertex/component structure from a manifest.

    Edges are not stored in the manifest; the result is a vertex-partition
    view where each component is reconnected as a path so component queries
    behave identically.
    """
    g = ComponentGraph()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", line_no) from exc
            members = rec["vertices"]
            for vertex in members:
                g.add_vertex(vertex["id"], vertex["lang"])
            ids = [vertex["id"] for vertex in members]
            for u, v in zip(ids, ids[1:]):
                g.add_edge(u, v, 1.0)
            for e in rec.get("removed_edges", []):
                g.removed_edges.append(RemovedEdge(e["u"], e["v"], float(e["weight"])))
    return g
