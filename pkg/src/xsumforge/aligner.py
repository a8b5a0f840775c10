"""Direct pair mining: mutual nearest neighbors above a similarity threshold.

A summary in language A pairs with one in language B only when each is the
other's nearest neighbor and their inner product clears tau. Mutuality
already guarantees each summary lands in at most one direct pair per
language pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .corpus_io import MatchedPair, make_pair
from .embedding_store import EmbeddingStore

DEFAULT_TAU = 0.7437


@dataclass(frozen=True)
class AlignConfig:
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")


def align_language_pair(
    store: EmbeddingStore, lang_a: str, lang_b: str, cfg: AlignConfig
) -> list[MatchedPair]:
    """Direct pairs between two languages, sorted by the canonical a-side id.

    Empty languages yield an empty list.
    """
    fwd, bwd = store.all_nearest(lang_a, lang_b)
    pairs = []
    for a_id, nn in sorted(fwd.items()):
        if nn is None:
            continue
        back = bwd.get(nn.neighbor_id)
        if back is None or back.neighbor_id != a_id:
            continue
        if nn.similarity >= cfg.tau:
            pairs.append(make_pair(a_id, lang_a, nn.neighbor_id, lang_b, nn.similarity, "direct"))
    pairs.sort(key=lambda p: (p.a_id, p.b_id))
    return pairs


def align_all(store: EmbeddingStore, languages: list[str], cfg: AlignConfig) -> list[MatchedPair]:
    """Union of align_language_pair over all unordered language pairs.

    Output ordering is deterministic: language pairs in lexicographic order,
    then a_id within each pair.
    """
    ordered = sorted(set(languages))
    out: list[MatchedPair] = []
    for lang_a, lang_b in combinations(ordered, 2):
        out.extend(align_language_pair(store, lang_a, lang_b, cfg))
    return out
