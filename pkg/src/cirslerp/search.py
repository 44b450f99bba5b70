"""Exact top-K cosine retrieval against an embedding bank.

Scores are computed in float64 from the bank's float32 rows. Ordering is
fully deterministic: descending score, ties broken by ascending gallery id.
The gallery may be partitioned into shards for selection; results are
bit-identical for any shard count because every candidate's score is taken
from one full-gallery score vector computed up front.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .bank import EmbeddingBank
from .errors import DimMismatch
from .geometry import as_vector

SCORE_DIGITS = 9  # significant digits in TSV output


@dataclass
class RankedList:
    """Ordered retrieval hits for one query: (gallery_id, score) descending."""

    query_id: str
    hits: list[tuple[str, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.hits)

    def ids(self) -> list[str]:
        return [gid for gid, _ in self.hits]

    def rank_of(self, target_id: str) -> int | None:
        """1-based rank of target_id, or None if absent."""
        for pos, (gid, _) in enumerate(self.hits, start=1):
            if gid == target_id:
                return pos
        return None


def rank_of(target_id: str, ranked: RankedList) -> int | None:
    return ranked.rank_of(target_id)


def _scores_for(query: np.ndarray, gallery: EmbeddingBank) -> np.ndarray:
    q = as_vector(query)
    if q.shape[0] != gallery.dim:
        raise DimMismatch(f"query dim {q.shape[0]} vs gallery dim {gallery.dim}")
    return gallery.matrix.astype(np.float64) @ q


def _select_top_k(
    ids: list[str],
    scores: np.ndarray,
    k: int,
    exclude: frozenset[str],
    shards: int,
) -> list[tuple[str, float]]:
    """Deterministic top-k selection over precomputed scores.

    Each shard keeps a bounded candidate set of size k; the merge re-applies
    the global (-score, id) order. Output does not depend on shard count.
    """
    n = len(ids)
    keep = [i for i in range(n) if ids[i] not in exclude] if exclude else list(range(n))
    if not keep:
        return []
    shards = max(1, min(shards, len(keep)))
    candidates: list[tuple[float, str]] = []
    for part in np.array_split(np.asarray(keep, dtype=np.int64), shards):
        if part.size == 0:
            continue
        part_scores = scores[part]
        if part.size > k:
            # Keep the k best scores plus every entry tied with the boundary
            # score, so id tie-breaking never loses a rightful candidate.
            top = np.argpartition(-part_scores, k - 1)[:k]
            boundary = part_scores[top].min()
            mask = part_scores >= boundary
            part = part[mask]
            part_scores = part_scores[mask]
        shard_candidates = sorted(
            ((float(s), ids[int(i)]) for i, s in zip(part, part_scores)),
            key=lambda t: (-t[0], t[1]),
        )
        candidates.extend(shard_candidates[:k])
    candidates.sort(key=lambda t: (-t[0], t[1]))
    return [(gid, s) for s, gid in candidates[:k]]


def top_k(
    query,
    gallery: EmbeddingBank,
    k: int,
    exclude: Iterable[str] = (),
    query_id: str = "",
    shards: int = 1,
) -> RankedList:
    """Exact top-k hits for one composed query against the gallery.

    Equivalent to sorting all non-excluded cosine scores descending with the
    deterministic tie rule and truncating to k.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = _scores_for(query, gallery)
    hits = _select_top_k(gallery.ids, scores, k, frozenset(exclude), shards)
    return RankedList(query_id=query_id, hits=hits)


def batch_top_k(
    queries: Sequence[tuple[str, np.ndarray]],
    gallery: EmbeddingBank,
    k: int,
    per_query_exclude: Mapping[str, Iterable[str]] | None = None,
    shards: int = 1,
) -> list[RankedList]:
    """top_k applied to each (query_id, vector) pair, preserving input order."""
    per_query_exclude = per_query_exclude or {}
    out = []
    for query_id, vec in queries:
        try:
            out.append(
                top_k(
                    vec,
                    gallery,
                    k,
                    exclude=per_query_exclude.get(query_id, ()),
                    query_id=query_id,
                    shards=shards,
                )
            )
        except DimMismatch as e:
            raise DimMismatch(f"query {query_id!r}: {e}") from None
    return out


def rank_candidates(query, gallery: EmbeddingBank, candidate_ids: Sequence[str], query_id: str = "") -> RankedList:
    """Full ranking of an explicit candidate id list (subset protocols)."""
    q = as_vector(query)
    if q.shape[0] != gallery.dim:
        raise DimMismatch(f"query dim {q.shape[0]} vs gallery dim {gallery.dim}")
    rows = np.stack([gallery.matrix[gallery.index_of(c)] for c in candidate_ids]).astype(np.float64) \
        if candidate_ids else np.empty((0, gallery.dim))
    scores = rows @ q
    order = sorted(range(len(candidate_ids)), key=lambda i: (-scores[i], candidate_ids[i]))
    return RankedList(query_id=query_id, hits=[(candidate_ids[i], float(scores[i])) for i in order])


def to_tsv(ranked_lists: Iterable[RankedList]) -> str:
    """Serialize ranked lists as TSV: query_id, rank, gallery_id, score."""
    lines = []
    for rl in ranked_lists:
        for rank, (gid, score) in enumerate(rl.hits, start=1):
            lines.append(f"{rl.query_id}\t{rank}\t{gid}\t{score:.{SCORE_DIGITS}g}")
    return "\n".join(lines) + ("\n" if lines else "")
