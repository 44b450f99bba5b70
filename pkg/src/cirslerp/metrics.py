"""Retrieval quality metrics and benchmark evaluation protocols.

Scores are fractions in [0, 1]; rendering multiplies by 100. Each protocol
fixes a default interpolation weight, a metric family, and the K values to
report. Evaluation composes every query with slerp and ranks the gallery
with the exact deterministic search path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import AbstractSet, Mapping, Sequence

from .bank import EmbeddingBank
from .errors import EmptyPairs, MissingSubset, UnknownId
from .geometry import slerp
from .instances import BenchmarkInstance
from .search import rank_candidates, top_k

RECALL = "recall"
MAP = "map"


@dataclass(frozen=True)
class ProtocolSpec:
    """Default metric family, interpolation weight, and K values."""

    name: str
    metric: str
    alpha: float
    ks: tuple[int, ...]
    subset_ks: tuple[int, ...] = ()


PROTOCOLS: dict[str, ProtocolSpec] = {
    "cirr": ProtocolSpec("cirr", RECALL, 0.9, (1, 5, 10, 50), subset_ks=(1, 2, 3)),
    "circo": ProtocolSpec("circo", MAP, 0.8, (5, 10, 25, 50)),
    "fashioniq": ProtocolSpec("fashioniq", RECALL, 0.8, (10, 50)),
    "generic": ProtocolSpec("generic", RECALL, 0.8, (1, 5, 10, 50)),
}


def protocol_spec(name: str) -> ProtocolSpec:
    try:
        return PROTOCOLS[name]
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}") from None


# -- pure metric functions ---------------------------------------------------

def recall_at_k(
    rankings: Sequence[Sequence[str]],
    target_sets: Sequence[AbstractSet[str]],
    k: int,
) -> float:
    """Fraction of queries whose top-k contains at least one target."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(rankings) != len(target_sets):
        raise ValueError(f"{len(rankings)} rankings vs {len(target_sets)} target sets")
    if not rankings:
        raise EmptyPairs("recall over zero queries is undefined")
    hits = sum(
        1 for ranked, targets in zip(rankings, target_sets)
        if any(gid in targets for gid in ranked[:k])
    )
    return hits / len(rankings)


def average_precision_at_k(
    ranking: Sequence[str],
    targets: AbstractSet[str],
    k: int,
) -> float:
    """AP@K: mean of precision-at-hit over the top-k, over min(k, |targets|)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not targets:
        raise ValueError("targets must be non-empty")
    found = 0
    total = 0.0
    for i, gid in enumerate(ranking[:k], start=1):
        if gid in targets:
            found += 1
            total += found / i
    return total / min(k, len(targets))


def map_at_k(
    rankings: Sequence[Sequence[str]],
    target_sets: Sequence[AbstractSet[str]],
    k: int,
) -> float:
    """Mean of AP@K over queries."""
    if len(rankings) != len(target_sets):
        raise ValueError(f"{len(rankings)} rankings vs {len(target_sets)} target sets")
    if not rankings:
        raise EmptyPairs("mAP over zero queries is undefined")
    return sum(
        average_precision_at_k(r, t, k) for r, t in zip(rankings, target_sets)
    ) / len(rankings)


# -- evaluation --------------------------------------------------------------

@dataclass
class EvalReport:
    """Per-K metric scores for one evaluation run."""

    protocol: str
    metric: str
    alpha: float
    n_queries: int
    per_k_scores: dict[int, float]
    subset_per_k_scores: dict[int, float] | None = None

    def to_dict(self) -> dict:
        obj: dict = {
            "protocol": self.protocol,
            "metric": self.metric,
            "alpha": self.alpha,
            "n_queries": self.n_queries,
            "scores": {f"{self.metric}@{k}": v for k, v in sorted(self.per_k_scores.items())},
        }
        if self.subset_per_k_scores is not None:
            obj["subset_scores"] = {
                f"subset_recall@{k}": v for k, v in sorted(self.subset_per_k_scores.items())
            }
        return obj

    def render_table(self) -> str:
        """Aligned two-column text table, scores as percentages."""
        rows = [(f"{self.metric}@{k}", v) for k, v in sorted(self.per_k_scores.items())]
        if self.subset_per_k_scores is not None:
            rows += [(f"subset_recall@{k}", v) for k, v in sorted(self.subset_per_k_scores.items())]
        width = max(len(label) for label, _ in rows)
        lines = [
            f"protocol: {self.protocol}  metric: {self.metric}  "
            f"alpha: {self.alpha:g}  queries: {self.n_queries}"
        ]
        lines += [f"  {label.ljust(width)}  {100.0 * value:8.4f}" for label, value in rows]
        return "\n".join(lines) + "\n"


def _compose_queries(
    instances: Sequence[BenchmarkInstance],
    image_bank: EmbeddingBank,
    text_bank: EmbeddingBank,
    alpha: float,
):
    composed = []
    for inst in instances:
        try:
            ref = image_bank.get(inst.reference_id)
            txt = text_bank.get(inst.text_key)
        except UnknownId as e:
            raise UnknownId(f"query {inst.query_id!r}: {e}") from None
        composed.append(slerp(ref, txt, alpha))
    return composed


def evaluate(
    instances: Sequence[BenchmarkInstance],
    image_bank: EmbeddingBank,
    text_bank: EmbeddingBank,
    gallery: EmbeddingBank,
    protocol: str = "generic",
    alpha: float | None = None,
    ks: Sequence[int] | None = None,
    exclude_reference: bool = False,
    shards: int = 1,
) -> EvalReport:
    """Compose, rank, and score every instance under one protocol.

    Subset scores are computed only for protocols that define subset Ks;
    those rankings are restricted to each instance's subset_ids with the
    reference always removed.
    """
    spec = protocol_spec(protocol)
    if not instances:
        raise EmptyPairs("evaluation needs at least one instance")
    alpha = spec.alpha if alpha is None else float(alpha)
    use_ks = tuple(spec.ks if ks is None else sorted(int(k) for k in ks))
    if any(k < 1 for k in use_ks) or not use_ks:
        raise ValueError(f"ks must be positive, got {use_ks}")

    composed = _compose_queries(instances, image_bank, text_bank, alpha)
    max_k = max(use_ks)
    rankings = []
    target_sets = []
    for inst, query in zip(instances, composed):
        exclude = (inst.reference_id,) if exclude_reference else ()
        ranked = top_k(query, gallery, max_k, exclude=exclude, query_id=inst.query_id, shards=shards)
        rankings.append(ranked.ids())
        target_sets.append(frozenset(inst.target_ids))

    score_fn = recall_at_k if spec.metric == RECALL else map_at_k
    per_k = {k: score_fn(rankings, target_sets, k) for k in use_ks}

    subset_per_k = None
    if spec.subset_ks:
        subset_rankings = []
        for inst, query in zip(instances, composed):
            if inst.subset_ids is None:
                raise MissingSubset(f"query {inst.query_id!r}: protocol {spec.name} needs subset_ids")
            candidates = [s for s in inst.subset_ids if s != inst.reference_id]
            ranked = rank_candidates(query, gallery, candidates, query_id=inst.query_id)
            subset_rankings.append(ranked.ids())
        subset_per_k = {
            k: recall_at_k(subset_rankings, target_sets, k) for k in spec.subset_ks
        }

    return EvalReport(
        protocol=spec.name,
        metric=spec.metric,
        alpha=alpha,
        n_queries=len(instances),
        per_k_scores=per_k,
        subset_per_k_scores=subset_per_k,
    )


def macro_average(reports: Sequence[EvalReport]) -> EvalReport:
    """Unweighted mean of per-K scores across category-level reports."""
    if not reports:
        raise EmptyPairs("macro average needs at least one report")
    first = reports[0]
    for r in reports[1:]:
        if r.metric != first.metric or sorted(r.per_k_scores) != sorted(first.per_k_scores):
            raise ValueError("reports disagree on metric or K values")
    n = len(reports)
    per_k = {k: sum(r.per_k_scores[k] for r in reports) / n for k in first.per_k_scores}
    subset = None
    if all(r.subset_per_k_scores is not None for r in reports):
        subset = {
            k: sum(r.subset_per_k_scores[k] for r in reports) / n
            for k in first.subset_per_k_scores  # type: ignore[union-attr]
        }
    return EvalReport(
        protocol=first.protocol,
        metric=first.metric,
        alpha=first.alpha,
        n_queries=sum(r.n_queries for r in reports),
        per_k_scores=per_k,
        subset_per_k_scores=subset,
    )


def alpha_sweep(
    instances: Sequence[BenchmarkInstance],
    image_bank: EmbeddingBank,
    text_bank: EmbeddingBank,
    gallery: EmbeddingBank,
    alphas: Sequence[float],
    protocol: str = "generic",
    ks: Sequence[int] | None = None,
    exclude_reference: bool = False,
    shards: int = 1,
) -> list[EvalReport]:
    """One evaluation per interpolation weight, in the given order."""
    if not alphas:
        raise ValueError("alphas must be non-empty")
    return [
        evaluate(
            instances, image_bank, text_bank, gallery,
            protocol=protocol, alpha=a, ks=ks,
            exclude_reference=exclude_reference, shards=shards,
        )
        for a in alphas
    ]


def sweep_to_tsv(reports: Sequence[EvalReport]) -> str:
    """TSV with one row per alpha and one column per reported metric."""
    if not reports:
        raise ValueError("no reports to serialize")
    first = reports[0]
    ks = sorted(first.per_k_scores)
    subset_ks = sorted(first.subset_per_k_scores) if first.subset_per_k_scores else []
    header = ["alpha"] + [f"{first.metric}@{k}" for k in ks] \
        + [f"subset_recall@{k}" for k in subset_ks]
    lines = ["\t".join(header)]
    for r in reports:
        cells = [f"{r.alpha:.9g}"] + [f"{r.per_k_scores[k]:.9g}" for k in ks]
        if subset_ks:
            cells += [f"{r.subset_per_k_scores[k]:.9g}" for k in subset_ks]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"
