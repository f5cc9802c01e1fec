"""Precision@k and the grouped reciprocal-rank metrics.

Pairs are grouped by hypernym. Inside a group, a pair's rank is its position
among that group's pairs in the global (tie-broken) order. For every group
with at least one positive:

* ARR: mean reciprocal rank over the group's positives
* LRR: largest reciprocal rank among them

Macro means weight groups equally, micro means weight them by positive count.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from .model import RankedPairList

__all__ = [
    "LabeledPairSet",
    "RankMetrics",
    "aggregate_reciprocal_ranks",
    "align_to_labels",
    "precision_at_k",
    "reciprocal_rank_metrics",
    "evaluate",
    "write_report",
]


@dataclass(frozen=True)
class LabeledPairSet:
    records: tuple[tuple[Hashable, Hashable, bool], ...]

    def __post_init__(self):
        seen = set()
        for a, b, _ in self.records:
            if (a, b) in seen:
                raise ValueError(f"duplicate labeled pair ({a}, {b})")
            seen.add((a, b))
        object.__setattr__(self, "_labels", {(a, b): bool(y) for a, b, y in self.records})

    @classmethod
    def from_iter(cls, records: Iterable[tuple[Hashable, Hashable, bool]]) -> "LabeledPairSet":
        return cls(tuple((a, b, bool(y)) for a, b, y in records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __contains__(self, pair) -> bool:
        return tuple(pair[:2]) in self._labels

    def label(self, a, b) -> bool:
        return self._labels[(a, b)]

    def pairs(self) -> list[tuple[Hashable, Hashable]]:
        return [(a, b) for a, b, _ in self.records]

    @property
    def n_positive(self) -> int:
        return sum(1 for *_, y in self.records if y)

    def write_tsv(self, path, name=lambda t: t) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for a, b, y in self.records:
                fh.write(f"{name(a)}\t{name(b)}\t{int(y)}\n")

    @classmethod
    def read_tsv(cls, path, parse=lambda t: t) -> "LabeledPairSet":
        recs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3 or parts[2] not in ("0", "1"):
                    raise ValueError(f"{path} line {lineno}: expected hypernym, hyponym, 0/1")
                recs.append((parse(parts[0]), parse(parts[1]), parts[2] == "1"))
        return cls(tuple(recs))


@dataclass(frozen=True)
class RankMetrics:
    mamarr: float
    mimarr: float
    mamlrr: float
    mimlrr: float
    n_groups: int
    n_positives: int

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.mamarr, self.mimarr, self.mamlrr, self.mimlrr


def align_to_labels(ranked: RankedPairList, labels: LabeledPairSet, tie_seed: int = 0) -> RankedPairList:
    """Rank exactly the labeled pairs; pairs absent from ``ranked`` score 0."""
    scores = {(a, b): s for a, b, s in ranked}
    pairs = labels.pairs()
    return RankedPairList.from_scores(pairs, [scores.get(p, 0.0) for p in pairs], tie_seed)


def precision_at_k(ranked: RankedPairList, labels: LabeledPairSet, k: int) -> float:
    if k < 1:
        raise ValueError("k must be positive")
    if k > len(ranked):
        raise ValueError(f"k={k} exceeds ranked list length {len(ranked)}")
    hits = 0
    for a, b, _ in ranked.entries[:k]:
        if (a, b) not in labels:
            raise ValueError(f"unlabeled pair encountered: ({a}, {b})")
        hits += labels.label(a, b)
    return hits / k


def reciprocal_rank_metrics(ranked: RankedPairList, labels: LabeledPairSet) -> RankMetrics:
    """Returns MaMARR, MiMARR, MaMLRR, MiMLRR (plus group and positive counts)."""
    seen = set()
    depth: dict = {}
    rrs: dict = {}
    for a, b, _ in ranked:
        if (a, b) not in labels or (a, b) in seen:
            continue
        seen.add((a, b))
        depth[a] = depth.get(a, 0) + 1
        if labels.label(a, b):
            rrs.setdefault(a, []).append(1.0 / depth[a])
    absent = len(labels) - len(seen)
    if absent:
        raise ValueError(f"{absent} labeled pair(s) missing from the ranked list")
    empty = [g for g in depth if g not in rrs]
    if empty:
        warnings.warn(f"{len(empty)} group(s) without positives excluded", stacklevel=2)
    return aggregate_reciprocal_ranks(rrs)


def aggregate_reciprocal_ranks(rrs: Mapping[Hashable, Sequence[float]]) -> RankMetrics:
    """Macro and micro means of per-group ARR and LRR.

    ``rrs`` maps a group key to the reciprocal ranks of its positives.
    """
    rrs = {g: list(v) for g, v in rrs.items() if len(v)}
    if not rrs:
        raise ValueError("no group has a positive pair")
    arr = {g: sum(v) / len(v) for g, v in rrs.items()}
    lrr = {g: max(v) for g, v in rrs.items()}
    weight = {g: len(v) for g, v in rrs.items()}
    total = sum(weight.values())
    n = len(rrs)
    return RankMetrics(
        mamarr=sum(arr.values()) / n,
        mimarr=sum(arr[g] * weight[g] for g in rrs) / total,
        mamlrr=sum(lrr.values()) / n,
        mimlrr=sum(lrr[g] * weight[g] for g in rrs) / total,
        n_groups=n,
        n_positives=total,
    )


def evaluate(ranked: RankedPairList, labels: LabeledPairSet, ks: Sequence[int] = (100, 1000),
             tie_seed: int = 0) -> dict:
    """All metrics as a flat dict; P@k is ``None`` when k exceeds the label count."""
    aligned = align_to_labels(ranked, labels, tie_seed)
    report: dict = {}
    for k in ks:
        report[f"P@{k}"] = precision_at_k(aligned, labels, k) if k <= len(aligned) else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rr = reciprocal_rank_metrics(aligned, labels)
    report.update(MaMARR=rr.mamarr, MiMARR=rr.mimarr, MaMLRR=rr.mamlrr, MiMLRR=rr.mimlrr,
                  groups=rr.n_groups, positives=rr.n_positives)
    return report


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
