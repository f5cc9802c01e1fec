"""Distributional-inclusion measures and the pairwise feature grid.

With binary relevance, for an ordered pair ``t1 -> t2`` (``t1`` the candidate
hypernym) write ``a = |C1 & C2|``, ``b = |C2|``, ``d = |C1|`` and ``|C|`` for
the number of units. Then::

    M1 = a / b                                 (WeedsPrec)
    M2 = sqrt(a / b * (1 - a / d))             (invCL)
    M3 = a / b - a / d                         (ClarkeDE difference)
    M4 = a / |C|                               (symmetric overlap)

Every 0/0 ratio evaluates to 0.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .contexts import ContextIndex
from .hin import Vocabulary

__all__ = [
    "MEASURES",
    "PairwiseFeatures",
    "dih_measures",
    "measure_block",
    "compute_pairwise_features",
    "candidate_pairs",
    "write_pairwise",
    "read_pairwise",
]

MEASURES = ("M1", "M2", "M3", "M4")


def _ratio(num, den):
    return num / den if den else 0.0


def dih_measures(ctx: ContextIndex, t1: int, t2: int) -> tuple[float, float, float, float]:
    if t1 == t2:
        raise ValueError("measures need two distinct terms")
    c1, c2 = ctx.units_of(t1), ctx.units_of(t2)
    a = len(c1 & c2)
    fwd = _ratio(a, len(c2))
    back = _ratio(a, len(c1))
    return fwd, math.sqrt(fwd * (1.0 - back)), fwd - back, a / ctx.total_units


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def measure_block(ctx: ContextIndex, t1: np.ndarray, t2: np.ndarray, n_terms: int,
                  measures: Sequence[str] = MEASURES) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized measures for many pairs.

    Returns ``(values, known)`` where ``values`` is ``(P, len(measures))`` and
    ``known`` flags pairs whose terms are both indexed by ``ctx``.
    """
    r = ctx.matrix(n_terms)
    sizes = np.asarray(r.sum(axis=1)).ravel()
    inter = np.asarray(r[t1].multiply(r[t2]).sum(axis=1)).ravel()
    b = sizes[t2]
    d = sizes[t1]
    fwd = _safe_div(inter, b)
    back = _safe_div(inter, d)
    cols = {
        "M1": fwd,
        "M2": np.sqrt(np.clip(fwd * (1.0 - back), 0.0, None)),
        "M3": fwd - back,
        "M4": inter / ctx.total_units,
    }
    known = ctx.known_mask(n_terms)
    ok = known[t1] & known[t2]
    values = np.stack([cols[m] for m in measures], axis=1) if len(t1) else np.zeros((0, len(measures)))
    values[~ok] = 0.0
    return values, ok


@dataclass
class PairwiseFeatures:
    """Feature vectors ``g`` for ordered term pairs in a fixed column layout."""

    layout: tuple[tuple[str, str], ...]
    pairs: tuple[tuple[int, int], ...]
    values: np.ndarray
    missing_blocks: int = 0
    _index: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(len(self.pairs), len(self.layout))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite pairwise feature")
        self._index = {p: i for i, p in enumerate(self.pairs)}

    @property
    def dim(self) -> int:
        return len(self.layout)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self._index

    def vector(self, t1: int, t2: int) -> np.ndarray:
        return self.values[self._index[(t1, t2)]]

    def rows(self, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
        idx = [self._index[tuple(p)] for p in pairs]
        return self.values[idx]

    def missing(self, pairs: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
        return [tuple(p) for p in pairs if tuple(p) not in self._index]

    def fingerprint(self) -> str:
        blob = json.dumps([list(c) for c in self.layout]).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def merged(self, other: "PairwiseFeatures") -> "PairwiseFeatures":
        if other.layout != self.layout:
            raise ValueError("layouts differ")
        extra = [i for i, p in enumerate(other.pairs) if p not in self._index]
        return PairwiseFeatures(self.layout, self.pairs + tuple(other.pairs[i] for i in extra),
                                np.vstack([self.values, other.values[extra]]),
                                self.missing_blocks + other.missing_blocks)


def compute_pairwise_features(pairs: Sequence[tuple[int, int]], contexts: Sequence[ContextIndex],
                              measures: Sequence[str] = MEASURES, n_terms: int | None = None,
                              relevance: str = "binary") -> PairwiseFeatures:
    """Concatenate measure blocks across contexts, contexts in the given order.

    A pair whose term is unknown to a context gets zeros for that block and
    bumps ``missing_blocks``.
    """
    if relevance != "binary":
        raise NotImplementedError("only binary relevance is supported")
    if not contexts:
        raise ValueError("need at least one context")
    bad = [m for m in measures if m not in MEASURES]
    if bad or not measures:
        raise ValueError(f"unknown measures {bad}")
    pairs = tuple((int(a), int(b)) for a, b in pairs)
    if any(a == b for a, b in pairs):
        raise ValueError("self pair in input")
    if n_terms is None:
        n_terms = 1 + max([t for p in pairs for t in p] +
                          [max(c.relevance, default=-1) for c in contexts], default=-1)
    t1 = np.fromiter((p[0] for p in pairs), dtype=np.int64, count=len(pairs))
    t2 = np.fromiter((p[1] for p in pairs), dtype=np.int64, count=len(pairs))
    blocks, missing = [], 0
    for ctx in contexts:
        vals, ok = measure_block(ctx, t1, t2, n_terms, measures)
        blocks.append(vals)
        missing += int((~ok).sum())
    layout = tuple((ctx.context_id, m) for ctx in contexts for m in measures)
    values = np.hstack(blocks) if pairs else np.zeros((0, len(layout)))
    return PairwiseFeatures(layout, pairs, values, missing)


def candidate_pairs(policy: str, contexts: Sequence[ContextIndex], terms: Sequence[int],
                    n_terms: int | None = None) -> list[tuple[int, int]]:
    """Ordered candidate pairs over ``terms``.

    ``all``: every ordered pair of distinct terms. ``cooccur``: pairs sharing
    at least one unit (``M4 > 0``) in some context.
    """
    terms = sorted(set(int(t) for t in terms))
    if policy == "all":
        return [(a, b) for a in terms for b in terms if a != b]
    if policy != "cooccur":
        raise ValueError(f"unknown candidate policy {policy!r}")
    if n_terms is None:
        n_terms = 1 + max([max(c.relevance, default=-1) for c in contexts] + terms)
    idx = np.asarray(terms, dtype=np.int64)
    hit = None
    for ctx in contexts:
        r = ctx.matrix(n_terms)[idx]
        co = (r @ r.T).tocoo()
        m = sparse.coo_matrix((np.ones_like(co.data, dtype=bool), (co.row, co.col)), shape=co.shape)
        hit = m if hit is None else (hit + m)
    hit = hit.tocoo()
    out = sorted({(terms[i], terms[j]) for i, j in zip(hit.row, hit.col) if i != j})
    return out


def write_pairwise(features: PairwiseFeatures, vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("#t1\tt2\t" + "\t".join(f"{c}|{m}" for c, m in features.layout) + "\n")
        for (a, b), row in zip(features.pairs, features.values):
            fh.write(f"{vocab[a].surface}\t{vocab[b].surface}\t" + "\t".join(repr(float(v)) for v in row) + "\n")


def read_pairwise(path, vocab: Vocabulary) -> PairwiseFeatures:
    pairs, rows = [], []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header[:2] != ["#t1", "t2"]:
            raise ValueError(f"{path}: missing feature header")
        layout = tuple(tuple(col.rsplit("|", 1)) for col in header[2:])
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2 + len(layout):
                raise ValueError(f"{path} line {lineno}: expected {2 + len(layout)} fields")
            pairs.append((vocab.id_of_surface(parts[0]), vocab.id_of_surface(parts[1])))
            rows.append([float(v) for v in parts[2:]])
    return PairwiseFeatures(layout, tuple(pairs), np.array(rows).reshape(len(pairs), len(layout)))
