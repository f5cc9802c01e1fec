"""Contextual units at several granularities.

A :class:`ContextIndex` maps each term to the set of units it is relevant
to (binary relevance). Three builders are provided:

* ``simplest``: every non-target node linked to a target node is a unit.
* ``groupby:<type>``: one unit per node of ``<type>``; a term is relevant to
  the unit if it is relevant to at least one simplest unit adjacent to it.
* ``cluster:<K>``: simplest units are grouped by K-means over their node
  vectors, with the same at-least-one lifting rule.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse

from .hin import HinGraph, Vocabulary, _node_sort_key, target_vocabulary

__all__ = [
    "ContextIndex",
    "KMeansResult",
    "build_simplest",
    "build_group_by",
    "build_cluster",
    "build_context",
    "kmeans",
    "lift",
    "parse_context_spec",
    "write_context",
    "read_context",
]


@dataclass(frozen=True)
class ContextIndex:
    context_id: str
    units: tuple
    relevance: Mapping[int, frozenset[int]]
    _csr: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.units:
            raise ValueError(f"{self.context_id}: empty context")
        n = len(self.units)
        for t, us in self.relevance.items():
            for u in us:
                if not 0 <= u < n:
                    raise ValueError(f"{self.context_id}: term {t} has invalid unit {u}")

    @property
    def total_units(self) -> int:
        return len(self.units)

    def __contains__(self, term_id: int) -> bool:
        return term_id in self.relevance

    def units_of(self, term_id: int) -> frozenset[int]:
        return self.relevance[term_id]

    def matrix(self, n_terms: int | None = None) -> sparse.csr_matrix:
        """Boolean term x unit incidence as CSR (rows for unknown terms are empty)."""
        if n_terms is None:
            n_terms = max(self.relevance, default=-1) + 1
        cached = self._csr.get(n_terms)
        if cached is None:
            rows, cols = [], []
            for t, us in self.relevance.items():
                if t < n_terms:
                    rows.extend([t] * len(us))
                    cols.extend(sorted(us))
            data = np.ones(len(rows), dtype=np.float64)
            cached = sparse.csr_matrix((data, (rows, cols)), shape=(n_terms, self.total_units))
            self._csr[n_terms] = cached
        return cached

    def known_mask(self, n_terms: int) -> np.ndarray:
        mask = np.zeros(n_terms, dtype=bool)
        ids = [t for t in self.relevance if t < n_terms]
        mask[ids] = True
        return mask


def parse_context_spec(spec: str) -> tuple[str, str | int | None]:
    """``simplest`` | ``groupby:<node_type>`` | ``cluster:<K>``."""
    spec = spec.strip()
    if spec == "simplest":
        return "simplest", None
    kind, sep, arg = spec.partition(":")
    if sep and kind == "groupby" and arg:
        return "groupby", arg
    if sep and kind == "cluster":
        try:
            k = int(arg)
        except ValueError:
            k = 0
        if k >= 1:
            return "cluster", k
    raise ValueError(f"bad context spec {spec!r}")


def lift(base: ContextIndex, membership: Sequence[Sequence[int]], context_id: str,
         units: Sequence) -> ContextIndex:
    """Merge base units into new ones; ``membership[u]`` lists the new units containing base unit ``u``."""
    relevance = {}
    for t, us in base.relevance.items():
        merged = set()
        for u in us:
            merged.update(membership[u])
        relevance[t] = frozenset(merged)
    return ContextIndex(context_id, tuple(units), relevance)


def build_simplest(graph: HinGraph, target_type: str, vocab: Vocabulary | None = None) -> ContextIndex:
    if vocab is None:
        vocab = target_vocabulary(graph, target_type)
    elif vocab.target_type != target_type:
        raise ValueError("vocabulary built for a different target type")
    linked: dict[int, set[str]] = {}
    unit_nodes = set()
    for term in vocab:
        nbrs = {n for n, _ in graph.neighbors(term.node_id) if graph.node_type[n] != target_type}
        linked[term.term_id] = nbrs
        unit_nodes |= nbrs
    if not unit_nodes:
        raise ValueError("simplest: empty context")
    units = tuple(sorted(unit_nodes, key=_node_sort_key))
    pos = {u: i for i, u in enumerate(units)}
    relevance = {t: frozenset(pos[n] for n in nbrs) for t, nbrs in linked.items()}
    return ContextIndex("simplest", units, relevance)


def build_group_by(graph: HinGraph, target_type: str, group_type: str,
                   simplest: ContextIndex | None = None, vocab: Vocabulary | None = None) -> ContextIndex:
    if group_type not in graph.schema.node_types:
        raise ValueError(f"unknown group type {group_type!r}")
    if group_type == target_type:
        raise ValueError("group type must differ from the target type")
    if simplest is None:
        simplest = build_simplest(graph, target_type, vocab)
    groups = tuple(sorted(graph.nodes_of_type(group_type), key=_node_sort_key))
    if not groups:
        raise ValueError(f"groupby:{group_type}: empty context")
    gpos = {g: i for i, g in enumerate(groups)}
    membership = []
    for unit in simplest.units:
        if unit in gpos:
            membership.append((gpos[unit],))
        else:
            membership.append(tuple(sorted(gpos[n] for n, _ in graph.neighbors(unit) if n in gpos)))
    return lift(simplest, membership, f"groupby:{group_type}", groups)


@dataclass
class KMeansResult:
    assignment: np.ndarray
    centroids: np.ndarray
    objective: list[float]
    n_iter: int
    converged: bool

    @property
    def n_clusters(self) -> int:
        return len(self.centroids)


def _sq_dists(x: np.ndarray, c: np.ndarray, x_sq: np.ndarray) -> np.ndarray:
    d = x_sq[:, None] - 2.0 * (x @ c.T) + np.einsum("ij,ij->i", c, c)[None, :]
    return np.maximum(d, 0.0)


def _plusplus(x: np.ndarray, k: int, rng: np.random.Generator, x_sq: np.ndarray) -> np.ndarray:
    n = len(x)
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(x, x[chosen], x_sq)[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # all remaining points coincide with a centre
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(x, x[idx:idx + 1], x_sq)[:, 0])
    return x[chosen].copy()


def kmeans(vectors, k: int, seed: int = 0, max_iters: int = 100) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding.

    Stops when an assignment step changes nothing or after ``max_iters``
    assignment steps. A centroid that loses all its points is moved onto the
    point farthest from its own centroid. Empty clusters left at the end are
    dropped and labels renumbered densely.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("vectors must be a 2-d array")
    n = len(x)
    if k < 1:
        raise ValueError("K must be positive")
    if k > n:
        raise ValueError(f"K={k} exceeds number of vectors ({n})")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite vector")
    rng = np.random.default_rng(seed)
    x_sq = np.einsum("ij,ij->i", x, x)
    centroids = _plusplus(x, k, rng, x_sq)
    labels = None
    objective: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        d = _sq_dists(x, centroids, x_sq)
        new = np.argmin(d, axis=1)
        objective.append(float(d[np.arange(n), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            converged = True
            break
        labels = new
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, x)
        nonempty = counts > 0
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        if not nonempty.all():
            resid = d[np.arange(n), labels]
            taken: set[int] = set()
            for j in np.flatnonzero(~nonempty):
                order = np.argsort(-resid, kind="stable")
                far = next(int(i) for i in order if int(i) not in taken)
                taken.add(far)
                centroids[j] = x[far]
    used = np.unique(labels)
    remap = np.full(k, -1)
    remap[used] = np.arange(len(used))
    return KMeansResult(remap[labels], centroids[used], objective, it, converged)


def build_cluster(simplest: ContextIndex, node_vectors: Mapping[str, np.ndarray], k: int,
                  seed: int = 0, max_iters: int = 100) -> ContextIndex:
    missing = [u for u in simplest.units if u not in node_vectors]
    if missing:
        raise ValueError(f"cluster:{k}: no vector for {len(missing)} unit(s), e.g. {missing[:5]}")
    x = np.stack([np.asarray(node_vectors[u], dtype=np.float64) for u in simplest.units])
    res = kmeans(x, k, seed=seed, max_iters=max_iters)
    membership = [(int(c),) for c in res.assignment]
    return lift(simplest, membership, f"cluster:{k}", tuple(range(res.n_clusters)))


def build_context(spec: str, graph: HinGraph, target_type: str, *, simplest: ContextIndex | None = None,
                  node_vectors: Mapping[str, np.ndarray] | None = None, seed: int = 0,
                  vocab: Vocabulary | None = None) -> ContextIndex:
    kind, arg = parse_context_spec(spec)
    if simplest is None:
        simplest = build_simplest(graph, target_type, vocab)
    if kind == "simplest":
        return simplest
    if kind == "groupby":
        return build_group_by(graph, target_type, arg, simplest)
    if node_vectors is None:
        raise ValueError(f"{spec}: node vectors required")
    return build_cluster(simplest, node_vectors, arg, seed=seed)


def write_context(ctx: ContextIndex, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"context_id": ctx.context_id, "total_units": ctx.total_units,
                             "units": list(ctx.units)}) + "\n")
        for t in sorted(ctx.relevance):
            fh.write(json.dumps({"term": t, "units": sorted(ctx.relevance[t])}) + "\n")


def read_context(path) -> ContextIndex:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        relevance = {}
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                relevance[int(rec["term"])] = frozenset(rec["units"])
    units = tuple(header["units"])
    if len(units) != header["total_units"]:
        raise ValueError(f"{path}: unit count mismatch")
    return ContextIndex(header["context_id"], units, relevance)
