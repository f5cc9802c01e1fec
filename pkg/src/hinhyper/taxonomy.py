"""Taxonomy DAG from ranked hypernymy pairs by random cycle breaking."""
from __future__ import annotations

import graphlib
import json
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .model import RankedPairList

__all__ = ["TaxonomyDag", "build_taxonomy", "find_cycle", "is_acyclic", "select_top_terms"]


@dataclass(frozen=True)
class TaxonomyDag:
    nodes: tuple[Hashable, ...]
    edges: tuple[tuple[Hashable, Hashable, float], ...]
    removed_edges: tuple[tuple[Hashable, Hashable, float], ...]

    def write_dot(self, path, label=str) -> None:
        ids = {n: f"n{i}" for i, n in enumerate(self.nodes)}
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("digraph taxonomy {\n")
            for n in self.nodes:
                fh.write(f"  {ids[n]} [label={json.dumps(label(n))}];\n")
            for a, b, s in self.edges:
                fh.write(f"  {ids[a]} -> {ids[b]} [score={s!r}];\n")
            fh.write("}\n")

    def write_json(self, path, label=str) -> None:
        doc = {"nodes": [label(n) for n in self.nodes],
               "edges": [{"hypernym": label(a), "hyponym": label(b), "score": s} for a, b, s in self.edges]}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")

    def write_removed(self, path, label=str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for a, b, s in self.removed_edges:
                fh.write(f"{label(a)}\t{label(b)}\t{s!r}\n")


def is_acyclic(edges: Sequence[tuple]) -> bool:
    ts = graphlib.TopologicalSorter()
    for a, b, *_ in edges:
        ts.add(b, a)
    try:
        ts.prepare()
    except graphlib.CycleError:
        return False
    return True


def find_cycle(adj: Mapping[Hashable, Mapping[Hashable, float]], order: Sequence[Hashable],
               done: set | None = None) -> list[tuple[Hashable, Hashable]] | None:
    """Edges of the first cycle closed by a DFS back edge, or ``None``.

    ``done`` collects nodes proven to lie on no cycle; passing the same set
    into later calls skips them (edge deletions cannot create cycles).
    """
    done = set() if done is None else done
    on_stack: dict[Hashable, int] = {}
    path: list[Hashable] = []
    for root in order:
        if root in done:
            continue
        stack = [(root, iter(adj.get(root, ())))]
        on_stack[root] = 0
        path.append(root)
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                path.pop()
                del on_stack[node]
                done.add(node)
                continue
            if nxt in on_stack:
                cyc = path[on_stack[nxt]:] + [nxt]
                return list(zip(cyc, cyc[1:]))
            if nxt not in done:
                on_stack[nxt] = len(path)
                path.append(nxt)
                stack.append((nxt, iter(adj.get(nxt, ()))))
    return None


def select_top_terms(ranked: RankedPairList, top_terms: int,
                     popularity: Mapping[Hashable, float] | None = None) -> list[Hashable]:
    """Most frequent terms by pair participation (or by ``popularity``); ties by first appearance."""
    first: dict[Hashable, int] = {}
    counts: Counter = Counter()
    for a, b, _ in ranked:
        if a == b:
            continue
        for t in (a, b):
            first.setdefault(t, len(first))
            counts[t] += 1
    weight = counts if popularity is None else {t: popularity.get(t, 0.0) for t in first}
    return sorted(first, key=lambda t: (-weight[t], first[t]))[:top_terms]


def build_taxonomy(ranked: RankedPairList, top_terms: int = 500, top_edges: int = 5000, seed: int = 0,
                   popularity: Mapping[Hashable, float] | None = None,
                   removal: str = "uniform") -> TaxonomyDag:
    """Prune to the top terms and top-scoring edges, then break cycles.

    While a cycle remains, one of its edges is deleted at random: uniformly
    (default) or, with ``removal="score"``, with probability growing as the
    edge's score falls below the cycle's best.
    """
    if removal not in ("uniform", "score"):
        raise ValueError("removal must be 'uniform' or 'score'")
    terms = select_top_terms(ranked, top_terms, popularity)
    keep = set(terms)
    adj: dict[Hashable, dict[Hashable, float]] = {t: {} for t in terms}
    kept: list[tuple[Hashable, Hashable, float]] = []
    for a, b, s in ranked:
        if len(kept) >= top_edges:
            break
        if a != b and a in keep and b in keep and b not in adj[a]:
            adj[a][b] = s
            kept.append((a, b, s))
    if not kept:
        warnings.warn("no edges survive pruning", stacklevel=2)
    rng = np.random.default_rng(seed)
    removed = []
    done: set = set()
    while True:
        cyc = find_cycle(adj, terms, done)
        if cyc is None:
            break
        if removal == "uniform":
            pick = int(rng.integers(len(cyc)))
        else:
            s = np.array([adj[a][b] for a, b in cyc])
            w = s.max() - s + 1e-12
            pick = int(rng.choice(len(cyc), p=w / w.sum()))
        a, b = cyc[pick]
        removed.append((a, b, adj[a].pop(b)))
    gone = {(a, b) for a, b, _ in removed}
    edges = tuple(e for e in kept if (e[0], e[1]) not in gone)
    return TaxonomyDag(tuple(terms), edges, tuple(removed))
