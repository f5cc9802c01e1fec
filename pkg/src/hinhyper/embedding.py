"""Node vectors: a small heterogeneous skip-gram trainer and a text import path.

The trainer runs edge-type-aware random walks (pick an incident edge type
uniformly, then a neighbour through that type uniformly) and fits
skip-gram with negative sampling by minibatch SGD. It is deterministic for
a fixed seed.

Embedding file format: a ``d=<int>`` line, then ``node_id v1 ... vd`` per
line (whitespace separated, so node ids cannot contain whitespace).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .hin import HinGraph

__all__ = ["FeatureStore", "EmbeddingConfig", "random_walks", "train_embedding",
           "import_embedding", "write_embedding"]


class FeatureStore(Mapping[str, np.ndarray]):
    """Read-only ``node_id -> vector`` map with a single dimension."""

    def __init__(self, ids: Iterable[str], matrix: np.ndarray):
        self.ids = tuple(ids)
        self.matrix = np.array(matrix, dtype=np.float64)
        self.matrix.setflags(write=False)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.ids):
            raise ValueError("matrix must have one row per node id")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("non-finite vector")
        self._pos = {n: i for i, n in enumerate(self.ids)}
        if len(self._pos) != len(self.ids):
            raise ValueError("duplicate node ids")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __getitem__(self, node_id: str) -> np.ndarray:
        return self.matrix[self._pos[node_id]]

    def __iter__(self) -> Iterator[str]:
        return iter(self.ids)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, node_id) -> bool:
        return node_id in self._pos

    def rows(self, node_ids: Iterable[str]) -> np.ndarray:
        return self.matrix[[self._pos[n] for n in node_ids]]

    def __eq__(self, other) -> bool:
        return (isinstance(other, FeatureStore) and self.ids == other.ids
                and np.array_equal(self.matrix, other.matrix))


@dataclass(frozen=True)
class EmbeddingConfig:
    walks_per_node: int = 10
    walk_length: int = 40
    window: int = 5
    negatives: int = 5
    epochs: int = 1
    learning_rate: float = 0.025
    batch_size: int = 1024


def _typed_adjacency(graph: HinGraph):
    """Flat arrays for vectorized walking.

    Node ``i`` owns slots ``slot_start[i] : slot_start[i] + n_slots[i]`` (one
    per incident edge type); slot ``s`` owns neighbours
    ``nbr[nbr_ptr[s] : nbr_ptr[s + 1]]``.
    """
    pos = {n: i for i, n in enumerate(graph.node_ids)}
    n_slots = np.zeros(len(pos), dtype=np.int64)
    slot_start = np.zeros(len(pos), dtype=np.int64)
    nbr_ptr = [0]
    nbr: list[int] = []
    for i, node in enumerate(graph.node_ids):
        by_type: dict[str, list[int]] = {}
        for other, etype in graph.neighbors(node):
            by_type.setdefault(etype, []).append(pos[other])
        slot_start[i] = len(nbr_ptr) - 1
        n_slots[i] = len(by_type)
        for etype in sorted(by_type):
            nbr.extend(by_type[etype])
            nbr_ptr.append(len(nbr))
    return n_slots, slot_start, np.asarray(nbr_ptr, dtype=np.int64), np.asarray(nbr, dtype=np.int64)


def random_walks(graph: HinGraph, walks_per_node: int, walk_length: int,
                 rng: np.random.Generator) -> np.ndarray:
    """``(walks, walk_length)`` array of node indices; isolated nodes never start a walk."""
    n_slots, slot_start, nbr_ptr, nbr = _typed_adjacency(graph)
    starts = np.flatnonzero(n_slots > 0)
    if len(starts) == 0:
        return np.zeros((0, walk_length), dtype=np.int64)
    walks = np.empty((walks_per_node * len(starts), walk_length), dtype=np.int64)
    walks[:, 0] = np.tile(starts, walks_per_node)
    for step in range(1, walk_length):
        cur = walks[:, step - 1]
        pick = (rng.random(len(cur)) * n_slots[cur]).astype(np.int64)
        slot = slot_start[cur] + pick
        lo, hi = nbr_ptr[slot], nbr_ptr[slot + 1]
        walks[:, step] = nbr[lo + (rng.random(len(cur)) * (hi - lo)).astype(np.int64)]
    return walks


def _skipgram_pairs(walks: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    centers, contexts = [], []
    length = walks.shape[1]
    for off in range(1, min(window, length - 1) + 1):
        a, b = walks[:, :-off].ravel(), walks[:, off:].ravel()
        centers += [a, b]
        contexts += [b, a]
    if not centers:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(centers), np.concatenate(contexts)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def train_embedding(graph: HinGraph, d: int = 128, config: EmbeddingConfig | None = None,
                    seed: int = 0) -> FeatureStore:
    if d <= 0:
        raise ValueError("dimension must be positive")
    if len(graph) == 0:
        raise ValueError("empty graph")
    cfg = config or EmbeddingConfig()
    rng = np.random.default_rng(seed)
    n = len(graph)
    w_in = (rng.random((n, d)) - 0.5) / d
    w_out = np.zeros((n, d))

    walks = random_walks(graph, cfg.walks_per_node, cfg.walk_length, rng)
    centers, contexts = _skipgram_pairs(walks, cfg.window)
    if len(centers):
        freq = np.bincount(walks.ravel(), minlength=n).astype(np.float64) ** 0.75
        cdf = np.cumsum(freq / freq.sum())
        total_steps = cfg.epochs * math.ceil(len(centers) / cfg.batch_size)
        step = 0
        for _ in range(cfg.epochs):
            order = rng.permutation(len(centers))
            for lo in range(0, len(order), cfg.batch_size):
                idx = order[lo:lo + cfg.batch_size]
                lr = cfg.learning_rate * max(1e-4, 1.0 - step / total_steps)
                step += 1
                c, o = centers[idx], contexts[idx]
                neg = np.minimum(np.searchsorted(cdf, rng.random((len(idx), cfg.negatives))), n - 1)
                v = w_in[c]
                u_pos = w_out[o]
                u_neg = w_out[neg]
                g_pos = _sigmoid(np.einsum("bd,bd->b", v, u_pos)) - 1.0
                g_neg = _sigmoid(np.einsum("bd,bkd->bk", v, u_neg))
                grad_v = g_pos[:, None] * u_pos + np.einsum("bk,bkd->bd", g_neg, u_neg)
                np.add.at(w_out, o, -lr * g_pos[:, None] * v)
                np.add.at(w_out, neg.ravel(), (-lr * g_neg[:, :, None] * v[:, None, :]).reshape(-1, d))
                np.add.at(w_in, c, -lr * grad_v)

    isolated = np.ones(n, dtype=bool)
    isolated[np.unique(walks)] = False
    if isolated.any():
        w_in[isolated] = rng.standard_normal((int(isolated.sum()), d)) / math.sqrt(d)
    return FeatureStore(graph.node_ids, w_in)


def write_embedding(store: FeatureStore, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"d={store.dim}\n")
        for node_id, row in zip(store.ids, store.matrix):
            fh.write(node_id + " " + " ".join(repr(float(v)) for v in row) + "\n")


def import_embedding(source) -> FeatureStore:
    """Parse an embedding file (path or iterable of lines)."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = list(source)
    if not lines or not lines[0].startswith("d="):
        raise ValueError("embedding: first line must be d=<int>")
    try:
        d = int(lines[0].strip()[2:])
    except ValueError:
        raise ValueError("embedding: bad dimension header") from None
    if d <= 0:
        raise ValueError("embedding: dimension must be positive")
    ids, rows, seen = [], [], set()
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split()
        if not parts:
            continue
        node_id, vals = parts[0], parts[1:]
        if len(vals) != d:
            raise ValueError(f"embedding line {lineno} ({node_id}): expected {d} values, got {len(vals)}")
        if node_id in seen:
            raise ValueError(f"embedding line {lineno}: duplicate node id {node_id}")
        try:
            row = [float(v) for v in vals]
        except ValueError:
            raise ValueError(f"embedding line {lineno} ({node_id}): unparsable value") from None
        if not all(math.isfinite(v) for v in row):
            raise ValueError(f"embedding line {lineno} ({node_id}): non-finite value")
        seen.add(node_id)
        ids.append(node_id)
        rows.append(row)
    return FeatureStore(ids, np.array(rows, dtype=np.float64).reshape(len(ids), d))
