"""Hypernymy scoring model trained with a contrastive hinge loss.

score(t1 -> t2) = phi(f1)' diag(sigma) phi(f2) + h' psi(g12)

phi: dropout -> affine (d -> h_node) -> tanh, shared by both terms
psi: dropout -> affine (N -> N) -> tanh -> dropout -> affine (N -> N // 2) -> tanh

Training minimises, over seed pairs (a, b) and sampled negatives x with
(a, x) not a seed pair, ``sum max(0, 1 - s(a -> b) + s(a -> x))`` by plain
minibatch SGD with hand-written gradients.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dih import PairwiseFeatures
from .hearst import SeedPairSet

__all__ = [
    "ModelParams",
    "TrainConfig",
    "TermFeatures",
    "Batch",
    "RankedPairList",
    "init_params",
    "score",
    "score_batch",
    "loss",
    "loss_and_grads",
    "make_batch",
    "sample_negatives",
    "train",
    "gradient_check",
    "rank_pairs",
    "cross_validate",
    "save_checkpoint",
    "load_checkpoint",
]

log = logging.getLogger(__name__)

PARAM_NAMES = ("w_node", "b_node", "w_pair1", "b_pair1", "w_pair2", "b_pair2", "sigma", "h")
CHECKPOINT_VERSION = 1


@dataclass(eq=False)
class ModelParams:
    w_node: np.ndarray
    b_node: np.ndarray
    w_pair1: np.ndarray
    b_pair1: np.ndarray
    w_pair2: np.ndarray
    b_pair2: np.ndarray
    sigma: np.ndarray
    h: np.ndarray
    dropout_node: float = 0.7
    dropout_pair: float = 0.1
    loss_trace: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        h_node, d = self.w_node.shape
        n = self.w_pair1.shape[1]
        expect = {
            "b_node": (h_node,), "w_pair1": (n, n), "b_pair1": (n,), "w_pair2": (n // 2, n),
            "b_pair2": (n // 2,), "sigma": (h_node,), "h": (n // 2,),
        }
        for name, shape in expect.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def shapes(self) -> dict[str, int]:
        return {"d": self.w_node.shape[1], "h_node": self.w_node.shape[0], "N": self.w_pair1.shape[1]}

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        return ((self.dropout_node, self.dropout_pair) == (other.dropout_node, other.dropout_pair)
                and all(np.array_equal(a, getattr(other, k)) for k, a in self.arrays().items()))

    def copy(self) -> "ModelParams":
        return replace(self, **{k: v.copy() for k, v in self.arrays().items()})


@dataclass(frozen=True)
class TrainConfig:
    negatives: int = 10
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 0.05
    seed: int = 0
    dropout_node: float = 0.7
    dropout_pair: float = 0.1
    h_node: int = 256
    corrupt: str = "hyponym"

    def __post_init__(self):
        if self.negatives < 1:
            raise ValueError("negative ratio must be >= 1")
        for rate in (self.dropout_node, self.dropout_pair):
            if not 0.0 <= rate < 1.0:
                raise ValueError("dropout rates must lie in [0, 1)")
        if self.corrupt not in ("hyponym", "hypernym"):
            raise ValueError("corrupt must be 'hyponym' or 'hypernym'")


def init_params(d: int, n_pair: int, h_node: int = 256, rng: np.random.Generator | None = None,
                dropout_node: float = 0.7, dropout_pair: float = 0.1) -> ModelParams:
    if n_pair < 2:
        raise ValueError("pairwise feature dimension must be >= 2")
    rng = rng if rng is not None else np.random.default_rng(0)

    def uni(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    half = n_pair // 2
    return ModelParams(
        w_node=uni((h_node, d), d), b_node=uni((h_node,), d),
        w_pair1=uni((n_pair, n_pair), n_pair), b_pair1=uni((n_pair,), n_pair),
        w_pair2=uni((half, n_pair), n_pair), b_pair2=uni((half,), n_pair),
        sigma=np.ones(h_node), h=np.zeros(half),
        dropout_node=dropout_node, dropout_pair=dropout_pair,
    )


def _mask(rng, shape, rate):
    if rate <= 0.0:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)


def _forward(p: ModelParams, f1, f2, g, rng=None):
    """Row-wise scores plus the cache needed by :func:`_backward`."""
    train = rng is not None
    m1 = _mask(rng, f1.shape, p.dropout_node) if train else None
    m2 = _mask(rng, f2.shape, p.dropout_node) if train else None
    m3 = _mask(rng, g.shape, p.dropout_pair) if train else None
    x1 = f1 if m1 is None else f1 * m1
    x2 = f2 if m2 is None else f2 * m2
    p1 = np.tanh(x1 @ p.w_node.T + p.b_node)
    p2 = np.tanh(x2 @ p.w_node.T + p.b_node)
    q0 = g if m3 is None else g * m3
    a1 = np.tanh(q0 @ p.w_pair1.T + p.b_pair1)
    m4 = _mask(rng, a1.shape, p.dropout_pair) if train else None
    q1 = a1 if m4 is None else a1 * m4
    a2 = np.tanh(q1 @ p.w_pair2.T + p.b_pair2)
    s = (p1 * p2) @ p.sigma + a2 @ p.h
    return s, (x1, x2, p1, p2, q0, a1, m4, q1, a2)


def _backward(p: ModelParams, cache, ds: np.ndarray) -> dict[str, np.ndarray]:
    x1, x2, p1, p2, q0, a1, m4, q1, a2 = cache
    grads = {"sigma": ds @ (p1 * p2), "h": ds @ a2}
    dz1 = (ds[:, None] * p.sigma * p2) * (1.0 - p1 ** 2)
    dz2 = (ds[:, None] * p.sigma * p1) * (1.0 - p2 ** 2)
    grads["w_node"] = dz1.T @ x1 + dz2.T @ x2
    grads["b_node"] = dz1.sum(0) + dz2.sum(0)
    dzb = (ds[:, None] * p.h) * (1.0 - a2 ** 2)
    grads["w_pair2"] = dzb.T @ q1
    grads["b_pair2"] = dzb.sum(0)
    da1 = dzb @ p.w_pair2
    if m4 is not None:
        da1 = da1 * m4
    dza = da1 * (1.0 - a1 ** 2)
    grads["w_pair1"] = dza.T @ q0
    grads["b_pair1"] = dza.sum(0)
    return grads


def _check_shapes(p: ModelParams, f1, f2, g):
    s = p.shapes
    if f1.shape[-1] != s["d"] or f2.shape[-1] != s["d"]:
        raise ValueError(f"node feature dimension {f1.shape[-1]}/{f2.shape[-1]} != {s['d']}")
    if g.shape[-1] != s["N"]:
        raise ValueError(f"pairwise feature dimension {g.shape[-1]} != {s['N']}")


def score_batch(p: ModelParams, f1, f2, g, mode: str = "infer", rng: np.random.Generator | None = None) -> np.ndarray:
    f1, f2, g = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in (f1, f2, g))
    _check_shapes(p, f1, f2, g)
    if mode == "train":
        if rng is None:
            raise ValueError("train mode needs an rng for dropout")
    elif mode == "infer":
        rng = None
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _forward(p, f1, f2, g, rng)[0]


def score(p: ModelParams, f1, f2, g12, mode: str = "infer", rng: np.random.Generator | None = None) -> float:
    return float(score_batch(p, f1, f2, g12, mode, rng)[0])


class TermFeatures:
    """Nodewise vectors indexed by term id plus a pairwise feature table."""

    def __init__(self, node: np.ndarray, pairwise: PairwiseFeatures):
        self.node = np.asarray(node, dtype=np.float64)
        self.pairwise = pairwise

    @classmethod
    def from_store(cls, vocab, store: Mapping[str, np.ndarray], pairwise: PairwiseFeatures) -> "TermFeatures":
        missing = [t.surface for t in vocab if t.node_id not in store]
        if missing:
            raise KeyError(f"no node vector for {len(missing)} term(s): {missing[:5]}")
        return cls(np.stack([np.asarray(store[t.node_id]) for t in vocab]), pairwise)

    @property
    def d(self) -> int:
        return self.node.shape[1]

    @property
    def n(self) -> int:
        return self.pairwise.dim

    def pair_rows(self, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
        missing = self.pairwise.missing(pairs)
        if missing:
            raise KeyError(f"no pairwise features for {len(missing)} pair(s), e.g. {missing[:5]}")
        return self.pairwise.rows(pairs)


@dataclass
class Batch:
    """Positives ``(a, b)`` with ``L`` negatives each; arrays are feature rows."""

    f_hyper: np.ndarray   # (P, d)
    f_hypo: np.ndarray    # (P, d)
    g_pos: np.ndarray     # (P, N)
    f_neg: np.ndarray     # (P, L, d)
    g_neg: np.ndarray     # (P, L, N)
    f_neg_hyper: np.ndarray | None = None  # (P, L, d) when the hypernym slot is corrupted

    @property
    def size(self) -> tuple[int, int]:
        return self.f_neg.shape[0], self.f_neg.shape[1]


def make_batch(features: TermFeatures, positives: Sequence[tuple[int, int]],
               negatives: Sequence[Sequence[int]], corrupt: str = "hyponym") -> Batch:
    pos = [tuple(p) for p in positives]
    neg = np.asarray(negatives, dtype=np.int64).reshape(len(pos), -1)
    a = np.array([p[0] for p in pos], dtype=np.int64)
    b = np.array([p[1] for p in pos], dtype=np.int64)
    if corrupt == "hyponym":
        neg_pairs = [(int(a[i]), int(x)) for i in range(len(pos)) for x in neg[i]]
    else:
        neg_pairs = [(int(x), int(b[i])) for i in range(len(pos)) for x in neg[i]]
    P, L = neg.shape
    g_neg = features.pair_rows(neg_pairs).reshape(P, L, -1)
    if corrupt == "hyponym":
        return Batch(features.node[a], features.node[b], features.pair_rows(pos), features.node[neg], g_neg)
    return Batch(features.node[a], features.node[b], features.pair_rows(pos),
                 np.broadcast_to(features.node[b][:, None, :], (P, L, features.d)).copy(), g_neg,
                 f_neg_hyper=features.node[neg])


def _batch_rows(batch: Batch):
    P, L = batch.size
    d = batch.f_hyper.shape[1]
    neg_hyper = (batch.f_neg_hyper.reshape(P * L, d) if batch.f_neg_hyper is not None
                 else np.repeat(batch.f_hyper, L, axis=0))
    f1 = np.vstack([batch.f_hyper, neg_hyper])
    f2 = np.vstack([batch.f_hypo, batch.f_neg.reshape(P * L, d)])
    g = np.vstack([batch.g_pos, batch.g_neg.reshape(P * L, -1)])
    return f1, f2, g


def loss_and_grads(p: ModelParams, batch: Batch, rng: np.random.Generator | None = None):
    """Hinge loss (sum over all positive/negative pairs) and its gradients."""
    P, L = batch.size
    f1, f2, g = _batch_rows(batch)
    _check_shapes(p, f1, f2, g)
    s, cache = _forward(p, f1, f2, g, rng)
    s_pos, s_neg = s[:P], s[P:].reshape(P, L)
    margins = 1.0 - s_pos[:, None] + s_neg
    active = margins > 0
    value = float(margins[active].sum())
    ds = np.concatenate([-active.sum(axis=1).astype(np.float64), active.ravel().astype(np.float64)])
    return value, _backward(p, cache, ds)


def loss(p: ModelParams, positives, negatives, features: TermFeatures, corrupt: str = "hyponym") -> float:
    """Hinge loss over positives and their negatives, without dropout."""
    return loss_and_grads(p, make_batch(features, positives, negatives, corrupt))[0]


def sample_negatives(seeds: SeedPairSet, pool: Sequence[int], L: int, rng: np.random.Generator,
                     corrupt: str = "hyponym") -> np.ndarray:
    """``(|S|, L)`` negative term ids; no resulting pair is in ``seeds``."""
    pool = np.asarray(sorted(set(int(t) for t in pool)), dtype=np.int64)
    pairs = seeds.as_pairs()
    fixed_idx = 0 if corrupt == "hyponym" else 1
    banned: dict[int, set[int]] = {}
    for pr in pairs:
        banned.setdefault(pr[fixed_idx], {pr[fixed_idx]}).add(pr[1 - fixed_idx])
    allowed = {k: pool[~np.isin(pool, list(v))] for k, v in banned.items()}
    out = np.empty((len(pairs), L), dtype=np.int64)
    for i, pr in enumerate(pairs):
        cand = allowed[pr[fixed_idx]]
        if len(cand) == 0:
            raise ValueError(f"no admissible negatives for term {pr[fixed_idx]}")
        out[i] = cand[rng.integers(len(cand), size=L)]
    return out


def train(seeds: SeedPairSet, features: TermFeatures, config: TrainConfig = TrainConfig(),
          negative_pool: Iterable[int] | None = None) -> ModelParams:
    """Minibatch SGD on the hinge loss with negatives resampled every epoch.

    ``negative_pool`` defaults to the terms occurring in ``seeds``. The
    returned params carry ``loss_trace``: the full loss, without dropout, on
    each epoch's negatives after that epoch's updates.
    """
    if len(seeds) == 0:
        raise ValueError("no seed pairs")
    rng = np.random.default_rng(config.seed)
    params = init_params(features.d, features.n, config.h_node, rng, config.dropout_node, config.dropout_pair)
    pool = sorted(set(negative_pool) if negative_pool is not None else seeds.terms())
    positives = seeds.as_pairs()
    missing_terms = sorted({t for pr in positives for t in pr} - set(range(len(features.node))))
    if missing_terms:
        raise KeyError(f"no node features for terms {missing_terms[:10]}")
    missing_pairs = features.pairwise.missing(positives)
    if missing_pairs:
        raise KeyError(f"no pairwise features for seed pairs {missing_pairs[:10]}")
    trace = []
    for epoch in range(config.epochs):
        neg = sample_negatives(seeds, pool, config.negatives, rng, config.corrupt)
        batch_all = make_batch(features, positives, neg, config.corrupt)
        order = rng.permutation(len(positives))
        for lo in range(0, len(order), config.batch_size):
            idx = order[lo:lo + config.batch_size]
            sub = Batch(batch_all.f_hyper[idx], batch_all.f_hypo[idx], batch_all.g_pos[idx],
                        batch_all.f_neg[idx], batch_all.g_neg[idx],
                        None if batch_all.f_neg_hyper is None else batch_all.f_neg_hyper[idx])
            _, grads = loss_and_grads(params, sub, rng)
            step = config.learning_rate / len(idx)
            for name, grad in grads.items():
                getattr(params, name)[...] -= step * grad
        trace.append(loss_and_grads(params, batch_all)[0])
        if (epoch + 1) % 50 == 0:
            log.debug("epoch %d loss %.4f", epoch + 1, trace[-1])
    params.loss_trace = tuple(trace)
    return params


def numerical_gradients(p: ModelParams, batch: Batch, epsilon: float = 1e-5) -> dict[str, np.ndarray]:
    out = {}
    for name, arr in p.arrays().items():
        num = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), num.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + epsilon
            up = loss_and_grads(p, batch)[0]
            flat[i] = keep - epsilon
            down = loss_and_grads(p, batch)[0]
            flat[i] = keep
            gflat[i] = (up - down) / (2.0 * epsilon)
        out[name] = num
    return out


def gradient_check(p: ModelParams, sample: Batch, epsilon: float = 1e-5) -> float:
    """Largest relative error between analytic and central-difference gradients.

    The error for each parameter array is ``|a - n| / (|a| + |n|)`` in the
    Euclidean norm (0 when both vanish); the maximum over arrays is
    returned. Dropout is not applied.
    """
    _, analytic = loss_and_grads(p, sample)
    numeric = numerical_gradients(p, sample, epsilon)
    worst = 0.0
    for name in PARAM_NAMES:
        a, n = analytic[name], numeric[name]
        denom = np.linalg.norm(a) + np.linalg.norm(n)
        if denom > 0:
            worst = max(worst, float(np.linalg.norm(a - n) / denom))
    return worst


@dataclass(frozen=True)
class RankedPairList:
    """``(hypernym, hyponym, score)`` entries in non-increasing score order."""

    entries: tuple[tuple[object, object, float], ...]

    def __post_init__(self):
        scores = [e[2] for e in self.entries]
        if any(b > a for a, b in zip(scores, scores[1:])):
            raise ValueError("scores must be non-increasing")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @classmethod
    def from_scores(cls, pairs: Sequence[tuple], scores: Sequence[float], tie_seed: int = 0) -> "RankedPairList":
        """Seeded shuffle, then stable descending sort: ties land in random but reproducible order."""
        scores = np.asarray(scores, dtype=np.float64)
        perm = np.random.default_rng(tie_seed).permutation(len(pairs))
        order = perm[np.argsort(-scores[perm], kind="stable")]
        return cls(tuple((pairs[i][0], pairs[i][1], float(scores[i])) for i in order))

    def write_tsv(self, path, name=lambda t: t) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for a, b, s in self.entries:
                fh.write(f"{name(a)}\t{name(b)}\t{s!r}\n")

    @classmethod
    def read_tsv(cls, path, parse=lambda t: t) -> "RankedPairList":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path} line {lineno}: expected 3 fields")
                entries.append((parse(parts[0]), parse(parts[1]), float(parts[2])))
        return cls(tuple(entries))


def rank_pairs(p: ModelParams, candidate_pairs: Sequence[tuple[int, int]], features: TermFeatures,
               tie_seed: int = 0) -> RankedPairList:
    pairs = [tuple(int(t) for t in pr) for pr in candidate_pairs]
    if not pairs:
        return RankedPairList(())
    a = np.array([x for x, _ in pairs])
    b = np.array([y for _, y in pairs])
    s = score_batch(p, features.node[a], features.node[b], features.pair_rows(pairs))
    return RankedPairList.from_scores(pairs, s, tie_seed)


def cross_validate(seeds: SeedPairSet, features: TermFeatures, configs: Sequence[TrainConfig],
                   k: int = 5, seed: int = 0, negative_pool: Iterable[int] | None = None):
    """Mean held-out hinge loss per config over ``k`` folds; returns ``(best_config, scores)``."""
    from .hearst import split_folds

    folds = split_folds(seeds, k, seed)
    pool = sorted(set(negative_pool) if negative_pool is not None else seeds.terms())
    results = []
    for cfg in configs:
        fold_losses = []
        for i, held in enumerate(folds):
            train_set = SeedPairSet(tuple(sorted(pr for j, f in enumerate(folds) if j != i for pr in f)))
            params = train(train_set, features, cfg, pool)
            rng = np.random.default_rng(seed + i)
            neg = sample_negatives(seeds, pool, cfg.negatives, rng, cfg.corrupt)
            held_idx = [seeds.pairs.index(pr) for pr in held]
            batch = make_batch(features, held.as_pairs(), neg[held_idx], cfg.corrupt)
            fold_losses.append(loss_and_grads(params, batch)[0] / len(held))
        results.append(float(np.mean(fold_losses)))
    best = configs[int(np.argmin(results))]
    return best, results


def save_checkpoint(p: ModelParams, path, layout_fingerprint: str = "") -> None:
    doc = {
        "format": "hinhyper-model",
        "version": CHECKPOINT_VERSION,
        "shapes": p.shapes,
        "layout_fingerprint": layout_fingerprint,
        "dropout": {"node": p.dropout_node, "pair": p.dropout_pair},
        "params": {k: v.tolist() for k, v in p.arrays().items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path, layout_fingerprint: str | None = None) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "hinhyper-model" or doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version-{CHECKPOINT_VERSION} model checkpoint")
    if layout_fingerprint is not None and doc["layout_fingerprint"] != layout_fingerprint:
        raise ValueError(f"{path}: feature layout does not match the checkpoint")
    arrays = {k: np.array(v, dtype=np.float64) for k, v in doc["params"].items()}
    s = doc["shapes"]
    arrays["w_pair2"] = arrays["w_pair2"].reshape(s["N"] // 2, s["N"])
    p = ModelParams(**arrays, dropout_node=doc["dropout"]["node"], dropout_pair=doc["dropout"]["pair"])
    if p.shapes != s:
        raise ValueError(f"{path}: shape header disagrees with arrays")
    return p
