"""Synthetic comparison: multi-context model vs a Simplest-only model vs pattern hits.

Both learned models share the embedding, the weak supervision, the training
configuration and the seeds; only the pairwise feature grid differs.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .contexts import build_context, build_simplest
from .dih import MEASURES, compute_pairwise_features
from .embedding import EmbeddingConfig, train_embedding
from .evaluation import LabeledPairSet, evaluate
from .hearst import extract_seed_pairs
from .hin import target_vocabulary
from .model import RankedPairList, TermFeatures, TrainConfig, rank_pairs, train
from .synth import SynthConfig, generate_synthetic_hin

__all__ = ["BenchmarkConfig", "run_benchmark", "FULL_CONTEXTS"]

FULL_CONTEXTS = ("simplest", "groupby:author", "groupby:venue", "cluster:8", "cluster:32", "cluster:128")


@dataclass(frozen=True)
class BenchmarkConfig:
    synth: SynthConfig = SynthConfig(depth=3, branching=4, n_docs=800, n_groups=160, p_anc=0.3,
                                     noise_tags=0.5, hearst_fraction=0.25)
    contexts: tuple[str, ...] = FULL_CONTEXTS
    dim: int = 32
    embedding: EmbeddingConfig = EmbeddingConfig(walks_per_node=5, walk_length=20)
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=100))
    ks: tuple[int, ...] = (100, 1000)


def _by_id(labels: LabeledPairSet, vocab) -> LabeledPairSet:
    return LabeledPairSet(tuple((vocab.id_of_surface(a), vocab.id_of_surface(b), y) for a, b, y in labels))


def run_benchmark(config: BenchmarkConfig = BenchmarkConfig(), seed: int = 0) -> dict[str, dict]:
    """Metric reports for ``all_contexts``, ``simplest`` and ``hearst`` on one seeded dataset."""
    data = generate_synthetic_hin(replace(config.synth, seed=seed))
    graph = data.graph
    vocab = target_vocabulary(graph, "keyword")
    labels = _by_id(data.labels, vocab)
    seeds = extract_seed_pairs(data.corpus, vocab)
    store = train_embedding(graph, config.dim, config.embedding, seed=seed + 1)

    simplest = build_simplest(graph, "keyword", vocab)
    contexts = [build_context(spec, graph, "keyword", simplest=simplest, node_vectors=store, seed=seed + 2)
                for spec in config.contexts]

    pool = sorted(set(range(len(vocab))))
    train_pairs = {(a, x) for a, _ in seeds.as_pairs() for x in pool if a != x}
    pairs = sorted(train_pairs | set(labels.pairs()))
    node = np.stack([store[t.node_id] for t in vocab])
    tcfg = replace(config.train, seed=seed + 3)

    reports = {}
    for name, ctxs in (("all_contexts", contexts), ("simplest", [simplest])):
        pw = compute_pairwise_features(pairs, ctxs, MEASURES, n_terms=len(vocab))
        feats = TermFeatures(node, pw)
        params = train(seeds, feats, tcfg, pool)
        ranked = rank_pairs(params, labels.pairs(), feats, tie_seed=seed)
        reports[name] = evaluate(ranked, labels, config.ks, tie_seed=seed)

    hits = seeds.pair_set
    scores = [1.0 if p in hits else 0.0 for p in labels.pairs()]
    reports["hearst"] = evaluate(RankedPairList.from_scores(labels.pairs(), scores, seed), labels,
                                 config.ks, tie_seed=seed)
    return reports
