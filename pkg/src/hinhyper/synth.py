"""Synthetic text-rich HINs with a planted concept hierarchy.

Concepts form a complete tree. Each author-like group node specialises in
one leaf and writes papers whose concept lies on the path from the root to
that leaf, so a group covering a concept usually also covers its ancestors.
A paper is tagged with its own concept's keyword, with every ancestor
keyword independently with probability ``p_anc``, and with a few random
keywords. Each paper appears in a venue of its author's top-level branch.

Titles mention the paper's keywords without any hypernymy pattern; a
fraction of the true pairs are additionally stated with one of six
pattern templates, so pattern hits are always true pairs.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluation import LabeledPairSet
from .hearst import FUNCTION_WORDS
from .hin import Corpus, Document, HinGraph, Schema, write_corpus, write_graph

__all__ = ["SynthConfig", "SyntheticHin", "generate_synthetic_hin", "write_dataset", "SCHEMA"]

SCHEMA = Schema(
    node_types=("paper", "keyword", "author", "venue"),
    edge_types={
        "tagged": ("paper", "keyword"),
        "writes": ("author", "paper"),
        "published_in": ("paper", "venue"),
    },
)

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "gl", "pl"]
_VOWELS = ["a", "e", "i", "o", "u"]
_FILLER = ["we", "study", "a", "new", "approach", "to", "of", "for", "with", "on", "the", "in",
           "this", "paper", "methods", "work", "results", "compare", "are", "used", "many", "is",
           "consider", "there", "and", "or", "other", "such", "as", "including", "especially"]


@dataclass(frozen=True)
class SynthConfig:
    depth: int = 3
    branching: int = 3
    terms_per_concept: int = 1
    n_docs: int = 2000
    n_groups: int = 200
    p_anc: float = 0.3
    level_bias: float = 0.0
    noise_tags: float = 0.2
    venues_per_branch: int = 2
    venue_noise: float = 0.1
    hearst_fraction: float = 0.2
    multiword_fraction: float = 0.3
    negatives_per_positive: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("p_anc", "venue_noise", "hearst_fraction", "multiword_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("depth", "branching", "terms_per_concept", "n_docs", "n_groups", "venues_per_branch"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.noise_tags < 0 or self.negatives_per_positive < 0:
            raise ValueError("noise_tags and negatives_per_positive must be non-negative")
        if self.n_groups > self.n_docs:
            raise ValueError(f"infeasible: {self.n_groups} groups for {self.n_docs} documents")

    @property
    def n_concepts(self) -> int:
        return sum(self.branching ** i for i in range(self.depth + 1))


@dataclass(frozen=True)
class SyntheticHin:
    graph: HinGraph
    corpus: Corpus
    labels: LabeledPairSet          # keyed by keyword surface
    parent: tuple[int, ...]         # parent concept per concept, -1 for the root
    concept_terms: tuple[tuple[str, ...], ...]   # keyword node ids per concept
    surfaces: dict                  # keyword node id -> surface
    pattern_pairs: frozenset        # (hypernym surface, hyponym surface) stated by patterns

    def planted_edges(self) -> list[tuple[str, str]]:
        """Parent -> child keyword node-id pairs."""
        return [(a, b) for c, p in enumerate(self.parent) if p >= 0
                for a in self.concept_terms[p] for b in self.concept_terms[c]]


def _tree(depth: int, branching: int):
    parent, level = [-1], [0]
    frontier = [0]
    for lvl in range(1, depth + 1):
        nxt = []
        for p in frontier:
            for _ in range(branching):
                parent.append(p)
                level.append(lvl)
                nxt.append(len(parent) - 1)
        frontier = nxt
    return parent, level


def _path(parent, c):
    out = [c]
    while parent[out[-1]] >= 0:
        out.append(parent[out[-1]])
    return out[::-1]


def _surfaces(n: int, multiword: float, rng) -> list[str]:
    banned = set(_FILLER) | FUNCTION_WORDS
    seen, out = set(), []

    def word():
        while True:
            w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(int(rng.integers(2, 4))))
            if w not in banned:
                return w

    while len(out) < n:
        s = word() + (" " + word() if rng.random() < multiword else "")
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out


def _plural(surface: str) -> list[str]:
    toks = surface.split(" ")
    return toks[:-1] + [toks[-1] + "s"]


def _pattern_sentence(hyper: str, hypos: list[str], rng) -> list[str]:
    ys = _plural(hyper)
    xs: list[str] = []
    for i, x in enumerate(hypos):
        if i:
            xs += [","] if i < len(hypos) - 1 else ["and"]
        xs += x.split(" ")
    left: list[str] = []
    for i, x in enumerate(hypos):
        if i:
            left += [","]
        left += x.split(" ")
    kind = int(rng.integers(6))
    if kind == 0:
        return ["we", "study"] + ys + ["such", "as"] + xs + ["."]
    if kind == 1:
        return ["we", "consider", "such"] + ys + ["as"] + xs + ["."]
    if kind == 2:
        return ["we", "compare"] + left + ["or", "other"] + ys + ["."]
    if kind == 3:
        return ["we", "compare"] + left + ["and", "other"] + ys + ["."]
    if kind == 4:
        return ["many"] + ys + [",", "including"] + xs + [",", "are", "used", "."]
    return ["there", "are", "many"] + ys + [",", "especially"] + xs + ["."]


def generate_synthetic_hin(config: SynthConfig = SynthConfig()) -> SyntheticHin:
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    parent, level = _tree(cfg.depth, cfg.branching)
    n_concepts = len(parent)
    leaves = [c for c in range(n_concepts) if level[c] == cfg.depth]
    branch = [(_path(parent, c) + [c])[min(1, level[c])] for c in range(n_concepts)]

    n_terms = n_concepts * cfg.terms_per_concept
    surfaces = _surfaces(n_terms, cfg.multiword_fraction, rng)
    concept_terms = tuple(tuple(f"k{c * cfg.terms_per_concept + j}" for j in range(cfg.terms_per_concept))
                          for c in range(n_concepts))
    surface_of = {f"k{i}": surfaces[i] for i in range(n_terms)}
    kw_ids = [f"k{i}" for i in range(n_terms)]

    branches = sorted(set(branch[c] for c in leaves))
    venue_of_branch = {b: [f"v{i * cfg.venues_per_branch + j}" for j in range(cfg.venues_per_branch)]
                       for i, b in enumerate(branches)}
    all_venues = [v for b in branches for v in venue_of_branch[b]]

    order = rng.permutation(len(leaves))
    focus = [leaves[order[g % len(leaves)]] for g in range(cfg.n_groups)]
    sizes = [len(c) for c in np.array_split(np.arange(cfg.n_docs), cfg.n_groups)]

    nodes = [(k, "keyword", surface_of[k]) for k in kw_ids]
    nodes += [(f"a{g}", "author") for g in range(cfg.n_groups)]
    nodes += [(v, "venue") for v in all_venues]
    edges = []
    docs = []
    level_w = np.array([(lvl + 1.0) ** cfg.level_bias for lvl in range(cfg.depth + 1)])
    pid = 0
    for g in range(cfg.n_groups):
        path = _path(parent, focus[g])
        w = level_w[: len(path)] / level_w[: len(path)].sum()
        for _ in range(sizes[g]):
            concept = path[int(rng.choice(len(path), p=w))]
            tags = [concept_terms[concept][int(rng.integers(cfg.terms_per_concept))]]
            for anc in _path(parent, concept)[:-1]:
                if rng.random() < cfg.p_anc:
                    tags.append(concept_terms[anc][int(rng.integers(cfg.terms_per_concept))])
            for _ in range(int(rng.poisson(cfg.noise_tags))):
                tags.append(kw_ids[int(rng.integers(n_terms))])
            tags = list(dict.fromkeys(tags))
            if rng.random() < cfg.venue_noise:
                venue = all_venues[int(rng.integers(len(all_venues)))]
            else:
                opts = venue_of_branch[branch[focus[g]]]
                venue = opts[int(rng.integers(len(opts)))]
            p = f"p{pid}"
            pid += 1
            nodes.append((p, "paper"))
            edges.append((f"a{g}", p, "writes"))
            edges += [(p, k, "tagged") for k in tags]
            edges.append((p, venue, "published_in"))
            title = ["a", "study", "of"]
            for i, k in enumerate(tags):
                if i:
                    title.append("and")
                title += surface_of[k].split(" ")
            docs.append([p, [title + ["."]]])

    positives = []
    for c in range(n_concepts):
        for anc in _path(parent, c)[:-1]:
            positives += [(a, b) for a in concept_terms[anc] for b in concept_terms[c]]

    n_pattern = int(round(cfg.hearst_fraction * len(positives)))
    chosen = sorted(rng.choice(len(positives), size=n_pattern, replace=False)) if n_pattern else []
    pattern_pairs = set()
    for i in chosen:
        a, b = positives[i]
        sent = _pattern_sentence(surface_of[a], [surface_of[b]], rng)
        docs[int(rng.integers(len(docs)))][1].append(sent)
        pattern_pairs.add((surface_of[a], surface_of[b]))

    labels = _labels(positives, kw_ids, parent, concept_terms, cfg, rng)
    graph = HinGraph.build(SCHEMA, nodes, edges)
    corpus = Corpus(tuple(Document(o, tuple(tuple(s) for s in sents)) for o, sents in docs))
    labeled = LabeledPairSet(tuple((surface_of[a], surface_of[b], y) for a, b, y in labels))
    return SyntheticHin(graph, corpus, labeled, tuple(parent), concept_terms, surface_of,
                        frozenset(pattern_pairs))


def _labels(positives, kw_ids, parent, concept_terms, cfg, rng):
    """Positives plus corrupted pairs: half keep the hypernym, half keep the hyponym.

    When one slot runs out of admissible corruptions (the root has no
    non-descendants) the shortfall moves to the other slot.
    """
    concept_of = {k: c for c, ks in enumerate(concept_terms) for k in ks}
    anc = {c: set(_path(parent, c)[:-1]) for c in range(len(parent))}
    taken = set(positives)
    out = [(a, b, True) for a, b in positives]

    def admissible(pair):
        return (pair[0] != pair[1] and pair not in taken
                and concept_of[pair[0]] not in anc[concept_of[pair[1]]])

    def draw(a, b, slot, quota):
        pairs = [(a, x) if slot == 0 else (x, b) for x in kw_ids]
        pool = [p for p in pairs if admissible(p)]
        pick = rng.permutation(len(pool))[:quota]
        for i in sorted(pick):
            taken.add(pool[i])
            out.append((pool[i][0], pool[i][1], False))
        return len(pick)

    total = cfg.negatives_per_positive
    for a, b in positives:
        made = draw(a, b, 0, total // 2)
        made += draw(a, b, 1, total - made)
        if made < total:
            draw(a, b, 0, total - made)
    return out


def write_dataset(data: SyntheticHin, directory) -> dict[str, Path]:
    """Write nodes/edges/schema/corpus/labels files; returns their paths."""
    d = Path(directory)
    os.makedirs(d, exist_ok=True)
    paths = {name: d / fname for name, fname in [
        ("nodes", "nodes.tsv"), ("edges", "edges.tsv"), ("schema", "schema.json"),
        ("corpus", "corpus.jsonl"), ("labels", "labels.tsv")]}
    write_graph(data.graph, paths["nodes"], paths["edges"], paths["schema"])
    write_corpus(data.corpus, paths["corpus"])
    data.labels.write_tsv(paths["labels"])
    return paths
