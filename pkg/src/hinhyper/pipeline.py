"""Staged, resumable pipeline driven by a JSON config.

Every stage reads and writes plain files under ``output_dir``. A manifest
records, per stage, a hash of its parameters and of every input and output
file. A stage is skipped when all of those still match; an intermediate
whose bytes no longer match the manifest is refused rather than silently
reused.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import platform
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .contexts import build_context, build_simplest, parse_context_spec, read_context, write_context
from .dih import MEASURES, candidate_pairs, compute_pairwise_features, read_pairwise, write_pairwise
from .embedding import EmbeddingConfig, import_embedding, train_embedding, write_embedding
from .evaluation import LabeledPairSet, evaluate, write_report
from .hearst import DEFAULT_PATTERNS, extract_seed_pairs, read_seeds, write_seeds
from .hin import HinGraph, Vocabulary, load_corpus, load_graph, target_vocabulary
from .model import (RankedPairList, TermFeatures, TrainConfig, load_checkpoint, rank_pairs,
                    save_checkpoint, train)
from .taxonomy import build_taxonomy

__all__ = ["STAGES", "SEED_OFFSETS", "PipelineConfig", "PipelineError", "IntegrityError", "Pipeline",
           "run_pipeline", "file_hash"]

log = logging.getLogger(__name__)

STAGES = ("extract-seeds", "embed", "build-contexts", "compute-features", "train", "score",
          "evaluate", "build-taxonomy")

# per-stage seeds are the global seed plus these offsets
SEED_OFFSETS = {"embed": 101, "build-contexts": 202, "train": 303, "score": 404, "evaluate": 404,
                "build-taxonomy": 505}

MANIFEST = "manifest.json"


class PipelineError(RuntimeError):
    pass


class IntegrityError(PipelineError):
    pass


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _params_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class PipelineConfig:
    nodes: Path
    edges: Path
    schema: Path
    corpus: Path
    output_dir: Path
    labels: Path | None = None
    target_type: str = "keyword"
    patterns: tuple[str, ...] = DEFAULT_PATTERNS
    contexts: tuple[str, ...] = ("simplest",)
    measures: tuple[str, ...] = MEASURES
    embedding_dim: int = 128
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    embedding_import: Path | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    candidates: str = "auto"
    ks: tuple[int, ...] = (100, 1000)
    top_terms: int = 500
    top_edges: int = 5000
    removal: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        for spec in self.contexts:
            parse_context_spec(spec)
        if not self.contexts:
            raise ValueError("at least one context is required")
        bad = [m for m in self.measures if m not in MEASURES]
        if bad:
            raise ValueError(f"unknown measures {bad}")
        if self.candidates not in ("auto", "labels", "cooccur", "all"):
            raise ValueError(f"unknown candidate policy {self.candidates!r}")
        if self.candidates == "labels" and self.labels is None:
            raise ValueError("candidate policy 'labels' needs a labels file")

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "PipelineConfig":
        base = Path(base_dir)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)

        def path(key):
            if doc.get(key) is not None:
                doc[key] = (base / doc[key]).resolve()

        for key in ("nodes", "edges", "schema", "corpus", "output_dir", "labels", "embedding_import"):
            path(key)
        if "embedding" in doc:
            doc["embedding"] = EmbeddingConfig(**doc["embedding"])
        if "train" in doc:
            doc["train"] = TrainConfig(**doc["train"])
        for key in ("patterns", "contexts", "measures", "ks"):
            if key in doc:
                doc[key] = tuple(doc[key])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ValueError(f"config: {exc}") from None

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls.from_dict(doc, Path(path).parent)

    def stage_seed(self, stage: str) -> int:
        return self.seed + SEED_OFFSETS.get(stage, 0)


@dataclass
class _Stage:
    inputs: list[Path]
    outputs: list[Path]
    params: dict
    run: Callable[[], None]


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.cfg = config
        self.out = Path(config.output_dir)
        self._graph: HinGraph | None = None
        self._vocab: Vocabulary | None = None
        self.log: list[tuple[str, str]] = []

    # cached inputs
    @property
    def graph(self) -> HinGraph:
        if self._graph is None:
            self._graph = load_graph(self.cfg.nodes, self.cfg.edges, self.cfg.schema)
        return self._graph

    @property
    def vocab(self) -> Vocabulary:
        if self._vocab is None:
            self._vocab = target_vocabulary(self.graph, self.cfg.target_type)
        return self._vocab

    # artifact paths
    def path(self, name: str) -> Path:
        return self.out / name

    def context_paths(self) -> list[Path]:
        return [self.path(f"contexts/{i:02d}.jsonl") for i in range(len(self.cfg.contexts))]

    @property
    def graph_files(self) -> list[Path]:
        return [self.cfg.nodes, self.cfg.edges, self.cfg.schema]

    def _stage(self, name: str) -> _Stage | None:
        c, p = self.cfg, self.path
        if name == "extract-seeds":
            return _Stage(self.graph_files + [c.corpus], [p("seeds.tsv")],
                          {"target": c.target_type, "patterns": list(c.patterns)}, self._extract)
        if name == "embed":
            if c.embedding_import is not None:
                return _Stage([c.embedding_import], [p("embedding.txt")], {"import": True}, self._embed)
            return _Stage(self.graph_files, [p("embedding.txt")],
                          {"dim": c.embedding_dim, "cfg": asdict(c.embedding), "seed": c.stage_seed(name)},
                          self._embed)
        if name == "build-contexts":
            needs_vec = any(parse_context_spec(s)[0] == "cluster" for s in c.contexts)
            return _Stage(self.graph_files + ([p("embedding.txt")] if needs_vec else []), self.context_paths(),
                          {"target": c.target_type, "contexts": list(c.contexts), "seed": c.stage_seed(name)},
                          self._contexts)
        if name == "compute-features":
            return _Stage(self.graph_files + self.context_paths() + [p("seeds.tsv")] + self._label_inputs(),
                          [p("candidates.tsv"), p("pairwise.tsv")],
                          {"measures": list(c.measures), "candidates": c.candidates}, self._features)
        if name == "train":
            return _Stage(self.graph_files + [p("seeds.tsv"), p("embedding.txt"), p("pairwise.tsv"),
                                              p("candidates.tsv")],
                          [p("model.json"), p("loss_trace.tsv")],
                          {"train": asdict(c.train), "seed": c.stage_seed(name)}, self._train)
        if name == "score":
            return _Stage(self.graph_files + [p("model.json"), p("embedding.txt"), p("pairwise.tsv"),
                                              p("candidates.tsv")],
                          [p("ranked.tsv")], {"seed": c.stage_seed(name)}, self._score)
        if name == "evaluate":
            if c.labels is None:
                return None
            return _Stage([p("ranked.tsv"), c.labels], [p("metrics.json")],
                          {"ks": list(c.ks), "seed": c.stage_seed(name)}, self._evaluate)
        if name == "build-taxonomy":
            return _Stage([p("ranked.tsv")], [p("taxonomy.dot"), p("taxonomy.json"), p("removed_edges.tsv")],
                          {"top_terms": c.top_terms, "top_edges": c.top_edges, "removal": c.removal,
                           "seed": c.stage_seed(name)}, self._taxonomy)
        raise ValueError(f"unknown stage {name!r}")

    def _label_inputs(self) -> list[Path]:
        return [self.cfg.labels] if self._candidate_policy() == "labels" else []

    def _candidate_policy(self) -> str:
        if self.cfg.candidates == "auto":
            return "labels" if self.cfg.labels is not None else "cooccur"
        return self.cfg.candidates

    # manifest
    def _rel(self, path: Path) -> str:
        return os.path.relpath(path, self.out)

    def load_manifest(self) -> dict:
        mp = self.path(MANIFEST)
        if not mp.exists():
            return {"stages": {}}
        with open(mp, encoding="utf-8") as fh:
            return json.load(fh)

    def _save_manifest(self, manifest: dict) -> None:
        manifest["versions"] = {"hinhyper": __version__, "numpy": np.__version__,
                                "python": platform.python_version()}
        manifest["seed"] = self.cfg.seed
        with open(self.path(MANIFEST), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def _produced(self, manifest: dict) -> dict[str, str]:
        """Recorded hash of every file some stage wrote."""
        out = {}
        for rec in manifest["stages"].values():
            out.update(rec["outputs"])
        return out

    def _check_inputs(self, name: str, stage: _Stage, manifest: dict) -> dict[str, str]:
        produced = self._produced(manifest)
        hashes = {}
        for path in stage.inputs:
            if not Path(path).exists():
                raise PipelineError(f"stage {name}: missing input {path}")
            rel = self._rel(path)
            h = file_hash(path)
            if rel in produced and produced[rel] != h:
                raise IntegrityError(f"stage {name}: hash mismatch for {rel} (manifest {produced[rel][:12]}, "
                                     f"file {h[:12]}); refusing to use a modified intermediate")
            hashes[rel] = h
        return hashes

    def _up_to_date(self, name: str, stage: _Stage, inputs: dict, manifest: dict) -> bool:
        rec = manifest["stages"].get(name)
        if rec is None or rec["params"] != _params_hash(stage.params) or rec["inputs"] != inputs:
            return False
        for path in stage.outputs:
            rel = self._rel(path)
            if not Path(path).exists() or rel not in rec["outputs"]:
                return False
            if file_hash(path) != rec["outputs"][rel]:
                raise IntegrityError(f"stage {name}: hash mismatch for {rel}; "
                                     "refusing to resume from a modified intermediate")
        return True

    def run(self, stages=STAGES, force: bool = False) -> list[tuple[str, str]]:
        """Run ``stages`` in pipeline order; returns ``(stage, 'ran'|'skipped'|'n/a')`` entries."""
        os.makedirs(self.out, exist_ok=True)
        manifest = self.load_manifest()
        wanted = set(stages)
        unknown = wanted - set(STAGES)
        if unknown:
            raise PipelineError(f"unknown stage(s) {sorted(unknown)}")
        for name in STAGES:
            if name not in wanted:
                continue
            try:
                stage = self._stage(name)
            except (OSError, ValueError) as exc:
                raise PipelineError(f"stage {name}: {exc}") from exc
            if stage is None:
                self.log.append((name, "n/a"))
                continue
            inputs = self._check_inputs(name, stage, manifest)
            if not force and self._up_to_date(name, stage, inputs, manifest):
                log.info("%s: up to date", name)
                self.log.append((name, "skipped"))
                continue
            log.info("%s: running", name)
            for path in stage.outputs:
                os.makedirs(Path(path).parent, exist_ok=True)
            try:
                stage.run()
            except IntegrityError:
                raise
            except Exception as exc:
                raise PipelineError(f"stage {name}: {exc}") from exc
            manifest["stages"][name] = {
                "params": _params_hash(stage.params),
                "inputs": inputs,
                "outputs": {self._rel(p): file_hash(p) for p in stage.outputs},
            }
            self._save_manifest(manifest)
            self.log.append((name, "ran"))
        return self.log

    # stage bodies
    def _extract(self) -> None:
        corpus = load_corpus(self.cfg.corpus, self.graph)
        seeds = extract_seed_pairs(corpus, self.vocab, self.cfg.patterns)
        write_seeds(seeds, self.vocab, self.path("seeds.tsv"))

    def _embed(self) -> None:
        if self.cfg.embedding_import is not None:
            store = import_embedding(self.cfg.embedding_import)
        else:
            store = train_embedding(self.graph, self.cfg.embedding_dim, self.cfg.embedding,
                                    seed=self.cfg.stage_seed("embed"))
        write_embedding(store, self.path("embedding.txt"))

    def _contexts(self) -> None:
        store = None
        if self.path("embedding.txt").exists():
            store = import_embedding(self.path("embedding.txt"))
        simplest = build_simplest(self.graph, self.cfg.target_type, self.vocab)
        base = self.cfg.stage_seed("build-contexts")
        for i, (spec, path) in enumerate(zip(self.cfg.contexts, self.context_paths())):
            ctx = build_context(spec, self.graph, self.cfg.target_type, simplest=simplest,
                                node_vectors=store, seed=base + i, vocab=self.vocab)
            write_context(ctx, path)

    def _candidates(self, contexts) -> list[tuple[int, int]]:
        policy = self._candidate_policy()
        if policy == "labels":
            labels = LabeledPairSet.read_tsv(self.cfg.labels)
            try:
                return [(self.vocab.id_of_surface(a), self.vocab.id_of_surface(b)) for a, b in labels.pairs()]
            except KeyError as exc:
                raise ValueError(f"labels: unknown term {exc}") from None
        return candidate_pairs(policy, contexts, range(len(self.vocab)), len(self.vocab))

    def _training_pairs(self, seeds, candidates) -> tuple[list[int], set[tuple[int, int]]]:
        pool = sorted(seeds.terms() | {t for pr in candidates for t in pr})
        if self.cfg.train.corrupt == "hyponym":
            fixed = {a for a, _ in seeds.as_pairs()}
            pairs = {(a, x) for a in fixed for x in pool if a != x}
        else:
            fixed = {b for _, b in seeds.as_pairs()}
            pairs = {(x, b) for b in fixed for x in pool if x != b}
        return pool, pairs | set(seeds.as_pairs())

    def _features(self) -> None:
        contexts = [read_context(p) for p in self.context_paths()]
        cands = self._candidates(contexts)
        seeds = read_seeds(self.path("seeds.tsv"), self.vocab)
        _, train_pairs = self._training_pairs(seeds, cands)
        pairs = sorted(set(cands) | train_pairs)
        feats = compute_pairwise_features(pairs, contexts, self.cfg.measures, n_terms=len(self.vocab))
        if feats.missing_blocks:
            log.info("compute-features: %d pair blocks without context coverage", feats.missing_blocks)
        write_pairwise(feats, self.vocab, self.path("pairwise.tsv"))
        with open(self.path("candidates.tsv"), "w", encoding="utf-8") as fh:
            for a, b in cands:
                fh.write(f"{self.vocab[a].surface}\t{self.vocab[b].surface}\n")

    def _read_candidates(self) -> list[tuple[int, int]]:
        out = []
        with open(self.path("candidates.tsv"), encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    a, b = line.rstrip("\n").split("\t")
                    out.append((self.vocab.id_of_surface(a), self.vocab.id_of_surface(b)))
        return out

    def _term_features(self) -> TermFeatures:
        store = import_embedding(self.path("embedding.txt"))
        pairwise = read_pairwise(self.path("pairwise.tsv"), self.vocab)
        return TermFeatures.from_store(self.vocab, store, pairwise)

    def _train(self) -> None:
        seeds = read_seeds(self.path("seeds.tsv"), self.vocab)
        if len(seeds) == 0:
            raise ValueError("no seed pairs to train on")
        feats = self._term_features()
        pool, _ = self._training_pairs(seeds, self._read_candidates())
        cfg = TrainConfig(**{**asdict(self.cfg.train), "seed": self.cfg.stage_seed("train")})
        params = train(seeds, feats, cfg, pool)
        save_checkpoint(params, self.path("model.json"), feats.pairwise.fingerprint())
        with open(self.path("loss_trace.tsv"), "w", encoding="utf-8") as fh:
            for i, v in enumerate(params.loss_trace, 1):
                fh.write(f"{i}\t{v!r}\n")

    def _score(self) -> None:
        feats = self._term_features()
        params = load_checkpoint(self.path("model.json"), feats.pairwise.fingerprint())
        ranked = rank_pairs(params, self._read_candidates(), feats, tie_seed=self.cfg.stage_seed("score"))
        ranked.write_tsv(self.path("ranked.tsv"), name=lambda t: self.vocab[t].surface)

    def _evaluate(self) -> None:
        ranked = RankedPairList.read_tsv(self.path("ranked.tsv"))
        labels = LabeledPairSet.read_tsv(self.cfg.labels)
        report = evaluate(ranked, labels, self.cfg.ks, tie_seed=self.cfg.stage_seed("evaluate"))
        write_report(report, self.path("metrics.json"))

    def _taxonomy(self) -> None:
        ranked = RankedPairList.read_tsv(self.path("ranked.tsv"))
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            dag = build_taxonomy(ranked, self.cfg.top_terms, self.cfg.top_edges,
                                 seed=self.cfg.stage_seed("build-taxonomy"), removal=self.cfg.removal)
        dag.write_dot(self.path("taxonomy.dot"))
        dag.write_json(self.path("taxonomy.json"))
        dag.write_removed(self.path("removed_edges.tsv"))


def run_pipeline(config: PipelineConfig, stages=STAGES, force: bool = False) -> list[tuple[str, str]]:
    return Pipeline(config).run(stages, force)
