"""Command line: one subcommand per pipeline stage plus ``synth`` and ``run``.

Stage subcommands run standalone from explicit file flags, or, given
``--config``, run that stage of the configured pipeline (with manifest
checks and resume).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

STAGE_COMMANDS = ("extract-seeds", "embed", "build-contexts", "compute-features", "train", "score",
                  "evaluate", "build-taxonomy")

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", type=Path, help="pipeline config (JSON)")
    p.add_argument("--seed", type=int, help="global seed (overrides the config)")
    p.add_argument("--threads", type=int, help="BLAS/OpenMP thread count")
    p.add_argument("--deterministic", action="store_true", help="single thread, fixed reduction order")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _graph_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", type=Path, help="directory holding nodes.tsv, edges.tsv, schema.json")
    p.add_argument("--nodes", type=Path)
    p.add_argument("--edges", type=Path)
    p.add_argument("--schema", type=Path)
    p.add_argument("--target-type", default="keyword")


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="hinhyper", parents=[common],
                                     description="Hypernymy discovery in text-rich HINs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic dataset and pipeline config")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--branching", type=int, default=3)
    p.add_argument("--terms-per-concept", type=int, default=1)
    p.add_argument("--docs", type=int, default=2000)
    p.add_argument("--groups", type=int, default=200)
    p.add_argument("--p-anc", type=float, default=0.3)
    p.add_argument("--noise-tags", type=float, default=0.2)
    p.add_argument("--hearst-fraction", type=float, default=0.2)

    p = sub.add_parser("extract-seeds", parents=[common], help="pattern-based seed pairs")
    _graph_flags(p)
    p.add_argument("--corpus", type=Path)
    p.add_argument("--vocab-from-graph", action="store_true", help="vocabulary = target-type nodes (default)")
    p.add_argument("--patterns", default="default", help="'default' or a comma list of pattern names")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("embed", parents=[common], help="train or import node vectors")
    _graph_flags(p)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--walks-per-node", type=int, default=10)
    p.add_argument("--walk-length", type=int, default=40)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--import", dest="import_path", type=Path, help="validate an external embedding file")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("build-contexts", parents=[common], help="write context indexes")
    _graph_flags(p)
    p.add_argument("--context", action="append", help="simplest | groupby:<type> | cluster:<K> (repeatable)")
    p.add_argument("--embedding", type=Path, help="node vectors, needed for cluster contexts")
    p.add_argument("--out-dir", type=Path)

    p = sub.add_parser("compute-features", parents=[common], help="pairwise DIH feature table")
    _graph_flags(p)
    p.add_argument("--contexts", type=Path, nargs="+", help="context files in layout order")
    p.add_argument("--pairs", type=Path, help="TSV of candidate pairs (first two columns)")
    p.add_argument("--candidates", choices=("cooccur", "all"), default="cooccur")
    p.add_argument("--seeds", type=Path, help="also cover the training pairs of these seeds")
    p.add_argument("--measures", default="M1,M2,M3,M4")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("train", parents=[common], help="fit the scoring model")
    _graph_flags(p)
    p.add_argument("--seeds", type=Path)
    p.add_argument("--embedding", type=Path)
    p.add_argument("--features", type=Path)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--negatives", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--corrupt", choices=("hyponym", "hypernym"), default="hyponym")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("score", parents=[common], help="rank candidate pairs")
    _graph_flags(p)
    p.add_argument("--model", type=Path)
    p.add_argument("--embedding", type=Path)
    p.add_argument("--features", type=Path)
    p.add_argument("--pairs", type=Path, help="TSV of pairs to rank (default: every row of --features)")
    p.add_argument("--tie-seed", type=int, default=0)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("evaluate", parents=[common], help="P@k and reciprocal-rank metrics")
    p.add_argument("--ranked", type=Path)
    p.add_argument("--labels", type=Path)
    p.add_argument("--k", type=int, action="append")
    p.add_argument("--tie-seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="report path (default: stdout)")

    p = sub.add_parser("build-taxonomy", parents=[common], help="acyclic taxonomy from ranked pairs")
    p.add_argument("--ranked", type=Path)
    p.add_argument("--top-terms", type=int, default=500)
    p.add_argument("--top-edges", type=int, default=5000)
    p.add_argument("--removal", choices=("uniform", "score"), default="uniform")
    p.add_argument("--out-prefix", type=Path, help="writes PREFIX.dot, PREFIX.json, PREFIX.removed.tsv")

    p = sub.add_parser("run", parents=[common], help="run the configured pipeline")
    p.add_argument("--until", choices=STAGE_COMMANDS, help="stop after this stage")
    p.add_argument("--from", dest="start", choices=STAGE_COMMANDS, help="start at this stage")
    p.add_argument("--force", action="store_true", help="recompute even when up to date")
    return parser


class UsageError(Exception):
    pass


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{args.command}: missing {flags} (or pass --config)")


def _graph(args):
    from .hin import load_graph

    nodes, edges, schema = args.nodes, args.edges, args.schema
    if args.graph is not None:
        nodes = nodes or args.graph / "nodes.tsv"
        edges = edges or args.graph / "edges.tsv"
        schema = schema or args.graph / "schema.json"
    if None in (nodes, edges, schema):
        raise UsageError(f"{args.command}: give --graph DIR or all of --nodes, --edges, --schema")
    return load_graph(nodes, edges, schema)


def _read_pair_file(path, vocab):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            try:
                out.append((vocab.id_of_surface(parts[0]), vocab.id_of_surface(parts[1])))
            except (KeyError, IndexError):
                raise ValueError(f"{path} line {lineno}: expected two known terms") from None
    return out


def _cmd_synth(args, seed):
    from .benchmark import FULL_CONTEXTS, BenchmarkConfig
    from .synth import SynthConfig, generate_synthetic_hin, write_dataset

    cfg = SynthConfig(depth=args.depth, branching=args.branching, terms_per_concept=args.terms_per_concept,
                      n_docs=args.docs, n_groups=args.groups, p_anc=args.p_anc, noise_tags=args.noise_tags,
                      hearst_fraction=args.hearst_fraction, seed=seed)
    paths = write_dataset(generate_synthetic_hin(cfg), args.out)
    config = {
        "nodes": "nodes.tsv", "edges": "edges.tsv", "schema": "schema.json", "corpus": "corpus.jsonl",
        "labels": "labels.tsv", "output_dir": "out", "target_type": "keyword",
        "contexts": list(FULL_CONTEXTS),
        "seed": seed,
    }
    # desk-scale model sizes; the library defaults target corpora far larger than a synthetic one
    bench = BenchmarkConfig()
    config.update(embedding_dim=bench.dim,
                  embedding={"walks_per_node": bench.embedding.walks_per_node,
                             "walk_length": bench.embedding.walk_length},
                  train={"epochs": bench.train.epochs})
    with open(args.out / "pipeline.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    print(f"wrote {', '.join(sorted(p.name for p in paths.values()))} and pipeline.json to {args.out}")


def _cmd_extract(args, seed):
    from .hearst import extract_seed_pairs, write_seeds
    from .hin import load_corpus, target_vocabulary

    _need(args, "corpus", "out")
    graph = _graph(args)
    vocab = target_vocabulary(graph, args.target_type)
    patterns = "default" if args.patterns == "default" else tuple(args.patterns.split(","))
    seeds = extract_seed_pairs(load_corpus(args.corpus, graph), vocab, patterns)
    write_seeds(seeds, vocab, args.out)
    print(f"{len(seeds)} seed pairs -> {args.out}")


def _cmd_embed(args, seed):
    from .embedding import EmbeddingConfig, import_embedding, train_embedding, write_embedding

    _need(args, "out")
    if args.import_path is not None:
        store = import_embedding(args.import_path)
    else:
        cfg = EmbeddingConfig(walks_per_node=args.walks_per_node, walk_length=args.walk_length,
                              window=args.window)
        store = train_embedding(_graph(args), args.dim, cfg, seed=seed)
    write_embedding(store, args.out)
    print(f"{len(store)} vectors of dimension {store.dim} -> {args.out}")


def _cmd_contexts(args, seed):
    from .contexts import build_context, build_simplest, write_context
    from .embedding import import_embedding
    from .hin import target_vocabulary

    _need(args, "context", "out_dir")
    graph = _graph(args)
    vocab = target_vocabulary(graph, args.target_type)
    store = import_embedding(args.embedding) if args.embedding else None
    simplest = build_simplest(graph, args.target_type, vocab)
    os.makedirs(args.out_dir, exist_ok=True)
    for i, spec in enumerate(args.context):
        ctx = build_context(spec, graph, args.target_type, simplest=simplest, node_vectors=store,
                            seed=seed + i, vocab=vocab)
        path = args.out_dir / f"{i:02d}.jsonl"
        write_context(ctx, path)
        print(f"{ctx.context_id}: {ctx.total_units} units -> {path}")


def _cmd_features(args, seed):
    from .contexts import read_context
    from .dih import candidate_pairs, compute_pairwise_features, write_pairwise
    from .hearst import read_seeds
    from .hin import target_vocabulary

    _need(args, "contexts", "out")
    vocab = target_vocabulary(_graph(args), args.target_type)
    contexts = [read_context(p) for p in args.contexts]
    if args.pairs is not None:
        pairs = set(_read_pair_file(args.pairs, vocab))
    else:
        pairs = set(candidate_pairs(args.candidates, contexts, range(len(vocab)), len(vocab)))
    if args.seeds is not None:
        seeds = read_seeds(args.seeds, vocab)
        pool = seeds.terms() | {t for pr in pairs for t in pr}
        pairs |= {(a, x) for a, _ in seeds.as_pairs() for x in pool if x != a}
    feats = compute_pairwise_features(sorted(pairs), contexts, tuple(args.measures.split(",")),
                                      n_terms=len(vocab))
    write_pairwise(feats, vocab, args.out)
    print(f"{len(feats)} pairs x {feats.dim} features -> {args.out}")


def _term_features(args, vocab):
    from .dih import read_pairwise
    from .embedding import import_embedding
    from .model import TermFeatures

    return TermFeatures.from_store(vocab, import_embedding(args.embedding), read_pairwise(args.features, vocab))


def _cmd_train(args, seed):
    from .hearst import read_seeds
    from .hin import target_vocabulary
    from .model import TrainConfig, save_checkpoint, train

    _need(args, "seeds", "embedding", "features", "out")
    vocab = target_vocabulary(_graph(args), args.target_type)
    feats = _term_features(args, vocab)
    seeds = read_seeds(args.seeds, vocab)
    cfg = TrainConfig(negatives=args.negatives, epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.lr, corrupt=args.corrupt, seed=seed)
    pool = seeds.terms() | {t for pr in feats.pairwise.pairs for t in pr}
    params = train(seeds, feats, cfg, pool)
    save_checkpoint(params, args.out, feats.pairwise.fingerprint())
    last = params.loss_trace[-1] if params.loss_trace else float("nan")
    print(f"trained {args.epochs} epochs, final loss {last:.4f} -> {args.out}")


def _cmd_score(args, seed):
    from .hin import target_vocabulary
    from .model import load_checkpoint, rank_pairs

    _need(args, "model", "embedding", "features", "out")
    vocab = target_vocabulary(_graph(args), args.target_type)
    feats = _term_features(args, vocab)
    params = load_checkpoint(args.model, feats.pairwise.fingerprint())
    pairs = _read_pair_file(args.pairs, vocab) if args.pairs else list(feats.pairwise.pairs)
    ranked = rank_pairs(params, pairs, feats, tie_seed=args.tie_seed)
    ranked.write_tsv(args.out, name=lambda t: vocab[t].surface)
    print(f"{len(ranked)} ranked pairs -> {args.out}")


def _cmd_evaluate(args, seed):
    from .evaluation import LabeledPairSet, evaluate, write_report
    from .model import RankedPairList

    _need(args, "ranked", "labels")
    report = evaluate(RankedPairList.read_tsv(args.ranked), LabeledPairSet.read_tsv(args.labels),
                      tuple(args.k or (100, 1000)), tie_seed=args.tie_seed)
    if args.out is None:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        write_report(report, args.out)
        print(f"metrics -> {args.out}")


def _cmd_taxonomy(args, seed):
    from .model import RankedPairList
    from .taxonomy import build_taxonomy

    _need(args, "ranked", "out_prefix")
    dag = build_taxonomy(RankedPairList.read_tsv(args.ranked), args.top_terms, args.top_edges,
                         seed=seed, removal=args.removal)
    prefix = str(args.out_prefix)
    dag.write_dot(prefix + ".dot")
    dag.write_json(prefix + ".json")
    dag.write_removed(prefix + ".removed.tsv")
    print(f"{len(dag.nodes)} nodes, {len(dag.edges)} edges, {len(dag.removed_edges)} removed -> {prefix}.*")


_STANDALONE = {
    "synth": _cmd_synth, "extract-seeds": _cmd_extract, "embed": _cmd_embed,
    "build-contexts": _cmd_contexts, "compute-features": _cmd_features, "train": _cmd_train,
    "score": _cmd_score, "evaluate": _cmd_evaluate, "build-taxonomy": _cmd_taxonomy,
}


def _run_configured(args, stages, force=False):
    from dataclasses import replace

    from .pipeline import STAGES, Pipeline, PipelineConfig

    cfg = PipelineConfig.from_file(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if stages is None:
        lo = STAGES.index(args.start) if args.start else 0
        hi = STAGES.index(args.until) + 1 if args.until else len(STAGES)
        stages = STAGES[lo:hi]
    for name, status in Pipeline(cfg).run(stages, force=force):
        print(f"{name}: {status}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("config", "seed", "threads"):
        if not hasattr(args, name):
            setattr(args, name, None)
    deterministic = getattr(args, "deterministic", False)
    threads = 1 if deterministic else args.threads
    if threads is not None:
        if threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return 2
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    from .pipeline import PipelineError

    try:
        if args.command == "run":
            if args.config is None:
                raise UsageError("run: --config is required")
            _run_configured(args, None, force=args.force)
        elif args.config is not None and args.command != "synth":
            _run_configured(args, [args.command])
        else:
            seed = args.seed if args.seed is not None else 0
            _STANDALONE[args.command](args, seed)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0
