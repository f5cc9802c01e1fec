"""Hypernymy discovery in text-rich heterogeneous information networks.

Submodules are imported lazily so that the command line can size thread
pools before numpy loads.
"""
from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "HinGraph": "hin", "Schema": "hin", "Vocabulary": "hin", "Corpus": "hin", "load_graph": "hin",
    "load_corpus": "hin", "target_vocabulary": "hin", "neighbors_of_type": "hin",
    "SeedPairSet": "hearst", "extract_seed_pairs": "hearst", "split_folds": "hearst",
    "ContextIndex": "contexts", "build_simplest": "contexts", "build_group_by": "contexts",
    "build_cluster": "contexts", "kmeans": "contexts",
    "dih_measures": "dih", "compute_pairwise_features": "dih", "PairwiseFeatures": "dih",
    "FeatureStore": "embedding", "train_embedding": "embedding", "import_embedding": "embedding",
    "ModelParams": "model", "TrainConfig": "model", "train": "model", "score": "model", "loss": "model",
    "gradient_check": "model", "rank_pairs": "model", "RankedPairList": "model",
    "LabeledPairSet": "evaluation", "precision_at_k": "evaluation",
    "reciprocal_rank_metrics": "evaluation", "evaluate": "evaluation",
    "TaxonomyDag": "taxonomy", "build_taxonomy": "taxonomy",
    "SynthConfig": "synth", "generate_synthetic_hin": "synth",
    "PipelineConfig": "pipeline", "run_pipeline": "pipeline",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
