"""Why coarser contexts help inclusion measures.

Papers here are tagged with one concept only (no ancestor tags), so under
the paper-level context a parent keyword never shares a paper with its
children and WeedsPrec is zero. Merging papers by author, by venue, or by
embedding cluster brings the inclusion back.
"""
import numpy as np

from hinhyper.contexts import build_context, build_simplest
from hinhyper.dih import dih_measures
from hinhyper.embedding import EmbeddingConfig, train_embedding
from hinhyper.hin import target_vocabulary
from hinhyper.synth import SynthConfig, generate_synthetic_hin

data = generate_synthetic_hin(SynthConfig(p_anc=0.0, noise_tags=0.0, seed=1))
vocab = target_vocabulary(data.graph, "keyword")
store = train_embedding(data.graph, 32, EmbeddingConfig(walks_per_node=5, walk_length=20), seed=1)
simplest = build_simplest(data.graph, "keyword", vocab)

edges = [(vocab.id_of_node(a), vocab.id_of_node(b)) for a, b in data.planted_edges()]
print(f"{len(vocab)} keywords, {len(edges)} parent -> child edges\n")
print(f"{'context':16s} {'units':>6s}  mean M1(parent->child)  mean M1(child->parent)")
for i, spec in enumerate(["simplest", "groupby:author", "groupby:venue", "cluster:8", "cluster:32"]):
    ctx = build_context(spec, data.graph, "keyword", simplest=simplest, node_vectors=store, seed=i, vocab=vocab)
    down = np.mean([dih_measures(ctx, a, b)[0] for a, b in edges])
    up = np.mean([dih_measures(ctx, b, a)[0] for a, b in edges])
    print(f"{spec:16s} {ctx.total_units:6d}  {down:22.3f}  {up:22.3f}")

# the coarsest grids blur direction: both columns drift towards 1
