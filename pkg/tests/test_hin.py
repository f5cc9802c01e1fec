import json
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from hinhyper.hin import (Corpus, Document, GraphFormatError, HinGraph, Schema, load_corpus, load_graph,
                          neighbors_of_type, normalize_term, target_vocabulary, tokenize, write_corpus,
                          write_graph)

SCHEMA = {"node_types": ["paper", "keyword", "author"],
          "edge_types": {"tagged": ["paper", "keyword"], "authorship": ["author", "paper"]}}


def small_graph():
    nodes = ["p1\tpaper", "p2\tpaper", "k1\tkeyword\tData  Mining", "a1\tauthor"]
    edges = ["p1\tk1\ttagged", "p2\tk1\ttagged", "a1\tp1\tauthorship"]
    return load_graph(nodes, edges, SCHEMA)


def test_counts():
    g = load_graph(["p1\tpaper", "p2\tpaper", "k1\tkeyword"], ["p1\tk1\ttagged", "p2\tk1\ttagged"], SCHEMA)
    assert len(g) == 3 and g.num_edges == 2


def test_dangling_endpoint():
    with pytest.raises(GraphFormatError, match="dangling endpoint p99"):
        load_graph(["p1\tpaper", "k1\tkeyword"], ["p1\tk1\ttagged", "p99\tk1\ttagged"], SCHEMA)


def test_schema_violation():
    with pytest.raises(GraphFormatError, match="schema violation") as exc:
        load_graph(["p1\tpaper", "p2\tpaper"], ["p1\tp2\tauthorship"], SCHEMA)
    assert "line 1" in str(exc.value)


def test_unknown_type_and_duplicate_are_distinct():
    with pytest.raises(GraphFormatError, match="line 2: unknown node type"):
        load_graph(["p1\tpaper", "x\tvenue"], [], SCHEMA)
    with pytest.raises(GraphFormatError, match="duplicate node id p1"):
        load_graph(["p1\tpaper", "p1\tpaper"], [], SCHEMA)
    with pytest.raises(GraphFormatError, match="unknown edge type"):
        load_graph(["p1\tpaper", "k1\tkeyword"], ["p1\tk1\tcites"], SCHEMA)


def test_neighbors_of_type():
    g = small_graph()
    assert neighbors_of_type(g, "k1", "paper") == {"p1", "p2"}
    assert neighbors_of_type(g, "p1", "author") == {"a1"}
    assert neighbors_of_type(g, "p2", "author") == set()
    with pytest.raises(KeyError):
        neighbors_of_type(g, "nope", "paper")


def test_isolated_node_has_no_neighbors():
    g = load_graph(["p1\tpaper", "k1\tkeyword"], [], SCHEMA)
    assert neighbors_of_type(g, "k1", "paper") == set()


def test_vocabulary():
    g = small_graph()
    vocab = target_vocabulary(g, "keyword")
    assert [t.surface for t in vocab] == ["data mining"]
    assert vocab.id_of_node("k1") == 0
    with pytest.raises(ValueError):
        target_vocabulary(g, "venue")


def test_vocabulary_empty_warns():
    g = load_graph(["p1\tpaper"], [], SCHEMA)
    with pytest.warns(UserWarning):
        assert len(target_vocabulary(g, "keyword")) == 0


def test_duplicate_surfaces_kept_with_warning():
    g = load_graph(["k1\tkeyword\tNeural Nets", "k2\tkeyword\tneural   nets"], [], SCHEMA)
    with pytest.warns(UserWarning, match="duplicate"):
        vocab = target_vocabulary(g, "keyword")
    assert [t.term_id for t in vocab] == [0, 1]
    assert [t.surface for t in vocab] == ["neural nets", "neural nets"]


def test_vocabulary_order_is_natural_and_stable():
    nodes = [f"k{i}\tkeyword" for i in (10, 2, 1)]
    a = target_vocabulary(load_graph(nodes, [], SCHEMA), "keyword")
    b = target_vocabulary(load_graph(nodes[::-1], [], SCHEMA), "keyword")
    assert [t.node_id for t in a] == ["k1", "k2", "k10"] == [t.node_id for t in b]


def test_normalize_and_tokenize():
    assert normalize_term("  Deep\tLearning ") == "deep learning"
    assert tokenize("Classifiers, such as SVMs.") == ["classifiers", ",", "such", "as", "svms", "."]


def test_corpus_round_trip_and_owner_check(tmp_path):
    g = small_graph()
    corpus = Corpus((Document("p1", (("a", "b"),)), Document("p2", ())))
    path = tmp_path / "c.jsonl"
    write_corpus(corpus, path)
    assert load_corpus(path, g) == corpus
    with pytest.raises(GraphFormatError, match="unknown owner"):
        load_corpus([json.dumps({"node_id": "zz", "sentences": []})], g)


node_ids = st.lists(st.sampled_from([f"n{i}" for i in range(12)]), min_size=1, max_size=12, unique=True)


@st.composite
def graphs(draw):
    ids = draw(node_ids)
    types = {n: draw(st.sampled_from(["paper", "keyword", "author"])) for n in ids}
    allowed = {("paper", "keyword"): "tagged", ("author", "paper"): "authorship"}
    edges = []
    for a in ids:
        for b in ids:
            et = allowed.get((types[a], types[b]))
            if et and draw(st.booleans()):
                edges.append((a, b, et))
    nodes = [(n, types[n], draw(st.sampled_from([None, "x y", "z"]))) for n in ids]
    return HinGraph.build(Schema.from_json(SCHEMA), nodes, edges)


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_round_trip(tmp_path_factory, g):
    d = tmp_path_factory.mktemp("g")
    write_graph(g, d / "n.tsv", d / "e.tsv", d / "s.json")
    assert load_graph(d / "n.tsv", d / "e.tsv", d / "s.json") == g


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_neighbors_symmetric(g):
    for a in g.node_ids:
        for b in g.node_ids:
            left = b in neighbors_of_type(g, a, g.node_type[b])
            right = a in neighbors_of_type(g, b, g.node_type[a])
            assert left == right


def test_vocabulary_surfaces_without_text_key():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vocab = target_vocabulary(load_graph(["k7\tkeyword"], [], SCHEMA), "keyword")
    assert vocab.surfaces == ["k7"]
