import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import hearst_fixture
from hinhyper.hearst import (SeedPairSet, TermMatcher, extract_from_sentence, extract_seed_pairs, read_seeds,
                             split_folds, write_seeds)
from hinhyper.hin import Corpus, Document, tokenize

DOC, VOCAB, CORPUS = hearst_fixture.load()
MATCHER = TermMatcher(VOCAB)


def named(pairs):
    return sorted((VOCAB[a].surface, VOCAB[b].surface) for a, b in pairs)


@pytest.mark.parametrize("text,expected", DOC["sentences"], ids=[s[:30] for s, _ in DOC["sentences"]])
def test_sentence(text, expected):
    hits = extract_from_sentence(tokenize(text), MATCHER)
    assert named((a, b) for a, b, _ in hits) == sorted(map(tuple, expected))


def test_fixture_counts():
    seeds = extract_seed_pairs(CORPUS, VOCAB)
    got = sorted((VOCAB[a].surface, VOCAB[b].surface, c) for a, b, c in seeds)
    assert got == sorted(map(tuple, DOC["expected_counts"]))


def test_repeated_sentence_counts():
    corpus = Corpus(tuple(Document(f"p{i}", (tuple(tokenize("Data mining such as pattern mining.")),))
                          for i in range(3)))
    seeds = extract_seed_pairs(corpus, VOCAB)
    assert [(VOCAB[a].surface, VOCAB[b].surface, c) for a, b, c in seeds] == [("data mining", "pattern mining", 3)]


def test_no_match_warns():
    corpus = Corpus((Document("p0", (("nothing", "here"),)),))
    with pytest.warns(UserWarning, match="no pattern"):
        assert len(extract_seed_pairs(corpus, VOCAB)) == 0


def test_pattern_subset():
    seeds = extract_seed_pairs(CORPUS, VOCAB, ["or_other"])
    assert named(seeds.as_pairs()) == [("classifier", "decision tree"), ("database", "java")]
    with pytest.raises(ValueError):
        extract_seed_pairs(CORPUS, VOCAB, ["x_such_as_y"])


def test_plural_lookup():
    assert MATCHER.lookup(("classifiers",)) == VOCAB.id_of_surface("classifier")
    assert MATCHER.lookup(("databases",)) == VOCAB.id_of_surface("database")
    assert MATCHER.lookup(("decision", "trees")) == VOCAB.id_of_surface("decision tree")
    assert MATCHER.lookup(("decisions", "tree")) is None


def test_longest_match_wins():
    assert MATCHER.backward(["we", "use", "data", "mining"], 4)[0] == VOCAB.id_of_surface("data mining")


def test_order_independent():
    docs = list(CORPUS.documents)
    rng = np.random.default_rng(0)
    shuffled = Corpus(tuple(docs[i] for i in rng.permutation(len(docs))))
    assert extract_seed_pairs(shuffled, VOCAB) == extract_seed_pairs(CORPUS, VOCAB)


def test_conflicting_directions_kept():
    text = ["Python such as Java.", "Java such as Python."]
    corpus = Corpus(tuple(Document(f"p{i}", (tuple(tokenize(t)),)) for i, t in enumerate(text)))
    assert named(extract_seed_pairs(corpus, VOCAB).as_pairs()) == [("java", "python"), ("python", "java")]


def test_seed_set_validation():
    with pytest.raises(ValueError):
        SeedPairSet(((1, 1, 1),))
    with pytest.raises(ValueError):
        SeedPairSet(((1, 2, 1), (1, 2, 3)))
    with pytest.raises(ValueError):
        SeedPairSet(((1, 2, -1),))


def test_seeds_file_round_trip(tmp_path):
    seeds = extract_seed_pairs(CORPUS, VOCAB)
    write_seeds(seeds, VOCAB, tmp_path / "s.tsv")
    assert read_seeds(tmp_path / "s.tsv", VOCAB) == seeds


def seeds_of(n):
    return SeedPairSet.from_pairs([(i, i + 1) for i in range(n)])


def test_folds_exact_division():
    assert [len(f) for f in split_folds(seeds_of(10), 5, 0)] == [2] * 5


def test_folds_remainder():
    assert sorted(len(f) for f in split_folds(seeds_of(11), 5, 0)) == [2, 2, 2, 2, 3]


def test_folds_deterministic():
    assert split_folds(seeds_of(17), 4, 9) == split_folds(seeds_of(17), 4, 9)


def test_fold_errors():
    with pytest.raises(ValueError):
        split_folds(seeds_of(3), 5, 0)
    with pytest.raises(ValueError):
        split_folds(seeds_of(3), 1, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(2, 8), st.integers(0, 10_000))
def test_folds_partition(n, k, seed):
    if n < k:
        return
    seeds = seeds_of(n)
    folds = split_folds(seeds, k, seed)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    union = [pr for f in folds for pr in f]
    assert sorted(union) == sorted(seeds.pairs)


def test_every_pair_resolvable():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        seeds = extract_seed_pairs(CORPUS, VOCAB)
    assert all(0 <= t < len(VOCAB) for pr in seeds.as_pairs() for t in pr)
