import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from hinhyper.contexts import ContextIndex
from hinhyper.dih import (MEASURES, PairwiseFeatures, candidate_pairs, compute_pairwise_features, dih_measures,
                          read_pairwise, write_pairwise)
from hinhyper.hin import Term, Vocabulary


def ctx_of(sets, n_units, cid="simplest"):
    return ContextIndex(cid, tuple(range(n_units)), {t: frozenset(us) for t, us in sets.items()})


def test_hand_example():
    ctx = ctx_of({0: {0, 1, 2}, 1: {0, 1}}, 10)
    m1, m2, m3, m4 = dih_measures(ctx, 0, 1)
    assert m1 == 1.0
    assert m2 == pytest.approx(0.57735, abs=1e-5)
    assert m3 == pytest.approx(0.33333, abs=1e-5)
    assert m4 == pytest.approx(0.2)


def test_disjoint_and_equal():
    ctx = ctx_of({0: {0, 1}, 1: {2}, 2: {0, 1}}, 5)
    assert dih_measures(ctx, 0, 1) == (0.0, 0.0, 0.0, 0.0)
    assert dih_measures(ctx, 0, 2) == (1.0, 0.0, 0.0, 0.4)


def test_empty_term_is_zero_not_nan():
    ctx = ctx_of({0: set(), 1: {0}}, 3)
    assert dih_measures(ctx, 0, 1) == (0.0, 0.0, 0.0, 0.0)
    assert dih_measures(ctx, 1, 0) == (0.0, 0.0, 0.0, 0.0)


def test_self_pair_rejected():
    with pytest.raises(ValueError):
        dih_measures(ctx_of({0: {0}}, 1), 0, 0)


@st.composite
def random_contexts(draw):
    n_units = draw(st.integers(1, 20))
    n_terms = draw(st.integers(2, 10))
    sets = {t: set(draw(st.lists(st.integers(0, n_units - 1), max_size=n_units))) for t in range(n_terms)}
    return ctx_of(sets, n_units)


@settings(max_examples=80, deadline=None)
@given(random_contexts())
def test_oracle_equivalence(ctx):
    terms = sorted(ctx.relevance)
    pairs = [(a, b) for a in terms for b in terms if a != b]
    feats = compute_pairwise_features(pairs, [ctx])
    for (a, b), row in zip(pairs, feats.values):
        ref = oracles.measures(ctx, a, b)
        assert np.allclose(dih_measures(ctx, a, b), ref, rtol=0, atol=1e-12)
        assert np.allclose(row, ref, rtol=0, atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(random_contexts())
def test_ranges_and_symmetries(ctx):
    terms = sorted(ctx.relevance)
    for a in terms:
        for b in terms:
            if a == b:
                continue
            m1, m2, m3, m4 = dih_measures(ctx, a, b)
            r1, r2, r3, r4 = dih_measures(ctx, b, a)
            assert 0 <= m1 <= 1 and 0 <= m2 <= 1 and -1 <= m3 <= 1 and 0 <= m4 <= 1
            assert m3 == -r3
            assert m4 == r4
            if ctx.units_of(b) and ctx.units_of(b) <= ctx.units_of(a):
                assert m1 == 1.0 and oracles.clarke_de(ctx, a, b) == 1.0


def test_full_grid_is_24_wide():
    ids = ["simplest", "groupby:author", "groupby:venue", "cluster:8", "cluster:32", "cluster:128"]
    ctxs = [ctx_of({0: {0}, 1: {0, 1}}, 3, cid) for cid in ids]
    feats = compute_pairwise_features([(0, 1)], ctxs)
    assert feats.dim == 24
    assert feats.layout[:5] == (("simplest", "M1"), ("simplest", "M2"), ("simplest", "M3"), ("simplest", "M4"),
                                ("groupby:author", "M1"))


def test_single_context_equals_measures():
    ctx = ctx_of({0: {0, 1, 2}, 1: {0, 1}}, 10)
    feats = compute_pairwise_features([(0, 1)], [ctx])
    assert np.array_equal(feats.vector(0, 1), np.array(dih_measures(ctx, 0, 1)))


def test_unseen_pair_is_zero_with_coverage_count():
    ctxs = [ctx_of({0: {0}}, 2, "a"), ctx_of({0: {1}}, 2, "b"), ctx_of({0: {0}}, 1, "c")]
    feats = compute_pairwise_features([(5, 6)], ctxs)
    assert not feats.values.any()
    assert feats.missing_blocks == 3


def test_measure_subset_and_errors():
    ctx = ctx_of({0: {0, 1, 2}, 1: {0, 1}}, 10)
    feats = compute_pairwise_features([(0, 1)], [ctx], measures=["M4"])
    assert feats.layout == (("simplest", "M4"),) and feats.values[0, 0] == pytest.approx(0.2)
    with pytest.raises(ValueError):
        compute_pairwise_features([(0, 1)], [])
    with pytest.raises(ValueError):
        compute_pairwise_features([(0, 1)], [ctx], measures=["M9"])
    with pytest.raises(NotImplementedError):
        compute_pairwise_features([(0, 1)], [ctx], relevance="tfidf")


def test_candidate_policies():
    a = ctx_of({0: {0}, 1: {0}, 2: {1}}, 2, "a")
    b = ctx_of({0: {1}, 1: {0}, 2: {1}}, 2, "b")
    assert candidate_pairs("all", [a], [0, 1, 2]) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    assert candidate_pairs("cooccur", [a], [0, 1, 2]) == [(0, 1), (1, 0)]
    assert candidate_pairs("cooccur", [a, b], [0, 1, 2]) == [(0, 1), (0, 2), (1, 0), (2, 0)]
    with pytest.raises(ValueError):
        candidate_pairs("nearest", [a], [0, 1])


@settings(max_examples=30, deadline=None)
@given(random_contexts())
def test_cooccur_matches_positive_overlap(ctx):
    terms = sorted(ctx.relevance)
    expected = [(a, b) for a in terms for b in terms if a != b and dih_measures(ctx, a, b)[3] > 0]
    assert candidate_pairs("cooccur", [ctx], terms) == expected


def test_pairwise_file_round_trip(tmp_path):
    vocab = Vocabulary("keyword", tuple(Term(i, s, f"k{i}") for i, s in enumerate(["x", "y z", "w"])))
    rng = np.random.default_rng(0)
    layout = tuple((c, m) for c in ("simplest", "cluster:8") for m in MEASURES)
    feats = PairwiseFeatures(layout, ((0, 1), (2, 0)), rng.random((2, 8)) / 3)
    write_pairwise(feats, vocab, tmp_path / "f.tsv")
    back = read_pairwise(tmp_path / "f.tsv", vocab)
    assert back.layout == layout and back.pairs == feats.pairs
    assert np.array_equal(back.values, feats.values)
    assert (tmp_path / "f.tsv").read_text().splitlines()[0].startswith("#t1\tt2\tsimplest|M1")


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        PairwiseFeatures((("s", "M1"),), ((0, 1),), np.array([[math.nan]]))
