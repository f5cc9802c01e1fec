import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hinhyper.evaluation import (LabeledPairSet, aggregate_reciprocal_ranks, align_to_labels, evaluate,
                                 precision_at_k, reciprocal_rank_metrics, write_report)
from hinhyper.model import RankedPairList


def ranked_of(pairs):
    """Ranked list in the given order with strictly decreasing scores."""
    return RankedPairList(tuple((a, b, float(-i)) for i, (a, b) in enumerate(pairs)))


def test_precision_examples():
    pairs = [("a", str(i)) for i in range(6)]
    labels = LabeledPairSet.from_iter((a, b, y) for (a, b), y in zip(pairs, [1, 0, 1, 1, 0, 0]))
    r = ranked_of(pairs)
    assert precision_at_k(r, labels, 4) == 0.75
    assert precision_at_k(ranked_of(pairs[4:] + pairs[:4]), labels, 2) == 0.0
    assert precision_at_k(ranked_of([pairs[i] for i in (0, 2, 3, 1, 4, 5)]), labels, 3) == 1.0


def test_precision_errors():
    labels = LabeledPairSet.from_iter([("a", "b", 1)])
    with pytest.raises(ValueError):
        precision_at_k(ranked_of([("a", "b")]), labels, 2)
    with pytest.raises(ValueError, match="unlabeled"):
        precision_at_k(ranked_of([("x", "y")]), labels, 1)


def test_single_group():
    labels = LabeledPairSet.from_iter([("h", "x", 1), ("h", "y", 0), ("h", "z", 1)])
    m = reciprocal_rank_metrics(ranked_of([("h", "x"), ("h", "y"), ("h", "z")]), labels)
    assert m.mamarr == m.mimarr == pytest.approx(0.66667, abs=1e-5)
    assert m.mamlrr == m.mimlrr == 1.0


def test_six_positive_bound():
    labels = LabeledPairSet.from_iter(("h", str(i), 1) for i in range(6))
    m = reciprocal_rank_metrics(ranked_of([("h", str(i)) for i in range(6)]), labels)
    assert m.mamarr == pytest.approx(0.40833, abs=1e-5)


def test_macro_vs_micro_aggregation():
    # group ARRs 0.5 (one positive) and 1.0 (three positives)
    m = aggregate_reciprocal_ranks({"g1": [0.5], "g2": [1.0, 1.0, 1.0]})
    assert m.mamarr == pytest.approx(0.75)
    assert m.mimarr == pytest.approx(0.875)


def test_two_groups_from_a_ranking():
    recs = [("g1", "n", 0), ("g1", "p", 1), ("g2", "a", 1), ("g2", "b", 1), ("g2", "c", 1)]
    labels = LabeledPairSet.from_iter(recs)
    m = reciprocal_rank_metrics(ranked_of([(a, b) for a, b, _ in recs]), labels)
    arr2 = (1 + 1 / 2 + 1 / 3) / 3
    assert (m.n_groups, m.n_positives) == (2, 4)
    assert m.mamarr == pytest.approx((0.5 + arr2) / 2)
    assert m.mimarr == pytest.approx((0.5 + 3 * arr2) / 4)
    assert m.mamlrr == pytest.approx(0.75) and m.mimlrr == pytest.approx((0.5 + 3) / 4)


def test_group_without_positives_warns_and_is_excluded():
    labels = LabeledPairSet.from_iter([("h", "x", 1), ("k", "y", 0)])
    with pytest.warns(UserWarning, match="without positives"):
        m = reciprocal_rank_metrics(ranked_of([("k", "y"), ("h", "x")]), labels)
    assert m.n_groups == 1 and m.mamarr == 1.0


def test_missing_labeled_pair_rejected():
    labels = LabeledPairSet.from_iter([("h", "x", 1), ("h", "y", 0)])
    with pytest.raises(ValueError, match="missing"):
        reciprocal_rank_metrics(ranked_of([("h", "x")]), labels)


def brute_force(order, labels):
    """Per-group reciprocal ranks computed by sorting each group on its own."""
    pos = {p: i for i, p in enumerate(order)}
    groups = {}
    for a, b, y in labels:
        groups.setdefault(a, []).append((pos[(a, b)], y))
    arr, lrr, w = {}, {}, {}
    for g, items in groups.items():
        items.sort()
        rr = [1 / (r + 1) for r, (_, y) in enumerate(items) if y]
        if rr:
            arr[g], lrr[g], w[g] = np.mean(rr), max(rr), len(rr)
    tot = sum(w.values())
    return (np.mean(list(arr.values())), sum(arr[g] * w[g] for g in w) / tot,
            np.mean(list(lrr.values())), sum(lrr[g] * w[g] for g in w) / tot)


@st.composite
def labeled_rankings(draw):
    n_hyper = draw(st.integers(1, 4))
    recs = []
    for h in range(n_hyper):
        ys = draw(st.lists(st.booleans(), min_size=1, max_size=6))
        ys[0] = True
        recs += [(f"h{h}", f"t{i}", y) for i, y in enumerate(ys)]
    perm = draw(st.permutations(range(len(recs))))
    return LabeledPairSet.from_iter(recs), [recs[i][:2] for i in perm]


@settings(max_examples=100, deadline=None)
@given(labeled_rankings())
def test_matches_brute_force_and_bounds(data):
    labels, order = data
    m = reciprocal_rank_metrics(ranked_of(order), labels)
    assert np.allclose(m.as_tuple(), brute_force(order, labels), atol=1e-12)
    assert m.mamlrr >= m.mamarr and m.mimlrr >= m.mimarr
    assert all(0 <= v <= 1 for v in m.as_tuple())


@settings(max_examples=50, deadline=None)
@given(labeled_rankings(), st.integers(0, 100))
def test_monotone_transform_invariance(data, seed):
    labels, order = data
    raw = np.random.default_rng(seed).normal(size=len(order))
    base = RankedPairList.from_scores(order, raw, 3)
    warped = RankedPairList.from_scores(order, np.exp(3 * raw) + 7, 3)
    assert evaluate(base, labels, ks=(1,), tie_seed=1) == evaluate(warped, labels, ks=(1,), tie_seed=1)


def test_random_permutation_precision_near_positive_rate():
    labels = LabeledPairSet.from_iter((f"h{i % 10}", f"t{i}", i % 2 == 0) for i in range(200))
    pairs = labels.pairs()
    rng = np.random.default_rng(0)
    vals = [precision_at_k(ranked_of([pairs[i] for i in rng.permutation(200)]), labels, 100)
            for _ in range(1000)]
    assert abs(np.mean(vals) - 0.5) <= 0.05


def test_unscored_labels_get_zero_and_evaluate_report(tmp_path):
    labels = LabeledPairSet.from_iter([("h", "x", 1), ("h", "y", 0), ("h", "z", 1)])
    ranked = RankedPairList((("q", "q2", 5.0), ("h", "x", 2.0), ("h", "y", -1.0)))
    aligned = align_to_labels(ranked, labels)
    assert [e[:2] for e in aligned] == [("h", "x"), ("h", "z"), ("h", "y")]
    report = evaluate(ranked, labels, ks=(2, 10))
    assert report["P@2"] == 1.0 and report["P@10"] is None
    assert report["groups"] == 1 and report["positives"] == 2
    write_report(report, tmp_path / "a.json")
    write_report(evaluate(ranked, labels, ks=(2, 10)), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert set(json.loads((tmp_path / "a.json").read_text())) == {
        "P@2", "P@10", "MaMARR", "MiMARR", "MaMLRR", "MiMLRR", "groups", "positives"}


def test_labels_file(tmp_path):
    labels = LabeledPairSet.from_iter([("a b", "c", 1), ("c", "a b", 0)])
    labels.write_tsv(tmp_path / "l.tsv")
    assert LabeledPairSet.read_tsv(tmp_path / "l.tsv") == labels
    (tmp_path / "bad.tsv").write_text("a\tb\tyes\n")
    with pytest.raises(ValueError):
        LabeledPairSet.read_tsv(tmp_path / "bad.tsv")
    with pytest.raises(ValueError, match="duplicate"):
        LabeledPairSet.from_iter([("a", "b", 1), ("a", "b", 0)])
