import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from embrel import ConfusionCounts, average_precision, f1_score, spearman_rho
from embrel.exceptions import DegenerateInput, LengthMismatch, NoPositives
from embrel.metrics import rankdata_average

from oracles import average_precision_oracle, average_ranks, f1_oracle, spearman_oracle


def test_spearman_examples():
    assert spearman_rho([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0, abs=1e-15)
    assert spearman_rho([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-15)


def test_spearman_ties_against_oracle():
    expected = spearman_oracle([1, 2, 2, 4], [1, 3, 2, 4])
    assert expected == pytest.approx(3 / math.sqrt(10), abs=1e-15)
    assert spearman_rho([1, 2, 2, 4], [1, 3, 2, 4]) == pytest.approx(expected, abs=1e-12)


def test_spearman_errors():
    with pytest.raises(LengthMismatch):
        spearman_rho([1, 2], [1, 2, 3])
    with pytest.raises(DegenerateInput):
        spearman_rho([1, 1, 1], [1, 2, 3])
    with pytest.raises(DegenerateInput):
        spearman_rho([1], [2])


def test_rankdata_average():
    np.testing.assert_array_equal(rankdata_average([3, 1, 3, 2]), [3.5, 1, 3.5, 2])
    assert list(rankdata_average([5, 5, 5])) == average_ranks([5, 5, 5])


def test_average_precision_examples():
    assert average_precision([0.9, 0.8], [1, 0]) == 1.0
    assert average_precision([0.8, 0.9], [1, 0]) == 0.5


def test_average_precision_six_items():
    scores = [0.9, 0.1, 0.5, 0.7, 0.3, 0.6]
    gold = [0, 1, 1, 0, 1, 1]
    # ranking 0,3,5,2,4,1 -> positives at ranks 3,4,5,6: (1/3 + 2/4 + 3/5 + 4/6) / 4
    assert average_precision_oracle(scores, gold) == pytest.approx(0.525, abs=1e-15)
    assert average_precision(scores, gold) == pytest.approx(0.525, abs=1e-12)


def test_average_precision_tie_break_by_index():
    assert average_precision([0.5, 0.5], [1, 0]) == 1.0
    assert average_precision([0.5, 0.5], [0, 1]) == 0.5


def test_average_precision_errors():
    with pytest.raises(NoPositives):
        average_precision([0.1, 0.2], [0, 0])
    with pytest.raises(LengthMismatch):
        average_precision([0.1], [0, 1])
    with pytest.raises(ValueError):
        average_precision([0.1, 0.2], [0, 2])


def test_f1_examples():
    assert f1_score(ConfusionCounts(tp=10)) == 1.0
    assert f1_score(ConfusionCounts(fp=5, fn=5)) == 0.0
    assert f1_score(ConfusionCounts(tp=3, fp=1, fn=2)) == pytest.approx(f1_oracle(3, 1, 2), abs=1e-15)
    assert f1_oracle(3, 1, 2) == pytest.approx(6 / 9)
    assert f1_score(ConfusionCounts(tn=7)) == 0.0


def test_confusion_from_labels():
    c = ConfusionCounts.from_labels([1, 1, 0, 0, 1], [1, 0, 1, 0, 1])
    assert (c.tp, c.fp, c.fn, c.tn) == (2, 1, 1, 1)
    assert c.total == 5
    with pytest.raises(ValueError):
        ConfusionCounts(tp=-1)


small_floats = st.integers(-20, 20).map(float)
paired = st.integers(2, 30).flatmap(
    lambda n: st.tuples(st.lists(small_floats, min_size=n, max_size=n), st.lists(small_floats, min_size=n, max_size=n))
)


@given(paired)
def test_spearman_matches_oracle(pair):
    xs, ys = pair
    assume(len(set(xs)) > 1 and len(set(ys)) > 1)
    assert spearman_rho(xs, ys) == pytest.approx(spearman_oracle(xs, ys), abs=1e-10)


@given(paired)
def test_spearman_monotone_invariance(pair):
    xs, ys = pair
    assume(len(set(xs)) > 1 and len(set(ys)) > 1)
    base = spearman_rho(xs, ys)
    transformed = [math.exp(x / 10) + 3 * x for x in xs]
    assert spearman_rho(transformed, ys) == pytest.approx(base, abs=1e-12)
    assert spearman_rho(xs, [y ** 3 for y in ys]) == pytest.approx(base, abs=1e-12)


@given(st.lists(st.integers(-100, 100), min_size=2, max_size=30, unique=True))
def test_spearman_self_and_reverse(xs):
    assert spearman_rho(xs, xs) == pytest.approx(1.0, abs=1e-12)
    assert spearman_rho(xs, [-x for x in xs]) == pytest.approx(-1.0, abs=1e-12)


labelled = st.integers(1, 30).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 6).map(float), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
    )
)


@given(labelled)
def test_average_precision_matches_oracle(pair):
    scores, gold = pair
    assume(any(gold))
    assert average_precision(scores, gold) == pytest.approx(average_precision_oracle(scores, gold), abs=1e-10)


@given(labelled)
def test_average_precision_is_one_iff_positives_first(pair):
    scores, gold = pair
    assume(any(gold))
    ranking = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    ranked_gold = [gold[i] for i in ranking]
    n_pos = sum(gold)
    positives_first = all(ranked_gold[:n_pos])
    assert (average_precision(scores, gold) == 1.0) == positives_first


@given(st.integers(2, 25).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0, 1, allow_nan=False), min_size=n, max_size=n, unique=True),
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
    st.permutations(list(range(n))),
)))
def test_average_precision_permutation_invariant_with_distinct_scores(args):
    scores, gold, perm = args
    assume(any(gold))
    permuted = average_precision([scores[i] for i in perm], [gold[i] for i in perm])
    assert permuted == pytest.approx(average_precision(scores, gold), abs=1e-12)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_f1_monotone_in_tp(tp, fp, fn):
    assert f1_score(ConfusionCounts(tp=tp + 1, fp=fp, fn=fn)) >= f1_score(ConfusionCounts(tp=tp, fp=fp, fn=fn))
    assert f1_score(ConfusionCounts(tp=tp, fp=fp, fn=fn)) == pytest.approx(f1_oracle(tp, fp, fn), abs=1e-12)
