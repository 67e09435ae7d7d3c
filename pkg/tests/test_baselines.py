import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adacsl.baselines import expected_posthoc_cost, posthoc_allocate, run_baseline
from adacsl.core import BudgetSpec, ConfusionCounts, CostMatrix, Dataset, confusion, total_cost
from adacsl.data import running_example
from adacsl.threshold import static_threshold
from adacsl.tree import LeafGrouping, TreeParams

COVID = CostMatrix(0, 19, 1, 0)


def test_top_two_strict_order():
    out = posthoc_allocate([0.9, 0.8, 0.7, 0.6, 0.5], BudgetSpec(2, 5), 0)
    assert out.labels.tolist() == [1, 1, 0, 0, 0]


def test_tied_block_is_sampled():
    scores = [0.4] * 200 + [0.025] * 800
    out = posthoc_allocate(scores, BudgetSpec(100, 1000), 11)
    assert out.n_positive == 100
    assert out.labels[:200].sum() == 100


def test_loose_budget_labels_everyone():
    out = posthoc_allocate([0.1, 0.2, 0.3], BudgetSpec(3, 3), 0)
    assert out.labels.tolist() == [1, 1, 1]


def test_expected_cost_model_a():
    g = LeafGrouping.from_sizes((0.4, 0.025), (200, 800))
    assert expected_posthoc_cost(g, (80, 20), BudgetSpec(100, 1000), COVID) == 1200


def test_expected_cost_model_b_using_all_tests():
    # the remaining 20 tests go to random members of the low-score group
    g = LeafGrouping.from_sizes((0.75, 40 / 920), (80, 920))
    cost = expected_posthoc_cost(g, (60, 40), BudgetSpec(100, 1000), COVID)
    assert cost == pytest.approx(782.6, abs=0.05)
    assert cost == pytest.approx(20 + 20 * 880 / 920 + 19 * (40 - 20 * 40 / 920))


def test_expected_cost_without_partial_group():
    g = LeafGrouping.from_sizes((0.8, 0.3), (5, 5))
    conf = ConfusionCounts(tp=4, fp=1, tn=4, fn=1)
    assert expected_posthoc_cost(g, (4, 1), BudgetSpec(5, 10), COVID) == total_cost(conf, COVID)


def test_expected_cost_all_positive_boundary():
    g = LeafGrouping.from_sizes((0.9, 0.2), (10, 10))
    # boundary group all positive: every pick is a hit
    assert expected_posthoc_cost(g, (10, 0), BudgetSpec(4, 20), COVID) == 19 * 6


def test_monte_carlo_agreement():
    g = LeafGrouping.from_sizes((0.8, 0.5, 0.1), (3, 4, 3))
    pos = (2, 2, 0)
    y = np.array([1, 1, 0, 1, 1, 0, 0, 0, 0, 0])
    scores = g.instance_scores()
    b = BudgetSpec(5, 10)
    cm = CostMatrix(0, 7, 2, 0)
    draws = np.array([total_cost(confusion(y, posthoc_allocate(scores, b, s).labels), cm)
                      for s in range(100_000)])
    se = draws.std(ddof=1) / np.sqrt(draws.size)
    assert abs(draws.mean() - expected_posthoc_cost(g, pos, b, cm)) < 3 * se


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=30), st.integers(0, 30), st.integers(0, 2**31))
def test_never_skips_a_higher_score(levels, limit, seed):
    s = np.array(levels) / 6
    out = posthoc_allocate(s, BudgetSpec(min(limit, s.size), s.size), seed)
    assert out.n_positive == min(limit, s.size)
    if 0 < out.n_positive < s.size:
        assert s[out.labels == 1].min() >= s[out.labels == 0].max()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 10), min_size=1, max_size=30), st.integers(0, 2**31))
def test_loose_budget_agrees_with_threshold_rule(levels, seed):
    s = np.array(levels) / 10
    tau = static_threshold(CostMatrix(0, 4, 1, 0))
    above = int((s >= tau).sum())
    out = posthoc_allocate(s, BudgetSpec(above, s.size), seed)
    assert np.all(out.labels[s > tau] == 1)


def separable():
    X = np.array([[0.0], [0.1], [0.2], [0.9], [1.0]] * 4)
    y = np.array([0, 0, 0, 1, 1] * 4)
    return Dataset(X, y, ["x"])


@pytest.mark.parametrize("kind", ["plain-tree", "cost-tree"])
def test_separable_exact_budget_costs_nothing(kind):
    d = separable()
    r = run_baseline(kind, d, d, COVID, BudgetSpec(d.n_pos, d.n), TreeParams(max_depth=2), 0)
    assert r.cost == 0


def test_zero_budget_costs_all_positives():
    d = separable()
    r = run_baseline("cost-tree", d, d, COVID, BudgetSpec(0, d.n), TreeParams(max_depth=2), 0)
    assert r.allocation.n_positive == 0
    assert r.cost == 19 * d.n_pos


def test_cost_tree_predicts_more_positives_before_allocation():
    d = running_example(seed=2)
    b = BudgetSpec(100, d.n)
    hp = TreeParams(max_depth=2)
    plain = run_baseline("plain-tree", d, d, COVID, b, hp, 0)
    cost = run_baseline("cost-tree", d, d, COVID, b, hp, 0)
    assert cost.unconstrained_positive >= plain.unconstrained_positive
    assert cost.unconstrained_positive > 0
