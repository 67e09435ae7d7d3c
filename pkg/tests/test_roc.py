import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adacsl import tree
from adacsl.core import BudgetSpec, ConfusionCounts, CostMatrix, confusion, total_cost
from adacsl.errors import DegenerateDataError, GeometryError
from adacsl.roc import (
    Line,
    RocCurve,
    constraint_line,
    intersect,
    iso_loss_line,
    loss_at,
    min_feasible_cost,
    optimal_point,
    roc_curve,
)
from adacsl.tree import LeafGrouping
from conftest import model_a_dataset

COVID = CostMatrix(0, 19, 1, 0)


def model_a_curve():
    d = model_a_dataset()
    m = tree.fit(d, COVID, tree.TreeParams(max_depth=1))
    return roc_curve(tree.leaf_groups(m, d), d.labels)


def test_curve_from_two_groups():
    g = LeafGrouping.from_sizes((0.8, 0.3), (5, 5))
    labels = [1, 1, 1, 1, 0, 1, 0, 0, 0, 0]
    c = roc_curve(g, labels)
    assert c.points == ((0.0, 0.0), (0.2, 0.8), (1.0, 1.0))


def test_perfect_curve():
    g = LeafGrouping.from_sizes((1.0, 0.0), (2, 3))
    assert roc_curve(g, [1, 1, 0, 0, 0]).points == ((0.0, 0.0), (0.0, 1.0), (1.0, 1.0))


def test_single_group_is_diagonal():
    g = LeafGrouping.from_sizes((0.4,), (5,))
    assert roc_curve(g, [1, 0, 1, 0, 0]).points == ((0.0, 0.0), (1.0, 1.0))


def test_single_class_rejected():
    g = LeafGrouping.from_sizes((0.4,), (3,))
    with pytest.raises(DegenerateDataError):
        roc_curve(g, [1, 1, 1])


def test_iso_loss_line():
    line = iso_loss_line(COVID, 100, 900, 500)
    assert line.slope == pytest.approx(900 / 1900)
    assert line.at(120 / 900) == pytest.approx(0.8)
    assert iso_loss_line(COVID, 100, 900, 19 * 100).intercept == pytest.approx(0.0)


def test_constraint_line():
    line = constraint_line(100, 900, BudgetSpec(100, 1000))
    assert (line.slope, line.intercept) == (-9.0, 1.0)
    assert constraint_line(100, 900, BudgetSpec(1000, 1000)).at(1.0) == pytest.approx(1.0)
    assert constraint_line(100, 900, BudgetSpec(0, 1000)).at(0.0) == 0.0


def test_running_example_optimum_unconstrained():
    c = model_a_curve()
    best = optimal_point(c, COVID, 100, 900)
    assert best.point == pytest.approx((120 / 900, 0.8))
    assert best.loss == 500


def test_running_example_optimum_with_budget():
    c = model_a_curve()
    best = optimal_point(c, COVID, 100, 900, feasible_only=True, budget=BudgetSpec(100, 1000))
    assert best.point[0] == pytest.approx(60 / 900, abs=1e-9)
    assert best.point[1] == pytest.approx(0.4, abs=1e-9)
    assert best.loss == pytest.approx(1200, abs=1e-9)


def test_perfect_curve_optimum():
    g = LeafGrouping.from_sizes((1.0, 0.0), (2, 3))
    c = roc_curve(g, [1, 1, 0, 0, 0])
    best = optimal_point(c, CostMatrix(0, 7, 2, 0), 2, 3)
    assert best.point == (0.0, 1.0) and best.loss == 0


def test_intersection_segment():
    c = RocCurve(((0.0, 0.0), (120 / 900, 0.8), (1.0, 1.0)), ((0, 0), (120, 80), (900, 100)),
                 100, 900)
    f, t = intersect(c, Line(-9.0, 1.0))
    assert f == pytest.approx(60 / 900, abs=1e-12)
    assert t == pytest.approx(0.4, abs=1e-12)


def test_intersection_at_shared_endpoint():
    c = model_a_curve()
    assert intersect(c, constraint_line(100, 900, BudgetSpec(1000, 1000))) == pytest.approx((1.0, 1.0))


@pytest.mark.parametrize("m,b", [(-1.0, 0.5), (-9.0, 1.0), (-0.25, 0.3), (-3.0, 2.5)])
def test_intersection_with_diagonal(m, b):
    diag = RocCurve(((0.0, 0.0), (1.0, 1.0)), ((0, 0), (1, 1)), 1, 1)
    f, t = intersect(diag, Line(m, b))
    assert f == pytest.approx(b / (1 - m))
    assert t == pytest.approx(f)


def test_intersection_missing():
    diag = RocCurve(((0.0, 0.0), (1.0, 1.0)), ((0, 0), (1, 1)), 1, 1)
    with pytest.raises(GeometryError):
        intersect(diag, Line(-1.0, 5.0))
    with pytest.raises(GeometryError):
        intersect(diag, Line(1.0, 0.0))


def test_min_feasible_cost():
    assert min_feasible_cost(100, BudgetSpec(100, 1000), COVID) == 0
    assert min_feasible_cost(100, BudgetSpec(80, 1000), COVID) == 380
    assert min_feasible_cost(100, BudgetSpec(150, 1000), COVID) == 50


def test_exhaustive_labelings_never_beat_floor():
    rng = np.random.default_rng(7)
    for _ in range(40):
        n = int(rng.integers(2, 13))
        y = rng.integers(0, 2, n)
        cm = CostMatrix(0, float(rng.integers(2, 20)), float(rng.integers(1, 5)), 0)
        for b in range(n + 1):
            floor = min_feasible_cost(int(y.sum()), BudgetSpec(b, n), cm)
            for chosen in itertools.combinations(range(n), b):
                pred = np.zeros(n, dtype=int)
                pred[list(chosen)] = 1
                assert total_cost(confusion(y, pred), cm) >= floor


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31))
def test_vertex_losses_match_counts(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 60))
    y = rng.integers(0, 2, n)
    y[0], y[1] = 0, 1
    scores = rng.integers(0, 5, n) / 4
    g = LeafGrouping.from_scores(scores)
    labels = y  # grouping indices refer to positions in y
    c = roc_curve(g, labels)
    cm = CostMatrix(0, float(rng.integers(1, 20)), float(rng.integers(1, 20)), 0)
    for (fp, tp), pt in zip(c.counts, c.points):
        conf = ConfusionCounts(tp, fp, c.n_neg - fp, c.n_pos - tp)
        assert loss_at(pt, cm, c.n_pos, c.n_neg) == pytest.approx(total_cost(conf, cm), abs=1e-9)
        line = iso_loss_line(cm, c.n_pos, c.n_neg, total_cost(conf, cm))
        assert line.at(pt[0]) == pytest.approx(pt[1], abs=1e-9)
    limit = int(rng.integers(0, n + 1))
    if 0 < limit < n:
        cross = intersect(c, constraint_line(c.n_pos, c.n_neg, BudgetSpec(limit, n)))
        assert cross[0] * c.n_neg + cross[1] * c.n_pos == pytest.approx(limit, abs=1e-9)


@given(st.floats(0, 1000), st.floats(0, 1000))
def test_iso_loss_lines_are_parallel_and_ordered(l1, l2):
    a = iso_loss_line(COVID, 100, 900, min(l1, l2))
    b = iso_loss_line(COVID, 100, 900, max(l1, l2))
    assert a.slope == b.slope
    assert a.intercept >= b.intercept
