"""Post-hoc allocation baselines: train without the budget, then give the budget to the top scores."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import tree as cstree
from .core import BudgetSpec, ConfusionCounts, CostMatrix, Dataset, Metrics, confusion, metrics, total_cost
from .errors import InputError
from .threshold import BudgetedLabels, static_threshold
from .tree import LeafGrouping, TreeModel, TreeParams

SYMMETRIC_COSTS = CostMatrix(0.0, 1.0, 1.0, 0.0)
MODEL_KINDS = ("plain-tree", "cost-tree")


def posthoc_allocate(scores, budget: BudgetSpec, seed: int) -> BudgetedLabels:
    """Label the ``budget.limit`` highest-scored instances positive.

    Instances tied at the boundary score are sampled uniformly with a seeded
    generator.
    """
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or not np.all(np.isfinite(s)):
        raise InputError("scores must be a finite 1-d vector")
    n = s.size
    labels = np.zeros(n, dtype=np.int8)
    take = min(budget.limit, n)
    if take == 0:
        return BudgetedLabels(labels, 0)
    order = np.argsort(-s, kind="stable")
    boundary = s[order[take - 1]]
    above = np.flatnonzero(s > boundary)
    labels[above] = 1
    tied = np.flatnonzero(s == boundary)
    fill = take - above.size
    rng = np.random.default_rng(seed)
    labels[rng.choice(tied, size=fill, replace=False)] = 1
    return BudgetedLabels(labels, int(labels.sum()), float(boundary), int(fill))


def expected_posthoc_cost(grouping: LeafGrouping, group_positive_counts, budget: BudgetSpec,
                          costs: CostMatrix) -> float:
    """Exact expected total cost of post-hoc allocation over a score grouping.

    Groups are filled in score order; the group where the budget runs out gets
    a uniformly random subset, contributing its pro-rata share of positives.
    """
    pos = [int(p) for p in group_positive_counts]
    if len(pos) != len(grouping.groups):
        raise InputError("need one positive count per group")
    remaining = budget.limit
    tp = fp = fn = tn = Fraction(0)
    for g, p in zip(grouping.groups, pos):
        if not 0 <= p <= g.size:
            raise InputError(f"positive count {p} outside [0, {g.size}]")
        take = min(remaining, g.size)
        remaining -= take
        exp_tp = Fraction(take * p, g.size) if g.size else Fraction(0)
        exp_fp = take - exp_tp
        tp += exp_tp
        fp += exp_fp
        fn += p - exp_tp
        tn += (g.size - p) - exp_fp
    cost = (fn * Fraction(costs.c01) + fp * Fraction(costs.c10)
            + tp * Fraction(costs.c11) + tn * Fraction(costs.c00))
    return float(cost)


@dataclass(frozen=True, eq=False)
class BaselineResult:
    model: TreeModel
    allocation: BudgetedLabels
    confusion: ConfusionCounts
    cost: float
    metrics: Metrics
    unconstrained_positive: int


def train_costs_for(kind: str, costs: CostMatrix) -> CostMatrix:
    if kind == "plain-tree":
        return SYMMETRIC_COSTS
    if kind == "cost-tree":
        return costs
    raise InputError(f"model kind must be one of {MODEL_KINDS}, got {kind!r}")


def run_baseline(model_kind: str, data: Dataset, test: Dataset, costs: CostMatrix,
                 budget: BudgetSpec, hyperparams: Optional[TreeParams] = None,
                 seed: int = 0) -> BaselineResult:
    """Train a plain or cost-sensitive tree, then allocate the test budget post hoc.

    The returned cost is always evaluated with ``costs``, whatever the model was
    trained with.
    """
    train_cm = train_costs_for(model_kind, costs)
    model = cstree.fit(data, train_cm, hyperparams, seed=seed)
    scores = cstree.predict_scores(model, test.features)
    alloc = posthoc_allocate(scores, budget, seed)
    conf = confusion(test.labels, alloc.labels)
    unconstrained = int(np.count_nonzero(scores >= static_threshold(train_cm)))
    return BaselineResult(model, alloc, conf, total_cost(conf, costs), metrics(conf), unconstrained)
