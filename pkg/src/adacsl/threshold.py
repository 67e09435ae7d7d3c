"""Static and classifier-dependent thresholds, and budgeted labelling of score groups."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BudgetSpec, CostMatrix
from .errors import DegenerateCostError, InputError
from .tree import LeafGrouping

UTILIZATION_MODES = ("full", "threshold")


@dataclass(frozen=True)
class ThresholdPair:
    tau: float
    tau_d: float

    def __post_init__(self):
        if self.tau_d < self.tau:
            raise InputError(f"tau_d={self.tau_d} must not be below tau={self.tau}")


@dataclass(frozen=True, eq=False)
class BudgetedLabels:
    labels: np.ndarray
    n_positive: int
    tie_group_score: Optional[float] = None
    tie_fill: int = 0


def step(z: float) -> int:
    """Unit step with step(0) == 1."""
    return 1 if z >= 0 else 0


def static_threshold(costs: CostMatrix) -> float:
    """Cost-optimal score cutoff when no budget applies."""
    denom = costs.c01 + costs.c10 - costs.c00 - costs.c11
    if denom <= 0:
        raise DegenerateCostError(
            f"threshold undefined: c01+c10-c00-c11 = {denom} is not positive"
        )
    tau = (costs.c10 - costs.c00) / denom
    if not 0.0 <= tau <= 1.0:
        raise DegenerateCostError(f"cost matrix yields threshold {tau} outside [0, 1]")
    return tau


def classifier_threshold(grouping: LeafGrouping, tau: float, budget: BudgetSpec) -> float:
    """Highest group score at which the cumulative group mass reaches the budget, floored at ``tau``.

    Returns ``tau`` when every group at or above ``tau`` fits inside the budget.
    """
    limit = budget.limit
    best = tau
    cum = 0
    for g in grouping.groups:
        cum += g.size
        term = step(g.score - tau) * step(cum - limit) * g.score
        if term > best:
            best = term
    return best


def _tie_group(grouping: LeafGrouping, tau_d: float):
    for g in grouping.groups:
        if g.score == tau_d:
            return g
    return None


def _mass_above(grouping: LeafGrouping, tau_d: float) -> int:
    return int(sum(g.size for g in grouping.groups if g.score > tau_d))


def tie_proportion(grouping: LeafGrouping, tau_d: float, budget: BudgetSpec) -> float:
    tie = _tie_group(grouping, tau_d)
    if tie is None:
        raise InputError(f"no score group sits at tau_d={tau_d}")
    if tie.size == 0:
        return 1.0
    p = (budget.limit - _mass_above(grouping, tau_d)) / tie.size
    return min(1.0, max(0.0, p))


def classify_with_budget(grouping: LeafGrouping, pair: ThresholdPair, budget: BudgetSpec,
                         seed: int) -> BudgetedLabels:
    """Label groups above ``tau_d`` positive, groups below negative, and fill the tie group.

    The tie group receives exactly ``limit - (mass above tau_d)`` positives,
    sampled without replacement, so a binding budget is used to the last unit.
    """
    labels = np.zeros(grouping.n, dtype=np.int8)
    above = 0
    for g in grouping.groups:
        if g.score > pair.tau_d:
            labels[list(g.member_indices)] = 1
            above += g.size
    tie = _tie_group(grouping, pair.tau_d)
    fill = 0
    if tie is not None and tie.size:
        # tau_d > tau: exact remaining budget; tau_d == tau: ceil(p*size) with p clamped,
        # which is the same integer because the numerator is a whole count
        fill = int(min(tie.size, max(0, budget.limit - above)))
        if fill:
            rng = np.random.default_rng(seed)
            chosen = rng.choice(np.asarray(tie.member_indices), size=fill, replace=False)
            labels[chosen] = 1
    return BudgetedLabels(
        labels=labels,
        n_positive=int(labels.sum()),
        tie_group_score=None if tie is None else tie.score,
        tie_fill=fill,
    )


def budgeted_labels(grouping: LeafGrouping, tau: float, budget: BudgetSpec, seed: int,
                    utilization: str = "full") -> tuple[ThresholdPair, BudgetedLabels]:
    """Classify a grouping under a budget.

    ``"threshold"`` keeps the cost-derived floor ``tau``, so a loose budget may be
    left partly unused. ``"full"`` drops the floor to zero and always assigns
    exactly ``min(limit, N)`` positives to the highest-scored groups.
    """
    if utilization not in UTILIZATION_MODES:
        raise InputError(f"utilization must be one of {UTILIZATION_MODES}, got {utilization!r}")
    floor = tau if utilization == "threshold" else 0.0
    pair = ThresholdPair(floor, classifier_threshold(grouping, floor, budget))
    return pair, classify_with_budget(grouping, pair, budget, seed)
