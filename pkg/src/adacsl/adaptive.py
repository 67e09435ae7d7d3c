"""Adaptive cost tuning: retrain with a growing false-positive cost until the budget stops binding."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

from . import tree as cstree
from .core import BudgetSpec, CostMatrix, Dataset, confusion, total_cost
from .errors import InputError, NonConvergenceError
from .threshold import (
    UTILIZATION_MODES,
    BudgetedLabels,
    ThresholdPair,
    budgeted_labels,
    classifier_threshold,
    classify_with_budget,
    static_threshold,
)
from .tree import TreeModel, TreeParams

TRACE_COLUMNS = ("iteration", "c10", "tau", "tau_d", "train_cost", "n_positive")


@dataclass(frozen=True)
class AdaptiveConfig:
    initial_costs: CostMatrix = field(default_factory=lambda: CostMatrix(0.0, 10.0, 1.0, 0.0))
    epsilon: float = 1.0
    max_iterations: int = 1000
    hyperparams: TreeParams = field(default_factory=TreeParams)
    utilization: str = "full"
    vacuous_fallback: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InputError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise InputError("max_iterations must be an integer >= 1")
        if self.utilization not in UTILIZATION_MODES:
            raise InputError(f"utilization must be one of {UTILIZATION_MODES}")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    c10: float
    tau: float
    tau_d: float
    train_cost: float
    n_positive: int


@dataclass(frozen=True)
class AdaptiveTrace:
    records: tuple = ()

    def __len__(self):
        return len(self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            w.writerow([r.iteration, repr(r.c10), repr(r.tau), repr(r.tau_d),
                        repr(r.train_cost), r.n_positive])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class AdaptiveResult:
    model: TreeModel
    trace: AdaptiveTrace
    labels: BudgetedLabels
    train_cost: float
    fell_back: bool = False


def project_budget(test_budget: BudgetSpec, n_train: int, n_test: int) -> BudgetSpec:
    """Scale a test-set budget to the training set by the size ratio, rounding down."""
    if n_train < 1 or n_test < 1:
        raise InputError("set sizes must be positive")
    return BudgetSpec(test_budget.limit * n_train // n_test, n_train)


def fit_adaptive(data: Dataset, config: AdaptiveConfig, budget: BudgetSpec,
                 seed: int = 0) -> AdaptiveResult:
    """Raise the false-positive cost by ``epsilon`` per round until the static threshold meets the budget.

    Each round fits a tree, groups the training set by leaf score and labels it
    under the budget. The first round whose classifier-dependent threshold
    falls back to the static threshold ends the loop and its model is returned,
    together with the training labels deployed under ``config.utilization``.

    A round can meet the stopping rule vacuously, when every leaf score drops
    below the static threshold and the tree no longer ranks anything. With
    ``vacuous_fallback`` the model of the preceding round is returned instead.
    """
    if budget.basis_size != data.n:
        raise InputError(
            f"budget basis {budget.basis_size} does not match training size {data.n}; "
            "project the test budget first"
        )
    base = config.initial_costs
    records = []
    model = None
    previous = None
    for i in range(1, config.max_iterations + 1):
        costs = base.with_fp_cost(base.c10 + (i - 1) * config.epsilon)
        model = cstree.fit(data, costs, config.hyperparams, seed=seed, iteration_index=i)
        grouping = cstree.leaf_groups(model, data)
        tau = static_threshold(costs)
        tau_d = classifier_threshold(grouping, tau, budget)
        labelled = classify_with_budget(grouping, ThresholdPair(tau, tau_d), budget, seed)
        cost = total_cost(confusion(data.labels, labelled.labels), base)
        records.append(IterationRecord(i, costs.c10, tau, tau_d, cost, labelled.n_positive))
        if tau_d <= tau:
            trace = AdaptiveTrace(tuple(records))
            vacuous = grouping.groups[0].score < tau
            if vacuous and config.vacuous_fallback and previous is not None:
                # every score fell below tau: the budget is met only by labelling nobody,
                # so keep the last model that still ranked instances
                model, grouping, tau = previous
            _, deployed = budgeted_labels(grouping, tau, budget, seed, config.utilization)
            deployed_cost = total_cost(confusion(data.labels, deployed.labels), base)
            return AdaptiveResult(model, trace, deployed, deployed_cost,
                                  fell_back=vacuous and config.vacuous_fallback and previous is not None)
        previous = (model, grouping, tau)
    raise NonConvergenceError(
        f"static threshold still below the classifier-dependent threshold after "
        f"{config.max_iterations} iterations (last c10={records[-1].c10})",
        trace=AdaptiveTrace(tuple(records)),
        model=model,
    )


def apply_to_test(model: TreeModel, test: Dataset, test_budget: BudgetSpec, seed: int = 0,
                  utilization: str = "full", tau: Optional[float] = None) -> BudgetedLabels:
    """Label a test set with a fitted model under the test budget.

    Scores are grouped on the test set itself and the budget is re-applied
    there, so the deployed labels never exceed ``test_budget.limit``. ``tau``
    defaults to the static threshold of the model's training costs.
    """
    if tau is None:
        tau = static_threshold(model.train_costs)
    grouping = cstree.leaf_groups(model, test)
    _, labels = budgeted_labels(grouping, tau, test_budget, seed, utilization)
    return labels
