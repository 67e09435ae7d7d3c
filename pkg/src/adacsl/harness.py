"""Budget sweeps over repeated stratified cross-validation, with paired significance tests."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from . import tree as cstree
from .adaptive import AdaptiveConfig, apply_to_test, fit_adaptive, project_budget
from .baselines import posthoc_allocate, train_costs_for
from .core import BudgetSpec, CostMatrix, Dataset, confusion, format_ratio, metrics, total_cost
from .data import read_kv, reduce_features, split_list, stratified_folds
from .errors import AggregationError, InputError, NonConvergenceError
from .threshold import budgeted_labels
from .tree import TreeParams

log = logging.getLogger(__name__)

MODELS = ("adacsl", "plain-dt", "cs-dt")
REPORT_COLUMNS = ("feature_fraction", "budget_fraction", "model", "run", "cost",
                  "accuracy", "precision", "n_positive")
AGGREGATE_COLUMNS = ("feature_fraction", "budget_fraction", "model", "runs", "mean_cost",
                     "mean_accuracy", "mean_precision", "p_value", "p_flag")
GRID_KEYS = ("max_depth", "min_samples_leaf", "min_cost_reduction")


@dataclass(frozen=True)
class SweepConfig:
    budget_fractions: tuple = (0.25, 0.5, 0.75)
    feature_fractions: tuple = (1.0,)
    k_folds: int = 3
    repeats: int = 10
    base_seed: int = 0
    costs: CostMatrix = field(default_factory=lambda: CostMatrix(0.0, 10.0, 1.0, 0.0))
    epsilon: float = 1.0
    max_iterations: int = 1000
    grid: tuple = (("max_depth", (3, 5)), ("min_samples_leaf", (5,)))
    bins: int = 10
    sign_test: bool = False

    def __post_init__(self):
        for frac in tuple(self.budget_fractions) + tuple(self.feature_fractions):
            if not 0 < frac <= 1:
                raise InputError(f"fractions must lie in (0, 1], got {frac}")
        if self.k_folds < 2 or self.repeats < 1:
            raise InputError("need k_folds >= 2 and repeats >= 1")
        for key, values in self.grid:
            if key not in GRID_KEYS:
                raise InputError(f"unknown grid key {key!r}; expected one of {GRID_KEYS}")
            if not values:
                raise InputError(f"grid entry {key!r} is empty")

    def grid_points(self) -> list:
        keys = [k for k, _ in self.grid]
        return [TreeParams(**dict(zip(keys, combo)))
                for combo in itertools.product(*(v for _, v in self.grid))]

    @classmethod
    def from_file(cls, path) -> "SweepConfig":
        kv = read_kv(path)
        floats = lambda key, default: tuple(float(v) for v in split_list(kv[key])) if key in kv else default
        grid = []
        for key in GRID_KEYS:
            gkey = f"grid.{key}"
            if gkey in kv:
                cast = float if key == "min_cost_reduction" else int
                grid.append((key, tuple(cast(v) for v in split_list(kv[gkey]))))
        base = cls()
        return cls(
            budget_fractions=floats("budget_fractions", base.budget_fractions),
            feature_fractions=floats("feature_fractions", base.feature_fractions),
            k_folds=int(kv.get("k_folds", base.k_folds)),
            repeats=int(kv.get("repeats", base.repeats)),
            base_seed=int(kv.get("base_seed", base.base_seed)),
            costs=CostMatrix(0.0, float(kv.get("c_fn", base.costs.c01)),
                             float(kv.get("c_fp", base.costs.c10)), 0.0),
            epsilon=float(kv.get("epsilon", base.epsilon)),
            max_iterations=int(kv.get("max_iterations", base.max_iterations)),
            grid=tuple(grid) if grid else base.grid,
            bins=int(kv.get("bins", base.bins)),
            sign_test=kv.get("sign_test", "false").lower() in ("1", "true", "yes"),
        )


@dataclass(frozen=True)
class ReportRow:
    feature_fraction: float
    budget_fraction: float
    model: str
    run: int
    cost: float
    accuracy: float
    precision: Optional[float]
    n_positive: int
    budget: int = 0


@dataclass(frozen=True)
class AggregateRow:
    feature_fraction: float
    budget_fraction: float
    model: str
    runs: int
    mean_cost: float
    mean_accuracy: float
    mean_precision: Optional[float]
    p_value: Optional[float]
    p_flag: str = ""


@dataclass(frozen=True)
class SweepReport:
    rows: tuple
    aggregates: tuple
    nonconverged: int = 0

    def report_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            w.writerow([repr(r.feature_fraction), repr(r.budget_fraction), r.model, r.run,
                        repr(r.cost), repr(r.accuracy), format_ratio(r.precision), r.n_positive])
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for a in self.aggregates:
            w.writerow([repr(a.feature_fraction), repr(a.budget_fraction), a.model, a.runs,
                        repr(a.mean_cost), repr(a.mean_accuracy), format_ratio(a.mean_precision),
                        "" if a.p_value is None else repr(a.p_value), a.p_flag])
        return buf.getvalue()


# -- significance ----------------------------------------------------------------

@dataclass(frozen=True)
class Significance:
    p_value: float
    flag: str = ""
    sign_p_value: Optional[float] = None


def significance(costs_a, costs_b, sign_test: bool = False) -> Significance:
    """Two-sided paired t-test on run-paired costs.

    Zero-variance differences are degenerate for the t statistic: a zero mean
    difference gives p = 1 ("no difference"), anything else p = 0 ("degenerate").
    """
    a = np.asarray(costs_a, dtype=float)
    b = np.asarray(costs_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError("paired samples must be 1-d with equal length")
    if a.size < 2:
        raise InputError("a paired test needs at least two pairs")
    d = a - b
    sign_p = None
    if sign_test:
        nonzero = d[d != 0]
        if nonzero.size:
            sign_p = float(stats.binomtest(int((nonzero > 0).sum()), nonzero.size, 0.5).pvalue)
        else:
            sign_p = 1.0
    if np.all(d == d[0]):
        if d[0] == 0:
            return Significance(1.0, "no difference", sign_p)
        return Significance(0.0, "degenerate", sign_p)
    p = float(stats.ttest_rel(a, b).pvalue)
    return Significance(min(1.0, max(0.0, p)), "", sign_p)


def paired_significance(costs_a, costs_b) -> float:
    return significance(costs_a, costs_b).p_value


# -- one cross-validation run ----------------------------------------------------

def derive_seed(base_seed: int, *parts) -> int:
    key = "|".join(repr(p) for p in parts).encode()
    return (base_seed + zlib.crc32(key)) % (2**32)


def test_budget_for(fraction: float, test_positives: int, n_test: int) -> int:
    """Nearest whole number of positives for a fraction of the test fold's positives."""
    return min(n_test, int(math.floor(fraction * test_positives + 0.5)))


def _evaluate(labels_true, labels_pred, costs):
    conf = confusion(labels_true, labels_pred)
    return total_cost(conf, costs), metrics(conf), conf.predicted_positive


def _run_adacsl(train, test, costs, params, epsilon, max_iter, train_budget, test_budget, seed):
    cfg = AdaptiveConfig(costs, epsilon, max_iter, params, "full")
    try:
        res = fit_adaptive(train, cfg, train_budget, seed)
        model, train_cost, converged = res.model, res.train_cost, True
    except NonConvergenceError as exc:
        model = exc.model
        grouping = cstree.leaf_groups(model, train)
        _, lab = budgeted_labels(grouping, 0.0, train_budget, seed, "full")
        train_cost = total_cost(confusion(train.labels, lab.labels), costs)
        converged = False
    deployed = apply_to_test(model, test, test_budget, seed, "full")
    return train_cost, _evaluate(test.labels, deployed.labels, costs), converged


def _run_posthoc(kind, train, test, costs, params, train_budget, test_budget, seed):
    model = cstree.fit(train, train_costs_for(kind, costs), params, seed=seed)
    tr = posthoc_allocate(cstree.predict_scores(model, train.features), train_budget, seed)
    train_cost = total_cost(confusion(train.labels, tr.labels), costs)
    te = posthoc_allocate(cstree.predict_scores(model, test.features), test_budget, seed)
    return train_cost, _evaluate(test.labels, te.labels, costs), True


def run_cell_task(data: Dataset, split, ff: float, bf: float, config: SweepConfig):
    """All models and grid points for one (feature fraction, budget fraction, run)."""
    train = data.subset(split.train)
    test = data.subset(split.test)
    limit = test_budget_for(bf, test.n_pos, test.n)
    test_budget = BudgetSpec(limit, test.n)
    train_budget = project_budget(test_budget, train.n, test.n)
    out = []
    for gi, params in enumerate(config.grid_points()):
        for model in MODELS:
            seed = derive_seed(config.base_seed, ff, bf, split.run_index, model)
            if model == "adacsl":
                result = _run_adacsl(train, test, config.costs, params, config.epsilon,
                                     config.max_iterations, train_budget, test_budget, seed)
            else:
                kind = "plain-tree" if model == "plain-dt" else "cost-tree"
                result = _run_posthoc(kind, train, test, config.costs, params,
                                      train_budget, test_budget, seed)
            train_cost, (cost, m, n_positive), converged = result
            row = ReportRow(ff, bf, model, split.run_index, cost, m.accuracy, m.precision,
                            n_positive, limit)
            out.append((gi, model, train_cost, row, converged))
    return out


def run_sweep(data: Dataset, config: SweepConfig, jobs: int = 1) -> SweepReport:
    """Evaluate AdaCSL against plain-DT and CS-DT post-hoc allocation across the sweep grid.

    Hyperparameters are chosen per (cell, model) by the lowest mean
    training-side cost over all runs of the cell.
    """
    tasks = []
    for ff in config.feature_fractions:
        variant = reduce_features(data, ff, config.bins)
        plan = stratified_folds(variant, config.k_folds, config.repeats, config.base_seed)
        for bf in config.budget_fractions:
            for split in plan:
                tasks.append((variant, split, ff, bf))
    if jobs == 1:
        results = [run_cell_task(v, s, ff, bf, config) for v, s, ff, bf in tasks]
    else:
        results = Parallel(n_jobs=jobs)(
            delayed(run_cell_task)(v, s, ff, bf, config) for v, s, ff, bf in tasks
        )
    # (ff, bf, model) -> grid index -> [(train_cost, row)]
    cells: dict = {}
    nonconverged = 0
    for (_, split, ff, bf), items in zip(tasks, results):
        for gi, model, train_cost, row, converged in items:
            cells.setdefault((ff, bf, model), {}).setdefault(gi, []).append((train_cost, row))
            nonconverged += not converged
    if nonconverged:
        log.warning("%d adaptive fits hit the iteration limit; their last model was used",
                    nonconverged)
    rows = []
    for key in sorted(cells, key=lambda k: (k[0], k[1], MODELS.index(k[2]))):
        by_grid = cells[key]
        best = min(sorted(by_grid), key=lambda gi: np.mean([c for c, _ in by_grid[gi]]))
        rows.extend(sorted((r for _, r in by_grid[best]), key=lambda r: r.run))
    expected = config.k_folds * config.repeats
    return SweepReport(tuple(rows), tuple(aggregate(rows, expected, config.sign_test)),
                       nonconverged)


def aggregate(rows, expected_runs: Optional[int] = None, sign_test: bool = False) -> list:
    """Per-cell means plus p-values of AdaCSL against each comparison model."""
    cells: dict = {}
    for r in rows:
        cells.setdefault((r.feature_fraction, r.budget_fraction), {}).setdefault(r.model, []).append(r)
    out = []
    for (ff, bf) in sorted(cells):
        by_model = cells[(ff, bf)]
        run_sets = {m: sorted(r.run for r in rs) for m, rs in by_model.items()}
        reference = next(iter(run_sets.values()))
        for m, runs in run_sets.items():
            if len(set(runs)) != len(runs):
                raise AggregationError(f"cell ({ff}, {bf}) model {m}: duplicate runs")
            if runs != reference or (expected_runs is not None and len(runs) != expected_runs):
                raise AggregationError(
                    f"cell ({ff}, {bf}) model {m}: {len(runs)} runs, expected "
                    f"{expected_runs if expected_runs is not None else len(reference)}"
                )
        ada = sorted(by_model.get("adacsl", []), key=lambda r: r.run)
        ordered = sorted(by_model, key=lambda m: MODELS.index(m) if m in MODELS else len(MODELS))
        for m in ordered:
            rs = sorted(by_model[m], key=lambda r: r.run)
            precs = [r.precision for r in rs if r.precision is not None]
            p_value, flag = None, ""
            if m != "adacsl" and ada and len(rs) >= 2:
                sig = significance([r.cost for r in ada], [r.cost for r in rs], sign_test)
                p_value, flag = sig.p_value, sig.flag
                if sig.sign_p_value is not None:
                    flag = (flag + ";" if flag else "") + f"sign_p={sig.sign_p_value!r}"
            out.append(AggregateRow(
                ff, bf, m, len(rs),
                float(np.mean([r.cost for r in rs])),
                float(np.mean([r.accuracy for r in rs])),
                float(np.mean(precs)) if precs else None,
                p_value, flag,
            ))
    return out
