"""Command-line entry point: ``adacsl <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import tree as cstree
from .adaptive import AdaptiveConfig, apply_to_test, fit_adaptive
from .core import BudgetSpec, CostMatrix, confusion, format_ratio, metrics, total_cost
from .data import IngestConfig, hard_synthetic, load_csv, reduce_features, running_example
from .errors import AdacslError, NonConvergenceError
from .harness import SweepConfig, run_sweep
from .roc import (
    constraint_line,
    curve_rows,
    iso_loss_line,
    line_row,
    min_feasible_cost,
    optimal_point,
    roc_curve,
)
from .threshold import UTILIZATION_MODES, static_threshold
from .tree import TreeParams

SYNTHETIC = {
    "running-example": lambda seed: running_example(seed=seed),
    "hard": lambda seed: hard_synthetic(seed=seed),
}


def _default_seed() -> int:
    return int(os.environ.get("ADACSL_SEED", "0"))


def _add_data(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="CSV file to load")
    src.add_argument("--synthetic", choices=sorted(SYNTHETIC), help="built-in synthetic data set")
    p.add_argument("--ingest", type=Path, help="ingest config (key=value); required with --data")


def _add_costs(p):
    p.add_argument("--c-fn", type=float, default=10.0, help="cost of a false negative, c(0,1)")
    p.add_argument("--c-fp", type=float, default=1.0, help="cost of a false positive, c(1,0)")


def _add_tree(p):
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--min-cost-reduction", type=float, default=0.0)


def _add_budget(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--budget", type=int, help="absolute number of positive labels allowed")
    g.add_argument("--budget-frac", type=float, help="fraction of the positive count")


def _add_seed(p):
    p.add_argument("--seed", type=int, default=None, help="random seed (default $ADACSL_SEED or 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adacsl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="load a data set and summarise it")
    _add_data(p)
    _add_seed(p)

    p = sub.add_parser("fit", help="train a cost-sensitive tree")
    _add_data(p)
    _add_costs(p)
    _add_tree(p)
    _add_seed(p)
    p.add_argument("--plain", action="store_true", help="train with symmetric unit costs")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("fit-adaptive", help="train with adaptive false-positive cost")
    _add_data(p)
    _add_costs(p)
    _add_tree(p)
    _add_budget(p)
    _add_seed(p)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--max-iterations", type=int, default=1000)
    p.add_argument("--utilization", choices=UTILIZATION_MODES, default="full")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--trace", type=Path)

    p = sub.add_parser("evaluate", help="label a data set with a model under a budget")
    _add_data(p)
    _add_costs(p)
    _add_budget(p)
    _add_seed(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--utilization", choices=UTILIZATION_MODES, default="full")
    p.add_argument("--out", type=Path, help="per-instance scores and labels")

    p = sub.add_parser("roc", help="emit ROC curve and iso-loss/constraint lines")
    _add_data(p)
    _add_costs(p)
    _add_budget(p, required=False)
    _add_seed(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--series", default="model")
    p.add_argument("--out", type=Path, required=True, help="curve points (series,fpr,tpr)")
    p.add_argument("--lines", type=Path, help="lines (series,slope,intercept,loss)")

    p = sub.add_parser("reduce-features", help="drop the most informative features")
    _add_data(p)
    _add_seed(p)
    p.add_argument("--keep", type=float, required=True)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("sweep", help="run the budget x feature sweep")
    _add_data(p)
    _add_seed(p)
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--aggregate", type=Path)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    return parser


def _load(args, seed):
    if args.synthetic:
        return SYNTHETIC[args.synthetic](seed)
    if not args.data.is_file():
        raise AdacslError(f"data file not found: {args.data}")
    if args.ingest is None:
        raise AdacslError("--ingest is required with --data")
    if not args.ingest.is_file():
        raise AdacslError(f"ingest config not found: {args.ingest}")
    return load_csv(args.data, IngestConfig.from_file(args.ingest))


def _costs(args) -> CostMatrix:
    return CostMatrix(0.0, args.c_fn, args.c_fp, 0.0)


def _params(args) -> TreeParams:
    return TreeParams(args.max_depth, args.min_samples_leaf, args.min_cost_reduction)


def _budget(args, data) -> BudgetSpec:
    if args.budget is not None:
        return BudgetSpec(min(args.budget, data.n), data.n)
    if not 0 <= args.budget_frac <= 1:
        raise AdacslError("--budget-frac must lie in [0, 1]")
    return BudgetSpec(int(np.floor(args.budget_frac * data.n_pos + 0.5)), data.n)


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")


def _summary(data, labels, costs) -> dict:
    conf = confusion(data.labels, labels)
    m = metrics(conf)
    return {
        "n": conf.n, "tp": conf.tp, "fp": conf.fp, "tn": conf.tn, "fn": conf.fn,
        "n_positive": conf.predicted_positive,
        "cost": total_cost(conf, costs),
        "accuracy": m.accuracy,
        "precision": format_ratio(m.precision),
    }


def cmd_ingest_check(args, seed):
    data = _load(args, seed)
    print(json.dumps({"n": data.n, "k": data.k, "n_pos": data.n_pos,
                      "features": list(data.feature_names)}, indent=1))


def cmd_fit(args, seed):
    data = _load(args, seed)
    costs = CostMatrix(0.0, 1.0, 1.0, 0.0) if args.plain else _costs(args)
    model = cstree.fit(data, costs, _params(args), seed=seed)
    _write(args.out, cstree.persist(model))


def cmd_fit_adaptive(args, seed):
    data = _load(args, seed)
    cfg = AdaptiveConfig(_costs(args), args.epsilon, args.max_iterations, _params(args),
                         args.utilization)
    budget = _budget(args, data)
    try:
        result = fit_adaptive(data, cfg, budget, seed)
    except NonConvergenceError as exc:
        if args.trace:
            _write(args.trace, exc.trace.to_csv())
        raise
    _write(args.out, cstree.persist(result.model))
    if args.trace:
        _write(args.trace, result.trace.to_csv())
    summary = _summary(data, result.labels.labels, _costs(args))
    summary.update(iterations=len(result.trace), budget=budget.limit,
                   fell_back=result.fell_back)
    print(json.dumps(summary, indent=1))


def cmd_evaluate(args, seed):
    data = _load(args, seed)
    model = cstree.load(args.model.read_text(encoding="utf-8"))
    budget = _budget(args, data)
    labels = apply_to_test(model, data, budget, seed, args.utilization,
                           tau=static_threshold(_costs(args)))
    if args.out:
        scores = cstree.predict_scores(model, data.features)
        with args.out.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("index", "score", "label", "predicted"))
            for i, (s, y, p) in enumerate(zip(scores, data.labels, labels.labels)):
                w.writerow((i, repr(float(s)), int(y), int(p)))
    summary = _summary(data, labels.labels, _costs(args))
    summary["budget"] = budget.limit
    print(json.dumps(summary, indent=1))


def cmd_roc(args, seed):
    data = _load(args, seed)
    model = cstree.load(args.model.read_text(encoding="utf-8"))
    costs = _costs(args)
    curve = roc_curve(cstree.leaf_groups(model, data), data.labels)
    with args.out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("series", "fpr", "tpr"))
        for s, f, t in curve_rows(args.series, curve):
            w.writerow((s, repr(f), repr(t)))
    if args.lines:
        best = optimal_point(curve, costs, data.n_pos, data.n_neg)
        rows = [line_row(f"{args.series}:iso-optimal",
                         iso_loss_line(costs, data.n_pos, data.n_neg, best.loss), best.loss)]
        if args.budget is not None or args.budget_frac is not None:
            budget = _budget(args, data)
            feas = optimal_point(curve, costs, data.n_pos, data.n_neg, True, budget)
            rows.append(line_row(f"{args.series}:iso-feasible",
                                 iso_loss_line(costs, data.n_pos, data.n_neg, feas.loss), feas.loss))
            rows.append(line_row("constraint", constraint_line(data.n_pos, data.n_neg, budget)))
            floor = min_feasible_cost(data.n_pos, budget, costs)
            rows.append(line_row("iso-minimum",
                                 iso_loss_line(costs, data.n_pos, data.n_neg, floor), floor))
        with args.lines.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("series", "slope", "intercept", "loss"))
            for s, m, b, loss in rows:
                w.writerow((s, repr(m), repr(b), loss if loss == "" else repr(loss)))


def cmd_reduce_features(args, seed):
    data = _load(args, seed)
    reduced = reduce_features(data, args.keep, args.bins)
    with args.out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(reduced.feature_names) + ["label"])
        for row, y in zip(reduced.features, reduced.labels):
            w.writerow([repr(float(v)) for v in row] + [int(y)])


def cmd_sweep(args, seed):
    data = _load(args, seed)
    config = SweepConfig.from_file(args.config)
    report = run_sweep(data, config, jobs=max(1, args.jobs))
    _write(args.out, report.report_csv())
    if args.aggregate:
        _write(args.aggregate, report.aggregate_csv())


COMMANDS = {
    "ingest-check": cmd_ingest_check,
    "fit": cmd_fit,
    "fit-adaptive": cmd_fit_adaptive,
    "evaluate": cmd_evaluate,
    "roc": cmd_roc,
    "reduce-features": cmd_reduce_features,
    "sweep": cmd_sweep,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        COMMANDS[args.command](args, seed)
    except (AdacslError, OSError, ValueError) as exc:
        print(f"adacsl {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
