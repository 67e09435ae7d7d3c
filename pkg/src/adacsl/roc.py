"""ROC-space geometry for budgeted cost-sensitive classification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BudgetSpec, CostMatrix
from .errors import DegenerateDataError, GeometryError, InfeasibleError, InputError
from .tree import LeafGrouping

TOL = 1e-9


@dataclass(frozen=True)
class RocCurve:
    """Piecewise-linear ROC curve; ``counts`` holds the (fp, tp) totals behind each point."""

    points: tuple
    counts: tuple
    n_pos: int
    n_neg: int

    def __post_init__(self):
        pts = self.points
        if len(pts) < 2 or pts[0] != (0.0, 0.0) or pts[-1] != (1.0, 1.0):
            raise InputError("an ROC curve runs from (0, 0) to (1, 1)")
        for (f0, t0), (f1, t1) in zip(pts, pts[1:]):
            if f1 < f0 or t1 < t0:
                raise InputError("ROC coordinates must be nondecreasing")


@dataclass(frozen=True)
class Line:
    slope: float
    intercept: float

    def __post_init__(self):
        if not (np.isfinite(self.slope) and np.isfinite(self.intercept)):
            raise InputError("line parameters must be finite")

    def at(self, fpr: float) -> float:
        return self.slope * fpr + self.intercept


@dataclass(frozen=True)
class OperatingPoint:
    point: tuple
    loss: float


def roc_curve(grouping: LeafGrouping, labels) -> RocCurve:
    """Sweep the score groups from the highest score down, accumulating (fpr, tpr)."""
    y = np.asarray(labels).astype(np.int64)
    if y.size != grouping.n:
        raise InputError(f"grouping covers {grouping.n} instances but {y.size} labels given")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DegenerateDataError("an ROC curve needs both classes present")
    points = [(0.0, 0.0)]
    counts = [(0, 0)]
    fp = tp = 0
    for g in grouping.groups:
        gp = int(y[list(g.member_indices)].sum())
        tp += gp
        fp += g.size - gp
        points.append((fp / n_neg, tp / n_pos))
        counts.append((fp, tp))
    return RocCurve(tuple(points), tuple(counts), n_pos, n_neg)


def loss_at(point, costs: CostMatrix, n_pos: int, n_neg: int) -> float:
    """Total cost of an operating point; fractional points give expected costs."""
    fpr, tpr = point
    return (costs.c01 * (1 - tpr) * n_pos + costs.c10 * fpr * n_neg
            + costs.c11 * tpr * n_pos + costs.c00 * (1 - fpr) * n_neg)


def iso_loss_line(costs: CostMatrix, n_pos: int, n_neg: int, loss: float) -> Line:
    """Locus of (fpr, tpr) points that all cost ``loss`` (zero-diagonal costs)."""
    if n_pos < 1:
        raise InputError("iso-loss line needs at least one positive")
    if costs.c01 <= 0:
        raise InputError("iso-loss line needs a positive false-negative cost")
    return Line(costs.c10 * n_neg / (costs.c01 * n_pos), 1 - loss / (costs.c01 * n_pos))


def constraint_line(n_pos: int, n_neg: int, budget: BudgetSpec) -> Line:
    """Locus of operating points that predict exactly ``budget.limit`` positives."""
    if n_pos < 1:
        raise InputError("constraint line needs at least one positive")
    return Line(-n_neg / n_pos, budget.limit / n_pos)


def intersect(curve: RocCurve, line: Line) -> tuple:
    """Point where the piecewise-linear curve crosses a descending line."""
    if not line.slope < 0:
        raise GeometryError("intersection needs a line with negative slope")
    gaps = [t - line.at(f) for f, t in curve.points]
    for (p0, g0), (p1, g1) in zip(zip(curve.points, gaps), zip(curve.points[1:], gaps[1:])):
        if abs(g0) <= TOL:
            return p0
        if g0 < 0 < g1 or abs(g1) <= TOL:
            if abs(g1) <= TOL:
                return p1
            t = -g0 / (g1 - g0)
            return (p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))
    raise GeometryError("line does not cross the ROC curve inside the unit square")


def _predicted_positive(point, n_pos, n_neg) -> float:
    return point[0] * n_neg + point[1] * n_pos


def optimal_point(curve: RocCurve, costs: CostMatrix, n_pos: int, n_neg: int,
                  feasible_only: bool = False,
                  budget: Optional[BudgetSpec] = None) -> OperatingPoint:
    """Cheapest curve vertex, optionally restricted to the budget's feasible area.

    The feasible search also considers the point where the curve meets the
    constraint line, since that boundary point may beat every feasible vertex.
    """
    candidates = []
    for (fp, tp), pt in zip(curve.counts, curve.points):
        loss = (costs.c01 * (n_pos - tp) + costs.c10 * fp
                + costs.c11 * tp + costs.c00 * (n_neg - fp))
        candidates.append((pt, loss, fp + tp))
    if feasible_only:
        if budget is None:
            raise InputError("feasible_only requires a budget")
        candidates = [c for c in candidates if c[2] <= budget.limit]
        line = constraint_line(n_pos, n_neg, budget)
        try:
            cross = intersect(curve, line)
        except GeometryError:
            cross = None
        if cross is not None and _predicted_positive(cross, n_pos, n_neg) <= budget.limit + TOL:
            candidates.append((cross, loss_at(cross, costs, n_pos, n_neg), None))
    if not candidates:
        raise InfeasibleError("no operating point satisfies the budget")
    best_pt, best_loss, _ = candidates[0]
    for pt, loss, _ in candidates[1:]:
        if loss < best_loss - TOL:
            best_pt, best_loss = pt, loss
    return OperatingPoint(best_pt, best_loss)


def min_feasible_cost(n_pos: int, budget: BudgetSpec, costs: CostMatrix) -> float:
    """Lowest cost reachable with exactly ``budget.limit`` positive labels."""
    if n_pos >= budget.limit:
        return costs.c01 * (n_pos - budget.limit)
    return costs.c10 * (budget.limit - n_pos)


def curve_rows(series: str, curve: RocCurve):
    return [(series, f, t) for f, t in curve.points]


def line_row(series: str, line: Line, loss: Optional[float] = None):
    return (series, line.slope, line.intercept, "" if loss is None else loss)
