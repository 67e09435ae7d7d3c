"""Shared domain types, confusion counts and cost/metric arithmetic."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, InputError

COST_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with binary labels.

    Arrays are copied and made read-only on construction so a dataset can be
    shared across threads and folds without defensive copies.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        y = np.array(self.labels)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        if X.ndim != 2:
            raise DimensionError("features must be a 2-d matrix")
        n, k = X.shape
        if n < 1:
            raise InputError("dataset must contain at least one instance")
        if y.shape != (n,):
            raise DimensionError(f"expected {n} labels, got shape {y.shape}")
        if not np.all(np.isin(y, (0, 1))):
            raise InputError("labels must be 0 or 1")
        if not np.all(np.isfinite(X)):
            raise InputError("features must be finite")
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != k:
            raise DimensionError(f"expected {k} feature names, got {len(names)}")
        if len(set(names)) != k:
            raise InputError("feature names must be unique")
        y = y.astype(np.int8)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def k(self) -> int:
        return self.features.shape[1]

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def n_neg(self) -> int:
        return self.n - self.n_pos

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.features[idx], self.labels[idx], self.feature_names)

    def select_features(self, names: Sequence[str]) -> "Dataset":
        cols = [self.feature_names.index(n) for n in names]
        return Dataset(self.features[:, cols], self.labels, tuple(names))


@dataclass(frozen=True)
class CostMatrix:
    """Misclassification costs; ``cLJ`` is the cost of predicting L when the truth is J."""

    c00: float = 0.0
    c01: float = 1.0
    c10: float = 1.0
    c11: float = 0.0

    def __post_init__(self):
        for name in ("c00", "c01", "c10", "c11"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise InputError(f"{name} must be a finite nonnegative cost, got {v}")
            object.__setattr__(self, name, v)

    @property
    def is_canonical(self) -> bool:
        return self.c00 == 0 and self.c11 == 0

    def cost(self, predicted: int, actual: int) -> float:
        return getattr(self, f"c{predicted}{actual}")

    def with_fp_cost(self, c10: float) -> "CostMatrix":
        return CostMatrix(self.c00, self.c01, c10, self.c11)

    def to_dict(self) -> dict:
        return {"c00": self.c00, "c01": self.c01, "c10": self.c10, "c11": self.c11}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InputError(f"{name} must be a nonnegative integer, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def n_pos(self) -> int:
        return self.tp + self.fn

    @property
    def n_neg(self) -> int:
        return self.fp + self.tn

    @property
    def predicted_positive(self) -> int:
        return self.tp + self.fp


@dataclass(frozen=True)
class BudgetSpec:
    """Maximum number of positive labels allowed on a data set of ``basis_size`` instances."""

    limit: int
    basis_size: int

    def __post_init__(self):
        if int(self.limit) != self.limit or int(self.basis_size) != self.basis_size:
            raise InputError("budget limit and basis size must be integers")
        if not 0 <= self.limit <= self.basis_size:
            raise InputError(
                f"budget limit {self.limit} outside [0, {self.basis_size}]"
            )
        object.__setattr__(self, "limit", int(self.limit))
        object.__setattr__(self, "basis_size", int(self.basis_size))


@dataclass(frozen=True)
class Metrics:
    """Ratios derived from confusion counts; ``None`` marks an undefined ratio."""

    accuracy: float
    precision: Optional[float]
    tpr: Optional[float]
    fpr: Optional[float]


def confusion(labels_true, labels_pred) -> ConfusionCounts:
    y = np.asarray(labels_true)
    p = np.asarray(labels_pred)
    if y.ndim != 1 or p.ndim != 1 or y.shape != p.shape:
        raise DimensionError(
            f"label vectors must be 1-d with equal length, got {y.shape} and {p.shape}"
        )
    if y.size < 1:
        raise DimensionError("label vectors must be nonempty")
    y = y.astype(bool)
    p = p.astype(bool)
    tp = int(np.count_nonzero(y & p))
    fp = int(np.count_nonzero(~y & p))
    fn = int(np.count_nonzero(y & ~p))
    tn = int(y.size - tp - fp - fn)
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def total_cost(conf: ConfusionCounts, costs: CostMatrix) -> float:
    return (
        conf.fn * costs.c01
        + conf.fp * costs.c10
        + conf.tp * costs.c11
        + conf.tn * costs.c00
    )


def metrics(conf: ConfusionCounts) -> Metrics:
    n = conf.n
    if n == 0:
        raise InputError("metrics need at least one instance")
    pp = conf.predicted_positive
    return Metrics(
        accuracy=(conf.tp + conf.tn) / n,
        precision=conf.tp / pp if pp else None,
        tpr=conf.tp / conf.n_pos if conf.n_pos else None,
        fpr=conf.fp / conf.n_neg if conf.n_neg else None,
    )


def format_ratio(value: Optional[float]) -> str:
    return "undefined" if value is None else repr(float(value))
