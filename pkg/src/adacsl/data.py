"""Data ingestion, feature reduction, fold plans and synthetic fixtures."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .core import Dataset
from .errors import DegenerateDataError, IngestionError, InputError, StratificationError

log = logging.getLogger(__name__)

MISSING_CATEGORY = "__missing__"
BAD_ROW_LIMIT = 0.01


# -- flat key=value config files ------------------------------------------------

def read_kv(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def split_list(value: str) -> list:
    return [v.strip() for v in value.split(",") if v.strip()]


@dataclass(frozen=True)
class IngestConfig:
    label_column: str
    positive_value: str
    drop_columns: tuple = ()
    max_onehot_cardinality: int = 10
    drop_first: bool = False
    delimiter: str = ","

    @classmethod
    def from_file(cls, path) -> "IngestConfig":
        kv = read_kv(path)
        if "label_column" not in kv or "positive_value" not in kv:
            raise InputError(f"{path}: label_column and positive_value are required")
        delim = kv.get("delimiter", ",")
        if delim in ("tab", "\\t"):
            delim = "\t"
        return cls(
            label_column=kv["label_column"],
            positive_value=kv["positive_value"],
            drop_columns=tuple(split_list(kv.get("drop_columns", ""))),
            max_onehot_cardinality=int(kv.get("max_onehot_cardinality", 10)),
            drop_first=kv.get("drop_first", "false").lower() in ("1", "true", "yes"),
            delimiter=delim,
        )


def _is_numeric(col: pd.Series) -> bool:
    present = col.dropna()
    if present.empty:
        return True
    return bool(pd.to_numeric(present, errors="coerce").notna().all())


def load_csv(path, config: IngestConfig) -> Dataset:
    """Read a delimited text file into a :class:`Dataset`.

    Numeric columns pass through with median imputation. Categorical columns
    with at most ``max_onehot_cardinality`` levels become one-hot indicators;
    wider ones are replaced by each level's relative frequency.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"data file not found: {path}")
    bad_rows = []
    try:
        frame = pd.read_csv(path, sep=config.delimiter, dtype=str, engine="python",
                            keep_default_na=True,
                            on_bad_lines=lambda row: bad_rows.append(row))
    except (pd.errors.ParserError, UnicodeDecodeError, pd.errors.EmptyDataError) as exc:
        raise IngestionError(f"cannot parse {path}: {exc}") from exc
    total = len(frame) + len(bad_rows)
    if total and len(bad_rows) / total > BAD_ROW_LIMIT:
        raise IngestionError(
            f"{path}: {len(bad_rows)} of {total} rows unparseable (limit {BAD_ROW_LIMIT:.0%})"
        )
    if bad_rows:
        log.warning("%s: skipped %d malformed rows", path, len(bad_rows))
    frame.columns = [c.strip() for c in frame.columns]
    if config.label_column not in frame.columns:
        raise IngestionError(f"{path}: label column {config.label_column!r} not found")
    raw_labels = frame[config.label_column].str.strip()
    missing_label = raw_labels.isna()
    if missing_label.any():
        log.warning("%s: dropped %d rows with a missing label", path, int(missing_label.sum()))
        frame = frame.loc[~missing_label].reset_index(drop=True)
        raw_labels = raw_labels.loc[~missing_label].reset_index(drop=True)
    if frame.empty:
        raise IngestionError(f"{path}: no labelled rows")
    if not (raw_labels == config.positive_value).any():
        raise IngestionError(
            f"{path}: positive value {config.positive_value!r} never occurs in "
            f"{config.label_column!r}"
        )
    labels = (raw_labels == config.positive_value).to_numpy(dtype=np.int8)

    blocks = []
    names = []
    for col in frame.columns:
        if col == config.label_column or col in config.drop_columns:
            continue
        series = frame[col].str.strip()
        if _is_numeric(series):
            values = pd.to_numeric(series, errors="coerce")
            median = values.median()
            values = values.fillna(0.0 if pd.isna(median) else median)
            blocks.append(values.to_numpy(dtype=float))
            names.append(col)
            continue
        series = series.fillna(MISSING_CATEGORY)
        levels = sorted(series.unique())
        if len(levels) <= config.max_onehot_cardinality:
            for level in levels[1:] if config.drop_first else levels:
                blocks.append((series == level).to_numpy(dtype=float))
                names.append(f"{col}={level}")
        else:
            freq = series.map(series.value_counts(normalize=True))
            blocks.append(freq.to_numpy(dtype=float))
            names.append(f"{col}#freq")
    X = np.column_stack(blocks) if blocks else np.zeros((len(frame), 0))
    return Dataset(X, labels, tuple(names))


# -- mutual information ------------------------------------------------------

def equal_frequency_bins(values, bins: int) -> np.ndarray:
    """Bin codes from quantile edges; tied values always share a bin."""
    v = np.asarray(values, dtype=float)
    edges = np.unique(np.quantile(v, np.linspace(0, 1, bins + 1)[1:-1]))
    return np.searchsorted(edges, v, side="right")


def mutual_information(feature, labels, bins: int = 10) -> float:
    """Mutual information in bits between a feature and binary labels.

    A feature with at most ``bins`` distinct values is treated as discrete;
    otherwise it is discretised into ``bins`` equal-frequency bins.
    """
    x = np.asarray(feature)
    y = np.asarray(labels)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError("feature and labels must be 1-d with equal length")
    if bins < 2:
        raise InputError("bins must be >= 2")
    if np.unique(y).size < 2:
        raise DegenerateDataError("mutual information with a constant label is undefined")
    _, x_codes = np.unique(x, return_inverse=True)
    if x_codes.max() + 1 > bins:
        x_codes = equal_frequency_bins(x, bins)
    _, y_codes = np.unique(y, return_inverse=True)
    joint = np.zeros((x_codes.max() + 1, y_codes.max() + 1))
    np.add.at(joint, (x_codes, y_codes), 1.0)
    return mutual_information_from_joint(joint)


def mutual_information_from_joint(joint) -> float:
    p = np.asarray(joint, dtype=float)
    p = p / p.sum()
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    mi = float(np.sum(p[nz] * np.log2(p[nz] / (px @ py)[nz])))
    return max(mi, 0.0)


def reduce_features(data: Dataset, keep_fraction: float, bins: int = 10) -> Dataset:
    """Drop the features that carry the MOST information about the label.

    This deliberately makes the task harder, producing low-signal variants of
    a data set. Ties in information are broken by feature name.
    """
    if not 0 < keep_fraction <= 1:
        raise InputError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    k = data.k
    n_drop = math.ceil(round((1 - keep_fraction) * k, 9))
    if n_drop == 0:
        return data
    scores = [(mutual_information(data.features[:, j], data.labels, bins), name)
              for j, name in enumerate(data.feature_names)]
    ranked = sorted(scores, key=lambda t: (-t[0], t[1]))
    dropped = {name for _, name in ranked[:n_drop]}
    keep = [n for n in data.feature_names if n not in dropped]
    return data.select_features(keep)


# -- stratified folds ----------------------------------------------------------

@dataclass(frozen=True)
class FoldSplit:
    repeat: int
    fold: int
    train: np.ndarray
    test: np.ndarray

    @property
    def run_index(self) -> int:
        return self.repeat * 1000 + self.fold


def stratified_folds(data: Dataset, k_folds: int, repeats: int = 1, seed: int = 0) -> list:
    """Repeated stratified k-fold plan.

    Each class is shuffled and dealt round-robin into folds, continuing the
    deal across classes so fold sizes stay balanced as well.
    """
    if k_folds < 2 or repeats < 1:
        raise InputError("need k_folds >= 2 and repeats >= 1")
    y = data.labels
    for cls in (1, 0):
        count = int(np.count_nonzero(y == cls))
        if count < k_folds:
            raise StratificationError(
                f"class {cls} has {count} members, fewer than {k_folds} folds"
            )
    plan = []
    for r in range(repeats):
        rng = np.random.default_rng([seed, r])
        assign = np.empty(data.n, dtype=np.int64)
        offset = 0
        for cls in (1, 0):
            members = rng.permutation(np.flatnonzero(y == cls))
            assign[members] = (offset + np.arange(members.size)) % k_folds
            offset += members.size
        for f in range(k_folds):
            plan.append(FoldSplit(r, f, np.flatnonzero(assign != f), np.flatnonzero(assign == f)))
    return plan


# -- synthetic fixtures ----------------------------------------------------------

@dataclass(frozen=True)
class LeafSpec:
    size: int
    positive_count: int
    signature: dict = field(default_factory=dict)


def synth_generate(n: int, n_pos: int, leaf_profile: Sequence, seed: int = 0,
                   noise_columns: int = 0) -> Dataset:
    """Dataset whose rows fall into the requested leaves.

    Each leaf is identified by its ``signature`` (feature name -> value) and
    holds ``size`` rows of which ``positive_count`` are positive. Optional
    noise columns hold seeded uniform values. Rows are shuffled.
    """
    leaves = [l if isinstance(l, LeafSpec) else LeafSpec(*l) for l in leaf_profile]
    if not leaves:
        raise InputError("leaf profile is empty")
    if sum(l.size for l in leaves) != n or sum(l.positive_count for l in leaves) != n_pos:
        raise InputError("leaf sizes and positive counts must add up to n and n_pos")
    if any(not 0 <= l.positive_count <= l.size for l in leaves):
        raise InputError("each leaf needs 0 <= positive_count <= size")
    sig_names = sorted({k for l in leaves for k in l.signature})
    if any(set(l.signature) != set(sig_names) for l in leaves):
        raise InputError("every leaf must assign all signature features")
    rng = np.random.default_rng(seed)
    rows = []
    labels = []
    for l in leaves:
        sig = [float(l.signature[k]) for k in sig_names]
        rows.extend([sig] * l.size)
        labels.extend([1] * l.positive_count + [0] * (l.size - l.positive_count))
    X = np.array(rows, dtype=float).reshape(n, len(sig_names))
    y = np.array(labels, dtype=np.int8)
    names = list(sig_names)
    if noise_columns:
        X = np.column_stack([X, rng.random((n, noise_columns))])
        names += [f"noise{j}" for j in range(noise_columns)]
    perm = rng.permutation(n)
    return Dataset(X[perm], y[perm], tuple(names))


def running_example(seed: int = 0, noise_columns: int = 0) -> Dataset:
    """1000 people, 100 infected; ``f2`` (fever) and ``f1`` (loss of taste) as binary symptoms.

    Split on ``f2`` alone: 200 flagged with 80 infected. Split on ``f1`` alone:
    80 flagged with 60 infected.
    """
    profile = [
        LeafSpec(50, 45, {"f1": 1, "f2": 1}),
        LeafSpec(30, 15, {"f1": 1, "f2": 0}),
        LeafSpec(150, 35, {"f1": 0, "f2": 1}),
        LeafSpec(770, 5, {"f1": 0, "f2": 0}),
    ]
    return synth_generate(1000, 100, profile, seed=seed, noise_columns=noise_columns)


def hard_synthetic(n: int = 2000, pos_rate: float = 0.15, n_features: int = 8,
                   seed: int = 0) -> Dataset:
    """Imbalanced data with weak, overlapping signal spread across discrete features.

    Each feature takes five levels; positives lean towards higher levels with
    a per-feature strength drawn once from the seed.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * pos_rate))
    y = np.zeros(n, dtype=np.int8)
    y[rng.choice(n, n_pos, replace=False)] = 1
    strength = rng.uniform(0.2, 0.8, n_features)
    latent = rng.normal(size=(n, n_features)) + np.outer(y, strength)
    X = np.floor(np.clip((latent + 2.0) * 1.25, 0, 4.999))
    names = tuple(f"x{j}" for j in range(n_features))
    return Dataset(X, y, names)
