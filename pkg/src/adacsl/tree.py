"""Cost-sensitive binary decision tree.

Splits minimise the summed expected cost of the children, each child labelled
with whichever class is cheaper for it. Leaves keep their raw class counts, so
the tree doubles as a scorer whose leaves partition the data into equal-score
groups.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import COST_TOL, CostMatrix, Dataset
from .errors import DimensionError, FormatVersionError, InputError, ParseError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 4
    min_samples_leaf: int = 1
    min_cost_reduction: float = 0.0
    laplace: bool = False

    def __post_init__(self):
        if int(self.max_depth) != self.max_depth or self.max_depth < 1:
            raise InputError(f"max_depth must be an integer >= 1, got {self.max_depth}")
        if int(self.min_samples_leaf) != self.min_samples_leaf or self.min_samples_leaf < 1:
            raise InputError(
                f"min_samples_leaf must be an integer >= 1, got {self.min_samples_leaf}"
            )
        if self.min_cost_reduction < 0:
            raise InputError("min_cost_reduction must be nonnegative")
        object.__setattr__(self, "max_depth", int(self.max_depth))
        object.__setattr__(self, "min_samples_leaf", int(self.min_samples_leaf))
        object.__setattr__(self, "min_cost_reduction", float(self.min_cost_reduction))
        object.__setattr__(self, "laplace", bool(self.laplace))

    def to_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "min_cost_reduction": self.min_cost_reduction,
            "laplace": self.laplace,
        }


@dataclass(frozen=True)
class Leaf:
    n_pos: int
    n_neg: int
    score: float


@dataclass(frozen=True)
class Split:
    feature_index: int
    split_value: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class TreeModel:
    root: TreeNode
    hyperparams: TreeParams
    train_costs: CostMatrix
    n_features: int
    metadata: dict = field(default_factory=dict)

    def leaves(self):
        stack = [self.root]
        out = []
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                out.append(node)
            else:
                stack.append(node.right)
                stack.append(node.left)
        return out

    def depth(self) -> int:
        def _d(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + max(_d(node.left), _d(node.right))

        return _d(self.root)


@dataclass(frozen=True)
class ScoreGroup:
    score: float
    size: int
    member_indices: tuple


@dataclass(frozen=True)
class LeafGrouping:
    """Instances grouped by identical score, highest score first."""

    groups: tuple

    def __post_init__(self):
        groups = tuple(self.groups)
        if not groups:
            raise InputError("a grouping needs at least one group")
        scores = [g.score for g in groups]
        if any(a <= b for a, b in zip(scores, scores[1:])):
            raise InputError("group scores must be strictly decreasing")
        if any(g.size < 0 or g.size != len(g.member_indices) for g in groups):
            raise InputError("group sizes must match their member lists")
        object.__setattr__(self, "groups", groups)

    @property
    def scores(self) -> np.ndarray:
        return np.array([g.score for g in self.groups], dtype=float)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([g.size for g in self.groups], dtype=int)

    @property
    def n(self) -> int:
        return int(self.sizes.sum())

    @classmethod
    def from_scores(cls, scores) -> "LeafGrouping":
        """Group per-instance scores; instances with bitwise-equal scores share a group."""
        s = np.asarray(scores, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise InputError("scores must be a nonempty vector")
        uniq = np.unique(s)[::-1]
        groups = []
        for u in uniq:
            members = np.flatnonzero(s == u)
            groups.append(ScoreGroup(float(u), int(members.size), tuple(int(i) for i in members)))
        return cls(tuple(groups))

    @classmethod
    def from_sizes(cls, scores, sizes) -> "LeafGrouping":
        """Build a grouping from (score, size) pairs with consecutive member indices."""
        groups = []
        start = 0
        for s, size in zip(scores, sizes):
            groups.append(ScoreGroup(float(s), int(size), tuple(range(start, start + int(size)))))
            start += int(size)
        return cls(tuple(groups))

    def instance_scores(self) -> np.ndarray:
        out = np.empty(self.n, dtype=float)
        for g in self.groups:
            out[list(g.member_indices)] = g.score
        return out


def node_cost(n_pos, n_neg, costs: CostMatrix):
    """Expected cost of a node labelled with its cheaper class (vectorised over counts)."""
    as_neg = costs.c00 * n_neg + costs.c01 * n_pos
    as_pos = costs.c10 * n_neg + costs.c11 * n_pos
    return np.minimum(as_neg, as_pos)


def _leaf(n_pos: int, n_neg: int, laplace: bool) -> Leaf:
    if laplace:
        score = (n_pos + 1) / (n_pos + n_neg + 2)
    else:
        score = n_pos / (n_pos + n_neg)
    return Leaf(int(n_pos), int(n_neg), score)


def best_split(X, y, costs: CostMatrix, min_samples_leaf: int = 1, order=None):
    """Cheapest (feature, threshold) split of the rows of ``X``.

    Candidates are midpoints between consecutive distinct values. Ties go to the
    lowest feature index, then the lowest threshold. Returns
    ``(feature, threshold, children_cost)`` or ``None`` when no candidate
    respects ``min_samples_leaf``.
    """
    n, k = X.shape
    y = np.asarray(y)
    total_pos = int(y.sum())
    best = None
    best_cost = np.inf
    for f in range(k):
        idx = order[f] if order is not None else np.argsort(X[:, f], kind="stable")
        v = X[idx, f]
        ys = y[idx]
        left_pos = np.cumsum(ys)[:-1]
        left_n = np.arange(1, n)
        valid = v[1:] > v[:-1]
        valid &= (left_n >= min_samples_leaf) & (n - left_n >= min_samples_leaf)
        if not valid.any():
            continue
        left_neg = left_n - left_pos
        right_pos = total_pos - left_pos
        right_neg = (n - left_n) - right_pos
        child = node_cost(left_pos, left_neg, costs) + node_cost(right_pos, right_neg, costs)
        child = np.where(valid, child, np.inf)
        c_min = child.min()
        if c_min < best_cost - COST_TOL:
            i = int(np.flatnonzero(child <= c_min + COST_TOL)[0])
            lo, hi = v[i], v[i + 1]
            thr = (lo + hi) / 2.0
            if not lo < thr <= hi:
                thr = hi
            best = (f, float(thr), float(child[i]))
            best_cost = c_min
    return best


def fit(data: Dataset, costs: CostMatrix, hyperparams: Optional[TreeParams] = None,
        *, seed: Optional[int] = None, iteration_index: Optional[int] = None) -> TreeModel:
    """Grow a cost-sensitive tree on ``data``; the fit itself is deterministic."""
    if data is None or data.n < 1:
        raise InputError("cannot fit a tree on an empty dataset")
    hp = hyperparams or TreeParams()
    X = data.features
    y = data.labels.astype(np.int64)
    # rows sorted once per feature; nodes filter these orders with a membership mask
    global_order = [np.argsort(X[:, f], kind="stable") for f in range(data.k)]
    member = np.zeros(data.n, dtype=bool)

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        n_pos = int(y[idx].sum())
        n_neg = int(idx.size - n_pos)
        if n_pos == 0 or n_neg == 0 or depth >= hp.max_depth or idx.size < 2 * hp.min_samples_leaf:
            return _leaf(n_pos, n_neg, hp.laplace)
        member[:] = False
        member[idx] = True
        # local positions of each node row inside idx-sorted arrays
        pos_of = np.empty(data.n, dtype=np.int64)
        pos_of[idx] = np.arange(idx.size)
        order = [pos_of[o[member[o]]] for o in global_order]
        found = best_split(X[idx], y[idx], costs, hp.min_samples_leaf, order=order)
        if found is None:
            return _leaf(n_pos, n_neg, hp.laplace)
        f, thr, child_cost = found
        reduction = float(node_cost(n_pos, n_neg, costs)) - child_cost
        if reduction <= COST_TOL or reduction < hp.min_cost_reduction:
            return _leaf(n_pos, n_neg, hp.laplace)
        go_left = X[idx, f] < thr
        left = grow(idx[go_left], depth + 1)
        right = grow(idx[~go_left], depth + 1)
        return Split(f, thr, left, right)

    root = grow(np.arange(data.n), 0)
    meta = {"version": FORMAT_VERSION, "seed": seed, "iteration_index": iteration_index}
    return TreeModel(root=root, hyperparams=hp, train_costs=costs,
                     n_features=data.k, metadata=meta)


def _check_width(model: TreeModel, width: int):
    if width != model.n_features:
        raise DimensionError(f"model expects {model.n_features} features, got {width}")


def score(model: TreeModel, instance) -> float:
    x = np.asarray(instance, dtype=float)
    if x.ndim != 1:
        raise DimensionError("instance must be a 1-d feature vector")
    _check_width(model, x.size)
    node = model.root
    while isinstance(node, Split):
        node = node.left if x[node.feature_index] < node.split_value else node.right
    return node.score


def predict_scores(model: TreeModel, X) -> np.ndarray:
    """Scores for every row of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError("X must be a 2-d matrix")
    _check_width(model, X.shape[1])
    out = np.empty(X.shape[0], dtype=float)
    stack = [(model.root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if isinstance(node, Leaf):
            out[idx] = node.score
            continue
        go_left = X[idx, node.feature_index] < node.split_value
        stack.append((node.left, idx[go_left]))
        stack.append((node.right, idx[~go_left]))
    return out


def leaf_groups(model: TreeModel, data: Dataset) -> LeafGrouping:
    return LeafGrouping.from_scores(predict_scores(model, data.features))


# -- persistence -------------------------------------------------------------

def _node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"type": "leaf", "n_pos": node.n_pos, "n_neg": node.n_neg, "score": node.score}
    return {
        "type": "split",
        "feature_index": node.feature_index,
        "split_value": node.split_value,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"model document is missing field '{key}' in {where}")
    return doc[key]


def _node_from_dict(doc, where="nodes") -> TreeNode:
    kind = _require(doc, "type", where)
    if kind == "leaf":
        return Leaf(int(_require(doc, "n_pos", where)), int(_require(doc, "n_neg", where)),
                    float(_require(doc, "score", where)))
    if kind == "split":
        return Split(
            int(_require(doc, "feature_index", where)),
            float(_require(doc, "split_value", where)),
            _node_from_dict(_require(doc, "left", where), where + ".left"),
            _node_from_dict(_require(doc, "right", where), where + ".right"),
        )
    raise ParseError(f"unknown node type {kind!r} in {where}")


def persist(model: TreeModel) -> str:
    """Serialise a model to a UTF-8 JSON document (stable key order)."""
    doc = {
        "version": FORMAT_VERSION,
        "hyperparams": model.hyperparams.to_dict(),
        "train_costs": model.train_costs.to_dict(),
        "n_features": model.n_features,
        "metadata": dict(model.metadata),
        "nodes": _node_to_dict(model.root),
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def load(document: str) -> TreeModel:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model document is not valid JSON: {exc}") from exc
    version = _require(doc, "version", "document")
    if version != FORMAT_VERSION:
        raise FormatVersionError(
            f"model document version {version!r} is not supported (expected {FORMAT_VERSION})"
        )
    hp = _require(doc, "hyperparams", "document")
    costs = _require(doc, "train_costs", "document")
    try:
        params = TreeParams(**hp)
        cm = CostMatrix(**costs)
    except TypeError as exc:
        raise ParseError(f"malformed hyperparams or costs: {exc}") from exc
    return TreeModel(
        root=_node_from_dict(_require(doc, "nodes", "document")),
        hyperparams=params,
        train_costs=cm,
        n_features=int(_require(doc, "n_features", "document")),
        metadata=dict(doc.get("metadata", {})),
    )
