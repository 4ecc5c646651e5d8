"""Regression trees, random forests and split-based variable importance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .. import rng as _rng
from . import _backend

UNLIMITED_DEPTH = 1 << 30


class Split(NamedTuple):
    feature: int
    threshold: float
    risk_reduction: float


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Flat node arrays; node 0 is the root and leaves have ``feature == -1``.

    ``risk_reduction`` holds, for branch nodes, the drop in training MSE the
    split produced, weighted by the node's share of the training set.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    risk_reduction: np.ndarray
    n_features: int

    def __post_init__(self):
        for name in ("feature", "threshold", "left", "right", "value", "n_samples", "risk_reduction"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.feature) == 0:
            raise ValueError("a tree needs at least one node")
        if not np.all(np.isfinite(self.value[self.feature < 0])):
            raise ValueError("leaf values must be finite")

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def n_branches(self):
        return int(np.count_nonzero(self.feature >= 0))

    def is_leaf(self, node):
        return self.feature[node] < 0

    def check_structure(self):
        """Verify the arrays form a proper binary tree rooted at node 0."""
        seen = np.zeros(self.n_nodes, dtype=bool)
        stack = [0]
        while stack:
            node = stack.pop()
            if seen[node]:
                raise ValueError(f"node {node} reached twice")
            seen[node] = True
            if self.feature[node] >= 0:
                l, r = int(self.left[node]), int(self.right[node])
                if not (0 <= l < self.n_nodes and 0 <= r < self.n_nodes):
                    raise ValueError(f"branch {node} has invalid children")
                stack.extend((r, l))
            elif self.left[node] != -1 or self.right[node] != -1:
                raise ValueError(f"leaf {node} has children")
        if not seen.all():
            raise ValueError("unreachable nodes present")

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return _backend.kernel.apply_tree(
            X, self.feature, self.threshold, self.left, self.right, self.value
        )

    def equals(self, other):
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("feature", "threshold", "left", "right", "value", "n_samples", "risk_reduction")
        ) and self.n_features == other.n_features


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        if not self.trees:
            raise ValueError("a forest needs at least one tree")

    @property
    def n_features(self):
        return self.trees[0].n_features

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    return X, y


def find_best_split(
    X, y, candidate_features=None, min_samples_leaf=1, n_total=None, backend=None
) -> Optional[Split]:
    """Exhaustive variance-reduction split search at a single node.

    Thresholds are midpoints between consecutive distinct values and samples
    with ``x <= threshold`` go left. Among splits whose SSE reduction is within
    1e-12 of the node SSE of the best, the lowest feature index and then the
    lowest threshold wins. ``n_total`` is the training-set size used to weight
    the reduction (defaults to ``len(y)``).
    """
    X, y = _check_xy(X, y)
    if X.shape[0] < 2:
        raise ValueError("find_best_split needs at least 2 samples")
    if candidate_features is None:
        candidate_features = range(X.shape[1])
    cand = sorted({int(c) for c in candidate_features})
    if any(c < 0 or c >= X.shape[1] for c in cand):
        raise ValueError("candidate feature index out of range")
    n_total = float(X.shape[0] if n_total is None else n_total)
    found = _backend.get(backend).best_split(X, y, np.array(cand, dtype=np.int64), int(min_samples_leaf), n_total)
    return None if found is None else Split(*found)


def _grow(X, y, max_depth, min_samples_leaf, mtry, feature_seed, backend):
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    depth = UNLIMITED_DEPTH if max_depth is None else int(max_depth)
    if depth < 0:
        raise ValueError("max_depth must be >= 0")
    arrays = _backend.get(backend).build_tree(
        X, y, min(depth, UNLIMITED_DEPTH), int(min_samples_leaf), int(mtry), int(feature_seed)
    )
    return TreeModel(*arrays, n_features=X.shape[1])


def train_tree(X, y, max_depth=20, min_samples_leaf=25, backend=None) -> TreeModel:
    X, y = _check_xy(X, y)
    if X.shape[0] < 1:
        raise ValueError("train_tree needs at least one sample")
    return _grow(X, y, max_depth, min_samples_leaf, X.shape[1], 0, backend)


def default_mtry(n_features):
    return max(1, n_features // 3)


def train_forest(
    X,
    y,
    n_trees=100,
    mtry=None,
    min_samples_leaf=5,
    max_depth=20,
    seed=0,
    bootstrap=True,
    backend=None,
) -> ForestModel:
    """Bagged trees with per-split feature subsampling, averaged uniformly.

    Tree ``t`` draws its bootstrap rows and its feature-sampling seed from the
    stream keyed by ``(seed, t)``, so trees could be grown in any order.
    ``bootstrap=False`` is a diagnostic switch that trains on the data as is.
    """
    X, y = _check_xy(X, y)
    n, p = X.shape
    if n < 1:
        raise ValueError("train_forest needs at least one sample")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    mtry = default_mtry(p) if mtry is None else int(mtry)
    if not 1 <= mtry <= p:
        raise ValueError(f"mtry must lie in [1, {p}]")
    trees = []
    for t in range(n_trees):
        gen = _rng.stream(seed, t)
        if bootstrap:
            rows = gen.integers(0, n, size=n)
            Xt, yt = X[rows], y[rows]
        else:
            Xt, yt = X, y
        feature_seed = int(gen.integers(0, 2**63 - 1))
        trees.append(_grow(Xt, yt, max_depth, min_samples_leaf, mtry, feature_seed, backend))
    return ForestModel(tuple(trees), int(seed))


def tree_importance(model, feature_names=None):
    """Summed split risk reduction per feature divided by the branch count.

    Forests average the per-tree vectors. Returns an array, or a dict keyed by
    ``feature_names`` when given.
    """
    if isinstance(model, ForestModel):
        scores = np.mean([_single_importance(t) for t in model.trees], axis=0)
    else:
        scores = _single_importance(model)
    if feature_names is None:
        return scores
    if len(feature_names) != len(scores):
        raise ValueError("feature_names length does not match the model")
    return {name: float(s) for name, s in zip(feature_names, scores)}


def _single_importance(tree: TreeModel):
    scores = np.zeros(tree.n_features)
    branches = tree.feature >= 0
    n_branches = int(branches.sum())
    if n_branches == 0:
        return scores
    np.add.at(scores, tree.feature[branches], tree.risk_reduction[branches])
    return scores / n_branches
