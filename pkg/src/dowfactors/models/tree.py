"""CART regression tree grown greedily on squared error."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DimensionMismatch, TooFewRows

# Gains within TIE_TOL * (node SSE) of each other count as equal, and a split
# must gain more than that to be taken. Keeps split choice stable against
# rounding noise; exact ties go to the lowest feature, then lowest threshold.
TIE_TOL = 1e-12

LEAF = -1


@dataclass(frozen=True)
class RegressionTree:
    """Flat-array binary tree; node 0 is the root.

    Internal nodes have ``feature >= 0`` and send rows with
    ``x[feature] <= threshold`` left. Leaves have ``feature == -1`` and
    predict ``value`` (the mean training target of the leaf).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    n_features: int
    max_depth: int
    min_leaf: int

    @property
    def node_count(self) -> int:
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        def walk(node):
            if self.feature[node] == LEAF:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))
        return walk(0)

    def apply(self, X) -> np.ndarray:
        """Index of the leaf each row of ``X`` falls into."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} columns, got shape {X.shape}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            rows = np.flatnonzero(feat != LEAF)
            if rows.size == 0:
                return node
            cur = node[rows]
            go_left = X[rows, feat[rows]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]


def best_split(X: np.ndarray, y: np.ndarray, features, min_leaf: int):
    """Best ``(gain, feature, threshold)`` over the given features, or None.

    The gain of a split is the drop in sum of squared errors. With targets
    centered on the node mean and ``s`` the left-side sum, it equals
    ``s**2 * n / (n_left * n_right)``, which stays exact for constant
    targets.
    """
    n = y.shape[0]
    yc = y - math.fsum(y) / n
    sst = float(yc @ yc)
    if sst <= 0.0:
        return None
    band = TIE_TOL * sst
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cs = np.cumsum(yc[order])
        for i in range(min_leaf - 1, n - min_leaf):
            if not xs[i] < xs[i + 1]:
                continue
            n_left = i + 1
            gain = cs[i] * cs[i] * n / (n_left * (n - n_left))
            if best is None or gain > best[0] + band:
                best = (gain, int(f), (xs[i] + xs[i + 1]) / 2.0)
    if best is None or best[0] <= band:
        return None
    return best


def fit_tree(X, y, max_depth: int = 6, min_leaf: int = 1, mtry: Optional[int] = None,
             rng: Optional[np.random.Generator] = None) -> RegressionTree:
    """Grow a regression tree top-down.

    At each node ``mtry`` features are drawn without replacement from ``rng``
    and scanned in index order; with ``mtry`` covering every feature the
    scan is deterministic and ``rng`` is not touched. A node becomes a leaf
    at ``max_depth``, when it has fewer than ``2 * min_leaf`` rows, or when
    no split reduces the squared error.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DimensionMismatch(f"X shape {X.shape} does not match y shape {y.shape}")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    n, p = X.shape
    if n < 2 * min_leaf:
        raise TooFewRows(f"need at least {2 * min_leaf} rows, got {n}")
    if mtry is None or mtry >= p:
        mtry = p
    elif mtry < 1:
        raise ValueError("mtry must be >= 1")
    if mtry < p and rng is None:
        raise ValueError("feature subsampling needs a random generator")

    feature, threshold, left, right, value, count = [], [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(math.fsum(y[idx]) / idx.size)
        count.append(int(idx.size))
        return len(feature) - 1

    def grow(idx, depth):
        node = new_node(idx)
        if depth >= max_depth or idx.size < 2 * min_leaf:
            return node
        if mtry == p:
            feats = range(p)
        else:
            feats = np.sort(rng.choice(p, size=mtry, replace=False))
        split = best_split(X[idx], y[idx], feats, min_leaf)
        if split is None:
            return node
        _, f, t = split
        mask = X[idx, f] <= t
        feature[node] = f
        threshold[node] = t
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(n), 0)
    return RegressionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=float),
        n_samples=np.array(count, dtype=np.int64),
        n_features=p,
        max_depth=max_depth,
        min_leaf=min_leaf,
    )
