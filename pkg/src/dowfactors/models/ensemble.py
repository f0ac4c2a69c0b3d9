"""Random forest and least-squares gradient boosting on regression trees."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DimensionMismatch
from .tree import RegressionTree, fit_tree


def tree_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for tree/stage ``index`` under master ``seed``.

    Derived from the pair, not drawn from a shared stream, so trees can be
    trained in any order or in parallel with identical results.
    """
    return np.random.default_rng([seed, index])


def default_mtry(p: int) -> int:
    return max(1, math.ceil(p / 3))


def _check_X(X, p):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != p:
        raise DimensionMismatch(f"expected {p} columns, got shape {X.shape}")
    return X


def _sse(y, pred) -> float:
    r = y - pred
    return math.fsum(r * r)


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[RegressionTree, ...]
    B: int
    mtry: int
    bootstrap: bool
    seed: int
    max_depth: int
    min_leaf: int
    n_features: int

    kind = "forest"

    def predict(self, X) -> np.ndarray:
        """Arithmetic mean of the tree predictions.

        Sums are correctly rounded (fsum), so the result does not depend on
        tree order.
        """
        X = _check_X(X, self.n_features)
        P = np.vstack([t.predict(X) for t in self.trees])
        return np.array([math.fsum(P[:, i]) / len(self.trees) for i in range(X.shape[0])])


@dataclass(frozen=True)
class BoostModel:
    initial: float
    trees: tuple[RegressionTree, ...]
    learning_rate: float
    K: int
    seed: int
    max_depth: int
    min_leaf: int
    n_features: int
    sse_trace: tuple[float, ...] = ()

    kind = "boost"

    def predict(self, X) -> np.ndarray:
        X = _check_X(X, self.n_features)
        F = np.full(X.shape[0], self.initial)
        for t in self.trees:
            F = F + self.learning_rate * t.predict(X)
        return F


def fit_random_forest(X, y, B: int = 100, max_depth: int = 6, min_leaf: int = 2,
                      mtry: Optional[int] = None, bootstrap: bool = True, seed: int = 0,
                      n_jobs: int = 1) -> ForestModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if B < 1:
        raise ValueError("B must be >= 1")
    n, p = X.shape
    mtry = default_mtry(p) if mtry is None else min(mtry, p)

    def build(b):
        rng = tree_rng(seed, b)
        if bootstrap:
            rows = rng.integers(0, n, size=n)
            return fit_tree(X[rows], y[rows], max_depth, min_leaf, mtry, rng)
        return fit_tree(X, y, max_depth, min_leaf, mtry, rng)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(build, range(B)))
    else:
        trees = tuple(build(b) for b in range(B))
    return ForestModel(trees, B, mtry, bootstrap, seed, max_depth, min_leaf, p)


def fit_gradient_boost(X, y, K: int = 100, learning_rate: float = 0.1, max_depth: int = 3,
                       min_leaf: int = 2, seed: int = 0,
                       mtry: Optional[int] = None) -> BoostModel:
    """Stage-wise least-squares boosting.

    Starts from the mean target; each stage fits a tree to the current
    residuals and adds ``learning_rate`` times its prediction. The training
    SSE after every stage is recorded in ``sse_trace`` (entry 0 is the
    mean-predictor SSE).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if K < 0:
        raise ValueError("K must be >= 0")
    if not 0.0 < learning_rate <= 1.0:
        raise ValueError("learning_rate must lie in (0, 1]")
    n, p = X.shape
    initial = math.fsum(y) / n
    F = np.full(n, initial)
    trace = [_sse(y, F)]
    trees = []
    for k in range(K):
        tree = fit_tree(X, y - F, max_depth, min_leaf, mtry, tree_rng(seed, k))
        F = F + learning_rate * tree.predict(X)
        trace.append(_sse(y, F))
        trees.append(tree)
    return BoostModel(initial, tuple(trees), learning_rate, K, seed, max_depth, min_leaf, p,
                      tuple(trace))
