"""Independent reference computations used to freeze and check results.

Nothing here calls into the code paths it checks.
"""

import itertools

import numpy as np


def normal_equations(X, y):
    """OLS by solving (A^T A) b = A^T y with an intercept column."""
    A = np.column_stack([np.ones(len(y)), X])
    return np.linalg.solve(A.T @ A, A.T @ y)


def partition_wcss(points, labels):
    total = 0.0
    for c in set(labels):
        grp = points[np.asarray(labels) == c]
        total += float(((grp - grp.mean(axis=0)) ** 2).sum())
    return total


def best_two_partition(points):
    """Exhaustive minimum-wcss split into two non-empty groups."""
    n = len(points)
    best = None
    # point 0 always in group 0; enumerate membership of the rest
    for bits in itertools.product((0, 1), repeat=n - 1):
        labels = (0,) + bits
        if 1 not in labels:
            continue
        w = partition_wcss(points, labels)
        if best is None or w < best[0]:
            best = (w, labels)
    return best


def canonical_partition(labels):
    """Relabel so that groups are numbered by first appearance."""
    seen = {}
    return tuple(seen.setdefault(l, len(seen)) for l in labels)


def _sse(v):
    return float(((v - v.mean()) ** 2).sum()) if len(v) else 0.0


def exhaustive_tree(X, y, max_depth, min_leaf, tie_tol=1e-12, depth=0):
    """Greedy tree built by enumerating every (feature, threshold) split.

    Returns nested tuples: ``("leaf", value)`` or ``(feature, threshold, left, right)``.
    """
    n = len(y)
    leaf = ("leaf", float(np.mean(y)))
    if depth >= max_depth or n < 2 * min_leaf:
        return leaf
    parent = _sse(y)
    cands = []
    for f in range(X.shape[1]):
        vals = sorted(set(X[:, f].tolist()))
        for a, b in zip(vals, vals[1:]):
            t = (a + b) / 2.0
            left = X[:, f] <= t
            if left.sum() < min_leaf or (~left).sum() < min_leaf:
                continue
            gain = parent - _sse(y[left]) - _sse(y[~left])
            cands.append((gain, f, t))
    if not cands:
        return leaf
    top = max(g for g, _, _ in cands)
    band = tie_tol * parent
    if top <= band:
        return leaf
    _, f, t = min((c for c in cands if c[0] >= top - band), key=lambda c: (c[1], c[2]))
    mask = X[:, f] <= t
    return (f, t,
            exhaustive_tree(X[mask], y[mask], max_depth, min_leaf, tie_tol, depth + 1),
            exhaustive_tree(X[~mask], y[~mask], max_depth, min_leaf, tie_tol, depth + 1))


def tree_to_nested(tree, node=0):
    if tree.feature[node] == -1:
        return ("leaf", float(tree.value[node]))
    return (int(tree.feature[node]), float(tree.threshold[node]),
            tree_to_nested(tree, int(tree.left[node])),
            tree_to_nested(tree, int(tree.right[node])))


def nested_equal(a, b, tol=1e-12):
    if a[0] == "leaf" or b[0] == "leaf":
        return a[0] == b[0] and abs(a[1] - b[1]) <= tol * max(1.0, abs(a[1]))
    return (a[0] == b[0] and a[1] == b[1]
            and nested_equal(a[2], b[2], tol) and nested_equal(a[3], b[3], tol))


def predict_nested(node, x):
    while node[0] != "leaf":
        f, t, left, right = node
        node = left if x[f] <= t else right
    return node[1]
