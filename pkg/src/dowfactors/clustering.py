"""
K-means clustering of stocks by their weekly return paths.

Each stock is a point whose coordinates are its weekly percent price
changes; distance is squared Euclidean on the raw values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyMatrix, InvalidK, UnknownTicker
from .features import ReturnMatrix

DEFAULT_K = 3
DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-6
DEFAULT_RESTARTS = 10


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: dict[str, int]
    wcss: float
    iterations: int
    seed: Optional[int]
    history: tuple[float, ...] = ()
    converged: bool = False

    def labels(self, tickers: Sequence[str]) -> np.ndarray:
        return np.array([self.assignments[t] for t in tickers], dtype=int)


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _wcss(points, centroids, labels) -> float:
    diff = points - centroids[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def _means(points, labels, k, current):
    """Cluster means; an empty cluster is reseeded with the point farthest
    from its own centroid (taken from a cluster with at least two members)."""
    labels = labels.copy()
    centroids = current.copy()
    while True:
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if not empty.size:
            break
        for j in range(k):
            if counts[j]:
                centroids[j] = points[labels == j].mean(axis=0)
        d = np.einsum("ij,ij->i", points - centroids[labels], points - centroids[labels])
        d[counts[labels] < 2] = -np.inf
        donor = int(np.argmax(d))
        labels[donor] = int(empty[0])
    for j in range(k):
        centroids[j] = points[labels == j].mean(axis=0)
    return centroids, labels


def _assign(points, centroids) -> np.ndarray:
    # argmin returns the first minimum, so ties go to the lowest cluster index
    return np.argmin(_sq_dists(points, centroids), axis=1)


def lloyd(points: np.ndarray, init: np.ndarray, max_iter: int = DEFAULT_MAX_ITER,
          tol: float = DEFAULT_TOL):
    """Run Lloyd iterations from the given initial centroids.

    Returns ``(centroids, labels, wcss, iterations, history, converged)``.
    ``history`` holds the objective after the initial assignment and after
    every accepted centroid update; it is checked to be non-increasing on
    every step. An update that would raise the objective (possible only
    through rounding) is discarded and iteration stops.
    """
    points = np.asarray(points, dtype=float)
    centroids = np.array(init, dtype=float, copy=True)
    k = centroids.shape[0]
    labels = _assign(points, centroids)
    wcss = _wcss(points, centroids, labels)
    history = [wcss]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new_centroids, new_labels = _means(points, labels, k, centroids)
        new_labels = _assign(points, new_centroids)
        new_wcss = _wcss(points, new_centroids, new_labels)
        if new_wcss > wcss:
            converged = True
            break
        assert new_wcss <= history[-1], "wcss increased during Lloyd iteration"
        stable = np.array_equal(new_labels, labels)
        improvement = wcss - new_wcss
        centroids, labels, wcss = new_centroids, new_labels, new_wcss
        history.append(wcss)
        if stable:
            converged = True
            break
        if improvement < tol:
            break
    # labels are nearest-centroid; pull centroids to the means of those labels
    # when that does not raise the objective (it never does mathematically)
    final_centroids, final_labels = _means(points, labels, k, centroids)
    final_wcss = _wcss(points, final_centroids, final_labels)
    if final_wcss <= wcss and np.array_equal(final_labels, labels):
        if final_wcss < wcss:
            history.append(final_wcss)
        centroids, wcss = final_centroids, final_wcss
    return centroids, labels, wcss, it, tuple(history), converged


def _points(r) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(r, ReturnMatrix):
        pts, tickers = np.asarray(r.values, dtype=float), r.tickers
    else:
        pts = np.asarray(r, dtype=float)
        tickers = tuple(str(i) for i in range(pts.shape[0])) if pts.ndim == 2 else ()
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
        raise EmptyMatrix("k-means needs a non-empty 2-d matrix")
    return pts, tickers


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise InvalidK(f"k must lie in [1, {n}], got {k}")


def kmeans(r, k: int = DEFAULT_K, seed: int = 0, max_iter: int = DEFAULT_MAX_ITER,
           tol: float = DEFAULT_TOL, init: Optional[np.ndarray] = None) -> ClusterModel:
    """Single seeded k-means run.

    ``r`` is a ReturnMatrix or a plain ``(n_points, n_dims)`` array. Unless
    ``init`` centroids are given, k distinct rows are drawn as the starting
    centroids with a generator seeded by ``seed``.
    """
    pts, tickers = _points(r)
    _check_k(k, pts.shape[0])
    if init is None:
        rng = np.random.default_rng(seed)
        idx = rng.choice(pts.shape[0], size=k, replace=False)
        init = pts[np.sort(idx)]
    else:
        init = np.asarray(init, dtype=float)
        if init.shape != (k, pts.shape[1]):
            raise InvalidK(f"init has shape {init.shape}, expected {(k, pts.shape[1])}")
    centroids, labels, wcss, iters, history, converged = lloyd(pts, init, max_iter, tol)
    centroids.setflags(write=False)
    return ClusterModel(
        k=k,
        centroids=centroids,
        assignments={t: int(c) for t, c in zip(tickers, labels)},
        wcss=wcss,
        iterations=iters,
        seed=seed,
        history=history,
        converged=converged,
    )


def best_of_restarts(r, k: int = DEFAULT_K, seed: int = 0, restarts: int = DEFAULT_RESTARTS,
                     max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> ClusterModel:
    """Lowest-wcss run over seeds ``seed, seed+1, ...``; ties go to the earliest."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    for i in range(restarts):
        m = kmeans(r, k, seed + i, max_iter, tol)
        if best is None or m.wcss < best.wcss:
            best = m
    return best


def elbow_curve(r, k_max: int = 10, seed: int = 0, restarts: int = DEFAULT_RESTARTS,
                max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL):
    """Best wcss for each k in ``1..k_max``.

    Besides the seeded restarts, each k > 1 gets one extra run started from
    the previous k's best centroids plus the point farthest from them, which
    makes the curve non-increasing in k.
    """
    pts, _ = _points(r)
    _check_k(k_max, pts.shape[0])
    curve = []
    prev = None
    for k in range(1, k_max + 1):
        best = best_of_restarts(pts, k, seed, restarts, max_iter, tol)
        if prev is not None:
            d = _sq_dists(pts, prev.centroids).min(axis=1)
            far = pts[int(np.argmax(d))]
            warm = kmeans(pts, k, seed, max_iter, tol,
                          init=np.vstack([prev.centroids, far]))
            if warm.wcss < best.wcss:
                best = warm
        curve.append((k, best.wcss))
        prev = best
    return curve


def cluster_members(m: ClusterModel, anchor: str) -> list[str]:
    if anchor not in m.assignments:
        raise UnknownTicker(f"unknown ticker {anchor!r}")
    cid = m.assignments[anchor]
    return sorted(t for t, c in m.assignments.items() if c == cid)


def cluster_feature(r: ReturnMatrix, members: Sequence[str], anchor: str) -> np.ndarray:
    """Equal-weighted mean weekly return of the anchor's cluster peers."""
    if not members:
        raise ValueError("members must not be empty")
    if anchor not in members:
        raise ValueError(f"anchor {anchor!r} is not among the members")
    peers = [t for t in members if t != anchor]
    if not peers:
        warnings.warn(f"{anchor} sits alone in its cluster; cluster feature is all zero",
                      stacklevel=2)
        return np.zeros(len(r.dates))
    return np.vstack([r.row(t) for t in peers]).mean(axis=0)
