"""Deterministic K-means (Lloyd) with farthest-point seeding and restarts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import as_points

N_RESTARTS = 10
MAX_ITER = 100


class ClusteringError(ValueError):
    pass


@dataclass(frozen=True)
class Cluster:
    members: tuple[int, ...]
    center: np.ndarray


@dataclass(frozen=True)
class Clustering:
    clusters: tuple[Cluster, ...]
    cost: float

    @property
    def k(self) -> int:
        return len(self.clusters)

    def labels(self, n_points: int) -> np.ndarray:
        lab = np.full(n_points, -1, dtype=int)
        for c, cl in enumerate(self.clusters):
            lab[list(cl.members)] = c
        return lab


def _sq_dists(pts: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _farthest_point_seeds(pts: np.ndarray, k: int, start: int) -> np.ndarray:
    chosen = [start]
    d = np.sum((pts - pts[start]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(d))  # first index on ties
        chosen.append(nxt)
        d = np.minimum(d, np.sum((pts - pts[nxt]) ** 2, axis=1))
    return pts[chosen].copy()


def _d2_seeds(pts: np.ndarray, k: int, rng) -> np.ndarray:
    """k-means++ seeding: each next center drawn with probability proportional to D^2."""
    chosen = [int(rng.integers(len(pts)))]
    d = np.sum((pts - pts[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d.sum()
        nxt = int(np.argmax(d)) if total <= 0 else int(rng.choice(len(pts), p=d / total))
        chosen.append(nxt)
        d = np.minimum(d, np.sum((pts - pts[nxt]) ** 2, axis=1))
    return pts[chosen].copy()


def _lloyd(pts: np.ndarray, centers: np.ndarray, history: list | None = None):
    k = len(centers)
    labels = None
    for _ in range(MAX_ITER):
        # argmin picks the lowest cluster index on equidistant points
        new = np.argmin(_sq_dists(pts, centers), axis=1)
        counts = np.bincount(new, minlength=k)
        while np.any(counts == 0):
            # move the globally farthest point (from its own center) into the empty cluster
            empty = int(np.flatnonzero(counts == 0)[0])
            own = np.sum((pts - centers[new]) ** 2, axis=1)
            own[counts[new] <= 1] = -1.0
            far = int(np.argmax(own))
            new[far] = empty
            centers[empty] = pts[far]
            counts = np.bincount(new, minlength=k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            centers[c] = pts[labels == c].mean(axis=0)
        if history is not None:
            history.append(_cost(pts, labels, centers))
    return labels, centers


def _cost(pts: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    return float(np.sum((pts - centers[labels]) ** 2))


def kmeans(points, k: int, seed: int = 0, history: list | None = None) -> Clustering:
    """Partition ``points`` into ``k`` clusters minimising within-cluster squared error.

    Restart 0 seeds by farthest-point traversal from the lexicographically
    smallest point; later restarts use D^2 (k-means++) sampling from a
    generator derived from ``seed``. The lowest-cost restart wins, earliest on
    ties. If ``history`` is given, per-iteration costs of every restart are
    appended to it as separate lists.
    """
    pts = as_points(points)
    n = len(pts)
    if not isinstance(k, (int, np.integer)) or k < 1 or k > n:
        raise ClusteringError("invalid cluster count")
    k = int(k)
    if k == n:
        clusters = tuple(Cluster((i,), pts[i].copy()) for i in range(n))
        return Clustering(clusters, 0.0)

    lex0 = int(np.lexsort((pts[:, 1], pts[:, 0]))[0])
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, k, n])

    best = None
    for r in range(N_RESTARTS):
        init = _farthest_point_seeds(pts, k, lex0) if r == 0 else _d2_seeds(pts, k, rng)
        trace = [] if history is not None else None
        labels, centers = _lloyd(pts, init, trace)
        if history is not None:
            history.append(trace)
        cost = _cost(pts, labels, centers)
        if best is None or cost < best[0]:
            best = (cost, labels, centers)

    cost, labels, centers = best
    clusters = tuple(
        Cluster(tuple(int(i) for i in np.flatnonzero(labels == c)), centers[c].copy()) for c in range(k)
    )
    return Clustering(clusters, cost)


def clustering_cost(c: Clustering, points) -> float:
    """Recompute the within-cluster squared error of ``c`` over ``points``."""
    pts = as_points(points)
    total = 0.0
    for cl in c.clusters:
        idx = list(cl.members)
        if not idx or min(idx) < 0 or max(idx) >= len(pts):
            raise ClusteringError("cluster index out of range")
        member_pts = pts[idx]
        total += float(np.sum((member_pts - member_pts.mean(axis=0)) ** 2))
    return total
