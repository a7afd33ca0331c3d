"""Dynamic assignment: hull evaders -> K-means clusters -> furthest member per cluster."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import Clustering, kmeans
from .dynamics import WorldState
from .geometry import convex_hull


class AssignmentError(ValueError):
    pass


@dataclass(frozen=True)
class Assignment:
    hull_indices: tuple[int, ...]
    clustering: Clustering  # members index into hull_indices
    selected: tuple[int, ...]

    @property
    def p(self) -> int:
        return len(self.selected)

    def cluster_members(self, k: int) -> tuple[int, ...]:
        """Evader indices of cluster ``k``."""
        return tuple(self.hull_indices[i] for i in self.clustering.clusters[k].members)


def order_clusters(clustering: Clustering, hull_pts: np.ndarray) -> Clustering:
    """Sort clusters counter-clockwise by center angle about the hull-vertex mean.

    Angles are measured from the direction of the first hull vertex (the
    lexicographically smallest one), keeping the stacking order stable while
    the herd moves.
    """
    c = hull_pts.mean(axis=0)
    a0 = np.arctan2(*(hull_pts[0] - c)[::-1])
    centers = np.array([cl.center for cl in clustering.clusters])
    ang = np.mod(np.arctan2(centers[:, 1] - c[1], centers[:, 0] - c[0]) - a0, 2 * np.pi)
    order = np.argsort(ang, kind="stable")
    return Clustering(tuple(clustering.clusters[i] for i in order), clustering.cost)


def furthest_member(members: np.ndarray, points: np.ndarray, center: np.ndarray) -> int:
    """Member index furthest from ``center``; the lowest index wins ties."""
    members = np.sort(np.asarray(members, dtype=int))
    d = np.sum((points[members] - center) ** 2, axis=1)
    return int(members[np.argmax(d)])


def assign(w: WorldState, n: int | None = None, seed: int = 0) -> Assignment:
    n = w.n if n is None else n
    if n < 1:
        raise AssignmentError("herder count must be at least 1")
    hull = convex_hull(w.evaders)
    hidx = np.array(hull.vertex_indices, dtype=int)
    hull_pts = w.evaders[hidx]
    p = min(len(hidx), n)
    clustering = order_clusters(kmeans(hull_pts, p, seed), hull_pts)
    selected = []
    for cl in clustering.clusters:
        selected.append(furthest_member(hidx[list(cl.members)], w.evaders, cl.center))
    return Assignment(tuple(int(i) for i in hidx), clustering, tuple(selected))


def selected_state(a: Assignment, w: WorldState) -> np.ndarray:
    """Positions of the selected evaders in cluster order, shape (p, 2)."""
    sel = np.asarray(a.selected, dtype=int)
    if sel.size and (sel.min() < 0 or sel.max() >= w.m):
        raise AssignmentError("assignment refers to evaders not present in the world")
    return w.evaders[sel].copy()
