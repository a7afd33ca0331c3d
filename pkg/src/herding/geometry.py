"""Planar point-set utilities: Quickhull convex hull, centroid, hull membership."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_GEO = 1e-9  # m, collinearity tolerance for orientation tests


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Hull:
    """Convex hull as counter-clockwise indices into the originating point set.

    The first vertex is the lexicographically smallest hull point. Points lying
    on an edge (within ``EPS_GEO``) are not vertices.
    """

    vertex_indices: tuple[int, ...]

    @property
    def vertex_count(self) -> int:
        return len(self.vertex_indices)

    def __len__(self) -> int:
        return len(self.vertex_indices)


def as_points(points) -> np.ndarray:
    """Coerce to a float (N, 2) array, rejecting empty or non-finite input."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise GeometryError("empty point set")
    pts = pts.reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise GeometryError("invalid coordinate")
    return pts


def _signed_dist(a: np.ndarray, b: np.ndarray, pts: np.ndarray) -> np.ndarray:
    # > 0 left of a->b, in metres
    ab = b - a
    cross = ab[0] * (pts[:, 1] - a[1]) - ab[1] * (pts[:, 0] - a[0])
    return cross / np.hypot(ab[0], ab[1])


def _right_chain(pts: np.ndarray, idx: np.ndarray, a: int, b: int) -> list[int]:
    """Hull vertices strictly right of a->b among ``idx``, ordered from a to b."""
    out: list[int] = []
    stack = [(a, b, idx, False)]
    # explicit stack: (a, b, candidates, emit) where emit=True outputs vertex a
    while stack:
        a, b, cand, emit = stack.pop()
        if emit:
            out.append(a)
            continue
        if cand.size == 0:
            continue
        d = -_signed_dist(pts[a], pts[b], pts[cand])
        keep = d > EPS_GEO
        cand, d = cand[keep], d[keep]
        if cand.size == 0:
            continue
        c = int(cand[np.argmax(d)])
        # push in reverse so the a->c chain is emitted before c, then c->b
        stack.append((c, b, cand, False))
        stack.append((c, c, cand, True))
        stack.append((a, c, cand, False))
    return out


def convex_hull(points) -> Hull:
    """Quickhull on a planar point set.

    Duplicated points are collapsed onto their first occurrence. A single
    distinct point yields a one-vertex hull and a collinear set yields its two
    extreme endpoints.
    """
    pts = as_points(points)
    _, first = np.unique(pts, axis=0, return_index=True)
    first = np.sort(first)
    order = np.lexsort((pts[first, 1], pts[first, 0]))
    lo = int(first[order[0]])
    hi = int(first[order[-1]])
    if lo == hi:
        return Hull((lo,))
    lower = _right_chain(pts, first, lo, hi)
    upper = _right_chain(pts, first, hi, lo)
    return Hull(tuple([lo, *lower, hi, *upper]))


def centroid(points) -> np.ndarray:
    pts = as_points(points)
    return pts.mean(axis=0)


def _check_hull(hull: Hull, n: int) -> None:
    if hull.vertex_count < 1:
        raise GeometryError("invalid hull: no vertices")
    if len(set(hull.vertex_indices)) != hull.vertex_count:
        raise GeometryError("invalid hull: repeated vertex")
    if min(hull.vertex_indices) < 0 or max(hull.vertex_indices) >= n:
        raise GeometryError("invalid hull: index out of range")


def point_in_hull(p, hull: Hull, points, eps: float = EPS_GEO) -> bool:
    """Inclusive membership test of ``p`` against a hull of ``points``."""
    pts = as_points(points)
    _check_hull(hull, len(pts))
    q = np.asarray(p, dtype=float).reshape(1, 2)
    verts = pts[list(hull.vertex_indices)]
    if len(verts) == 1:
        return bool(np.hypot(*(q[0] - verts[0])) <= eps)
    if len(verts) == 2:
        a, b = verts
        if abs(_signed_dist(a, b, q)[0]) > eps:
            return False
        ab = b - a
        t = float(np.dot(q[0] - a, ab) / np.dot(ab, ab))
        L = float(np.hypot(*ab))
        return -eps / L <= t <= 1 + eps / L
    return bool(np.all(points_in_polygon(q, verts, eps)))


def points_in_polygon(q: np.ndarray, verts: np.ndarray, eps: float = EPS_GEO) -> np.ndarray:
    """Vectorised inclusive test of many points against a CCW convex polygon.

    Returns a boolean array of length ``len(q)``. Polygons with fewer than
    three vertices contain nothing but their own boundary, so every query is
    reported outside unless it coincides with the degenerate polygon.
    """
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    if len(verts) < 3:
        return np.array([point_in_hull(p, Hull(tuple(range(len(verts)))), verts, eps) for p in q], dtype=bool)
    a = verts
    b = np.roll(verts, -1, axis=0)
    ab = b - a
    lengths = np.hypot(ab[:, 0], ab[:, 1])
    cross = ab[None, :, 0] * (q[:, None, 1] - a[None, :, 1]) - ab[None, :, 1] * (q[:, None, 0] - a[None, :, 0])
    return np.all(cross / lengths[None, :] >= -eps, axis=1)
