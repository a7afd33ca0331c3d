import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from herding.clustering import ClusteringError, Cluster, Clustering, clustering_cost, kmeans
from herding.validation import exhaustive_kmeans_cost, kmeans_suite


def _check_partition(c, n, pts):
    members = sorted(i for cl in c.clusters for i in cl.members)
    assert members == list(range(n))
    for cl in c.clusters:
        assert cl.members
        assert np.allclose(cl.center, pts[list(cl.members)].mean(axis=0))


def test_singletons():
    pts = np.random.default_rng(0).normal(size=(5, 2))
    c = kmeans(pts, 5)
    assert c.cost == 0.0 and c.k == 5
    assert clustering_cost(c, pts) == 0.0


def test_two_groups():
    a = np.array([[0, 0], [0.1, 0], [0, 0.1]])
    pts = np.vstack([a, a + 50])
    c = kmeans(pts, 2)
    groups = sorted(tuple(cl.members) for cl in c.clusters)
    assert groups == [(0, 1, 2), (3, 4, 5)]
    for cl in c.clusters:
        assert np.allclose(cl.center, pts[list(cl.members)].mean(axis=0))


def test_six_points_global_optimum():
    pts = np.random.default_rng(3).normal(size=(6, 2))
    assert kmeans(pts, 2).cost == pytest.approx(exhaustive_kmeans_cost(pts, 2), rel=1e-12)


def test_hand_cost():
    c = Clustering((Cluster((0, 1), np.array([1.0, 0.0])),), 2.0)
    assert clustering_cost(c, [[0, 0], [2, 0]]) == pytest.approx(2.0)


def test_cost_recomputation_matches():
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(30, 2))
    c = kmeans(pts, 4, seed=5)
    assert clustering_cost(c, pts) == pytest.approx(c.cost, rel=1e-9)
    # independent summation over labels
    lab = c.labels(len(pts))
    total = sum(np.sum((pts[lab == k] - pts[lab == k].mean(axis=0)) ** 2) for k in range(c.k))
    assert total == pytest.approx(c.cost, rel=1e-9)


def test_errors():
    with pytest.raises(ClusteringError, match="invalid cluster count"):
        kmeans([[0, 0], [1, 1]], 3)
    with pytest.raises(ClusteringError, match="invalid cluster count"):
        kmeans([[0, 0], [1, 1]], 0)
    with pytest.raises(ValueError):
        kmeans([[0, 0], [np.inf, 1]], 1)
    with pytest.raises(ClusteringError):
        clustering_cost(Clustering((Cluster((0, 7), np.zeros(2)),), 0.0), [[0, 0], [1, 1]])


def test_oracle_rate():
    assert kmeans_suite(100, seed=1).passed


pts_strategy = st.integers(1, 25).flatmap(
    lambda n: st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=n, max_size=n)
)


@settings(max_examples=60, deadline=None)
@given(pts_strategy, st.integers(1, 6), st.integers(0, 2**31))
def test_partition_determinism_monotonicity(raw, k, seed):
    pts = np.array(raw, float)
    k = min(k, len(pts))
    hist = []
    c = kmeans(pts, k, seed, history=hist)
    _check_partition(c, len(pts), pts)
    assert c.cost == pytest.approx(clustering_cost(c, pts), rel=1e-9, abs=1e-12)
    for trace in hist:
        assert all(b <= a + 1e-9 * max(1.0, a) for a, b in zip(trace, trace[1:]))
    again = kmeans(pts, k, seed)
    assert [cl.members for cl in again.clusters] == [cl.members for cl in c.clusters]
    assert again.cost == c.cost
