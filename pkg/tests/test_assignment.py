import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from herding.assignment import AssignmentError, assign, furthest_member, order_clusters, selected_state
from herding.clustering import kmeans
from herding.dynamics import ModelTable, WorldState
from herding.geometry import convex_hull


def world(ev, n=4):
    ev = np.asarray(ev, float)
    ang = 2 * np.pi * np.arange(n) / n
    he = 100 * np.column_stack([np.cos(ang), np.sin(ang)])
    return WorldState(ev, he, ModelTable.uniform(len(ev)))


def test_fewer_hull_points_than_herders():
    w = world([[0, 0], [1, 0], [0, 1]], n=5)
    a = assign(w)
    assert a.p == 3
    assert sorted(a.selected) == [0, 1, 2]


def test_singleton_clusters_select_members():
    w = world([[0, 0], [4, 0], [4, 4], [0, 4]], n=4)
    a = assign(w)
    assert sorted(a.selected) == [0, 1, 2, 3]
    for k in range(a.p):
        assert a.cluster_members(k) == (a.selected[k],)


def test_pipeline_oracle():
    rng = np.random.default_rng(12)
    ang = np.sort(rng.uniform(0, 2 * np.pi, 12))
    ring = 5 * np.column_stack([np.cos(ang), np.sin(ang)])
    inner = rng.uniform(-2, 2, size=(20, 2))
    ev = np.vstack([ring, inner])
    w = world(ev, n=4)
    a = assign(w, 4, seed=3)

    hidx = list(convex_hull(ev).vertex_indices)
    assert sorted(hidx) == list(range(12))
    cl = order_clusters(kmeans(ev[hidx], 4, 3), ev[hidx])
    want = []
    for c in cl.clusters:
        members = [hidx[i] for i in c.members]
        d = [np.sum((ev[j] - c.center) ** 2) for j in members]
        best = max(d)
        want.append(min(j for j, dj in zip(members, d) if dj == best))
    assert list(a.selected) == want


def test_furthest_member_tie_goes_to_lowest_index():
    pts = np.array([[1, 0], [-1, 0], [0, 0]], float)
    assert furthest_member([1, 0, 2], pts, np.zeros(2)) == 0


def test_selected_state():
    w = world([[0, 0], [1, 0], [0, 1]], n=3)
    a = assign(w)
    assert np.array_equal(selected_state(a, w), w.evaders[list(a.selected)])
    small = world([[0, 0]], n=3)
    with pytest.raises(AssignmentError):
        selected_state(a, small)


def test_bad_herder_count():
    with pytest.raises(AssignmentError):
        assign(world([[0, 0], [1, 1]]), n=0)


clouds = st.integers(1, 40).flatmap(
    lambda m: st.lists(st.tuples(st.integers(-5000, 5000), st.integers(-5000, 5000)), min_size=m, max_size=m)
)


@settings(max_examples=60, deadline=None)
@given(clouds, st.integers(1, 6), st.integers(0, 1000))
def test_assignment_invariants(raw, n, seed):
    ev = np.array(raw, float) / 100
    w = world(ev, n)
    a = assign(w, n, seed)
    assert a.p == min(len(a.hull_indices), n) <= n
    assert len(set(a.selected)) == a.p
    assert set(a.selected) <= set(a.hull_indices)
    for k, s in enumerate(a.selected):
        members = a.cluster_members(k)
        c = a.clustering.clusters[k].center
        d = [np.sum((ev[j] - c) ** 2) for j in members]
        assert np.sum((ev[s] - c) ** 2) == max(d)
    again = assign(w, n, seed)
    assert again.selected == a.selected
