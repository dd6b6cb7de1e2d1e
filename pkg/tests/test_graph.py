import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dynrgg.geometry import torus_distance
from dynrgg.graph import (Graph, bfs_components, build_rgg, component_census, connected_components,
                          count_isolated, is_connected, isolated_vertices, snapshot_connectivity,
                          unwrap_component)
from dynrgg.validation import brute_census

THREE = np.array([[0.0, 0.0], [0.05, 0.0], [0.5, 0.5]])


def nx_graph(pts, r):
    g = nx.Graph()
    g.add_nodes_from(range(len(pts)))
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if torus_distance(pts[i], pts[j]) <= r:
                g.add_edge(i, j)
    return g


def partition(lab):
    return sorted(sorted(int(v) for v in part) for part in lab.members().values())


def test_three_point_graph():
    g = build_rgg(THREE, 0.1)
    assert g.edges() == [(0, 1)]
    lab = connected_components(g)
    assert partition(lab) == [[0, 1], [2]]
    assert lab.component_count == 2
    assert not is_connected(lab)
    assert count_isolated(lab) == 1
    assert isolated_vertices(g).tolist() == [2]


def test_single_vertex_and_empty_graph():
    g = build_rgg(np.array([[0.3, 0.3]]), 0.2)
    assert g.edges() == [] and g.edge_count == 0
    lab = connected_components(g)
    assert is_connected(lab) and count_isolated(lab) == 1
    empty = build_rgg(np.empty((0, 2)), 0.1)
    assert is_connected(connected_components(empty))


def test_path_complete_and_edgeless():
    path = Graph.from_pairs(3, 0.1, np.array([0, 1]), np.array([1, 2]))
    lab = connected_components(path)
    assert lab.sizes == {0: 3} and is_connected(lab)
    cluster = np.array([[0.5, 0.5], [0.51, 0.5], [0.5, 0.51], [0.49, 0.49], [0.505, 0.495]])
    assert count_isolated(connected_components(build_rgg(cluster, 0.1))) == 0
    rng = np.random.default_rng(0)
    assert count_isolated(connected_components(build_rgg(rng.random((7, 2)), 1e-6))) == 7


def test_random_graph_matches_networkx():
    rng = np.random.default_rng(11)
    pts = rng.random((200, 2))
    r = 0.07
    g = build_rgg(pts, r)
    ref = nx_graph(pts, r)
    assert g.edges() == sorted(tuple(sorted(e)) for e in ref.edges())
    want = sorted(sorted(c) for c in nx.connected_components(ref))
    assert partition(connected_components(g)) == want
    assert bfs_components(g) == want


def test_adjacency_symmetric_sorted_no_loops():
    rng = np.random.default_rng(5)
    g = build_rgg(rng.random((150, 2)), 0.1)
    for i in range(g.n):
        nb = g.neighbors(i)
        assert i not in nb
        assert list(nb) == sorted(nb)
        for j in nb:
            assert i in g.neighbors(j)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 200), st.floats(0.005, 0.45), st.integers(0, 2**32 - 1))
def test_union_find_equals_bfs_and_sizes_sum(n, r, seed):
    pts = np.random.default_rng(seed).random((n, 2))
    g = build_rgg(pts, r)
    lab = connected_components(g)
    assert sum(lab.sizes.values()) == n
    assert partition(lab) == bfs_components(g)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 150), st.floats(0.005, 0.2), st.floats(1.0, 3.0), st.integers(0, 2**32 - 1))
def test_larger_radius_never_splits_components(n, r1, factor, seed):
    pts = np.random.default_rng(seed).random((n, 2))
    small = connected_components(build_rgg(pts, r1))
    big = connected_components(build_rgg(pts, min(r1 * factor, 0.7)))
    for part in small.members().values():
        assert len(set(big.root[part].tolist())) == 1


def test_unwrap_single_wrap_join():
    pts = np.array([[0.98, 0.5], [0.02, 0.5]])
    coords, ok = unwrap_component(pts, [0, 1], 0.1)
    assert ok
    np.testing.assert_allclose(coords, [[0.98, 0.5], [1.02, 0.5]])


def test_unwrap_leaves_interior_component_alone():
    pts = np.array([[0.4, 0.4], [0.45, 0.42], [0.5, 0.38]])
    coords, ok = unwrap_component(pts, [0, 1, 2], 0.1)
    assert ok
    np.testing.assert_allclose(coords, pts)


def test_unwrap_flags_a_ring_around_the_torus():
    r = 0.1
    k = math.ceil(1 / r) + 1
    pts = np.column_stack([np.arange(k) / k, np.full(k, 0.5)])
    _, ok = unwrap_component(pts, list(range(k)), r)
    assert not ok


def test_unwrap_rejects_disconnected_members():
    with pytest.raises(ValueError):
        unwrap_component(THREE, [0, 2], 0.1)


def test_census_tight_pair():
    r = 0.05
    pts = np.array([[0.5, 0.5], [0.5 + 0.05 * r, 0.5], [0.1, 0.1]])
    lab = connected_components(build_rgg(pts, r))
    c = component_census(pts, lab, r, epsilon=0.1)
    assert c.k_prime[2] == 1
    c = component_census(pts, lab, r, epsilon=0.01)
    assert c.k_prime[2] == 0 and c.k_ell[2] == 1
    assert c.k1 == 1 and c.largest_size == 2
    # the largest component (the pair) is excluded from K~
    assert c.k_tilde_ell[1] == 1 and c.k_tilde_ell[2] == 0
    assert c.notes


def test_census_rejects_bad_parameters():
    lab = connected_components(build_rgg(THREE, 0.1))
    for eps in (0.0, 0.5, -0.1):
        with pytest.raises(ValueError):
            component_census(THREE, lab, 0.1, epsilon=eps)
    with pytest.raises(ValueError):
        component_census(THREE, lab, 0.1, ell_max=1)


def test_census_leftmost_uses_unwrapped_coordinates():
    # pair straddling x=0: the leftmost lifted vertex is the one at x=0.99
    r = 0.1
    pts = np.array([[0.99, 0.5], [0.0, 0.5], [0.5, 0.5]])
    lab = connected_components(build_rgg(pts, r))
    assert component_census(pts, lab, r, epsilon=0.2).k_prime[2] == 1


def test_census_random_instance_matches_brute_force():
    rng = np.random.default_rng(21)
    pts = rng.random((300, 2))
    r = 0.05
    g = build_rgg(pts, r)
    got = component_census(pts, connected_components(g), r, epsilon=0.25, ell_max=4, graph=g)
    ref = brute_census(pts, r, 0.25, 4)
    for key, value in ref.items():
        assert getattr(got, key) == value, key


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 200), st.floats(0.01, 0.3), st.floats(0.01, 0.49), st.integers(0, 2**32 - 1))
def test_census_invariants(n, r, eps, seed):
    pts = np.random.default_rng(seed).random((n, 2))
    c = component_census(pts, connected_components(build_rgg(pts, r)), r, epsilon=eps, ell_max=4)
    assert c.k1 == c.k_ell.get(1, 0)
    assert sum(size * cnt for size, cnt in c.k_ell.items()) == n
    for ell in range(1, 5):
        assert c.k_prime[ell] <= c.k_ell.get(ell, 0)
        assert c.k_tilde_ell[ell] >= c.k_ell.get(ell, 0) - 1
        total = sum(cnt for size, cnt in c.k_ell.items() if size >= ell)
        assert c.k_tilde_ell[ell] == total - (1 if c.largest_size >= ell else 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 200), st.floats(0.005, 0.45), st.integers(0, 2**32 - 1))
def test_snapshot_shortcut_agrees_with_full_labeling(n, r, seed):
    pts = np.random.default_rng(seed).random((n, 2))
    iso, conn = snapshot_connectivity(pts[:, 0].copy(), pts[:, 1].copy(), r)
    g = build_rgg(pts, r)
    assert conn == is_connected(connected_components(g))
    assert np.flatnonzero(iso).tolist() == isolated_vertices(g).tolist()
