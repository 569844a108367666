import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ggad.errors import EndpointOutOfRange, FeatureShapeMismatch, NodeOutOfRange, NonFiniteFeature
from ggad.graph import build_graph, ego_network, khop_closure, normalize_adjacency

from conftest import bfs_closure, dense_normalized, random_graph


def test_single_edge_is_symmetrized():
    g = build_graph([(0, 1)], np.zeros((2, 1)))
    assert g.num_edges == 1
    assert g.neighbors(0).tolist() == [1]
    assert g.neighbors(1).tolist() == [0]


def test_duplicates_and_reverse_edges_collapse():
    a = build_graph([(0, 1)], np.zeros((2, 1)))
    b = build_graph([(0, 1), (1, 0), (0, 1)], np.zeros((2, 1)))
    assert a.same_as(b)


def test_self_loops_dropped():
    g = build_graph([(0, 0), (0, 1)], np.zeros((2, 1)))
    assert g.num_edges == 1
    assert 0 not in g.neighbors(0)


@pytest.mark.parametrize("edges", [[(0, 5)], [(-1, 0)]])
def test_endpoint_out_of_range(edges):
    with pytest.raises(EndpointOutOfRange):
        build_graph(edges, np.zeros((2, 1)))


def test_feature_errors():
    with pytest.raises(NonFiniteFeature):
        build_graph([(0, 1)], np.array([[1.0], [np.nan]]))
    with pytest.raises(FeatureShapeMismatch):
        build_graph([(0, 1)], np.zeros((2, 1)), labels=[0, 1, 0])


def test_neighbors_sorted():
    g = build_graph([(0, 3), (0, 1), (2, 0)], np.zeros((4, 2)))
    assert g.neighbors(0).tolist() == [1, 2, 3]


def test_normalize_single_edge():
    a = normalize_adjacency(build_graph([(0, 1)], np.zeros((2, 1)))).todense()
    np.testing.assert_allclose(a, np.full((2, 2), 0.5), rtol=0, atol=1e-15)


def test_normalize_isolated_node():
    a = normalize_adjacency(build_graph([(0, 1)], np.zeros((3, 1)))).todense()
    assert a[2, 2] == 1.0
    assert np.count_nonzero(a[2]) == 1


def test_normalize_star():
    g = build_graph([(0, 1), (0, 2), (0, 3)], np.zeros((4, 1)))
    a = normalize_adjacency(g).todense()
    assert a[0, 0] == pytest.approx(0.25)
    np.testing.assert_allclose(a[0, 1:], 0.35355339059327373, rtol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_normalize_matches_dense(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(seed, n=int(rng.integers(2, 51)), p=float(rng.uniform(0.02, 0.5)))
    a = normalize_adjacency(g)
    dense = a.todense()
    np.testing.assert_allclose(dense, dense_normalized(g), rtol=0, atol=1e-12)
    np.testing.assert_array_equal(dense, dense.T)
    assert (a.matrix.data > 0).all() and (a.matrix.data <= 1).all()
    assert (np.diag(dense) > 0).all()


def test_restrict_keeps_full_graph_weights():
    g = random_graph(3, n=30)
    a = normalize_adjacency(g)
    nodes = np.array([1, 4, 5, 9, 20])
    sub = a.restrict(nodes)
    np.testing.assert_array_equal(sub.todense(), a.todense()[np.ix_(nodes, nodes)])
    np.testing.assert_array_equal(sub.degrees, g.degrees[nodes])


def test_ego_network_examples():
    path = build_graph([(0, 1), (1, 2)], np.zeros((3, 1)))
    assert ego_network(path, 1) == [0, 2]
    tri = build_graph([(0, 1), (1, 2), (0, 2)], np.zeros((4, 1)))
    assert ego_network(tri, 0) == [1, 2]
    assert ego_network(tri, 3) == []
    with pytest.raises(NodeOutOfRange):
        ego_network(tri, 4)


def test_khop_chain():
    chain = build_graph([(0, 1), (1, 2), (2, 3)], np.zeros((4, 1)))
    nodes, edges = khop_closure(chain, {0}, 2)
    assert nodes.tolist() == [0, 1, 2]
    assert edges.tolist() == [[0, 1], [1, 2]]
    nodes, edges = khop_closure(chain, {0}, 0)
    assert nodes.tolist() == [0] and edges.shape == (0, 2)


def test_khop_star_from_leaf():
    star = build_graph([(0, 1), (0, 2), (0, 3), (0, 4)], np.zeros((5, 1)))
    nodes, edges = khop_closure(star, [3], 2)
    assert nodes.tolist() == bfs_closure(star, [3], 2) == [0, 1, 2, 3, 4]
    assert len(edges) == 4


def test_khop_bad_seed():
    g = build_graph([(0, 1)], np.zeros((2, 1)))
    with pytest.raises(NodeOutOfRange):
        khop_closure(g, [7], 1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(0, 4), n_seeds=st.integers(1, 5))
def test_khop_matches_bfs(seed, k, n_seeds):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 101))
    g = random_graph(seed, n=n, p=float(rng.uniform(0.005, 0.08)))
    seeds = rng.choice(n, size=min(n_seeds, n), replace=False)
    nodes, edges = khop_closure(g, seeds, k)
    assert nodes.tolist() == bfs_closure(g, seeds, k)
    inside = set(nodes.tolist())
    want = [e for e in g.edge_array().tolist() if e[0] in inside and e[1] in inside]
    assert edges.tolist() == want


@pytest.mark.parametrize("seed", range(5))
def test_ego_equals_one_hop_closure_minus_self(seed):
    g = random_graph(seed, n=40, p=0.08)
    for v in range(g.num_nodes):
        nodes, _ = khop_closure(g, [v], 1)
        assert ego_network(g, v) == [u for u in nodes.tolist() if u != v]
