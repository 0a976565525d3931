import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatform.errors import ConfigError, InvalidWeightError
from flatform.graph import (DirectedGraph, FormationSpec, incidence_matrix, kron_identity,
                            weighted_laplacian)

from conftest import make_spec


def test_incidence_single_edge():
    g = DirectedGraph.from_one_based(2, [(1, 2)])
    np.testing.assert_array_equal(incidence_matrix(g), [[1.0], [-1.0]])


def test_incidence_tree_columns_follow_edge_order():
    g = DirectedGraph.from_one_based(4, [(1, 2), (1, 3), (2, 4)])
    D = incidence_matrix(g)
    expected = np.array([[1, 1, 0], [-1, 0, 1], [0, -1, 0], [0, 0, -1]], dtype=float)
    np.testing.assert_array_equal(D, expected)


def test_incidence_empty_edge_list():
    D = incidence_matrix(DirectedGraph(3, ()))
    assert D.shape == (3, 0)


def test_laplacian_single_edge():
    g = DirectedGraph.from_one_based(2, [(1, 2)])
    np.testing.assert_array_equal(weighted_laplacian(g, [1.0]), [[1, -1], [-1, 1]])


def test_laplacian_four_uav_weighted_degree(four_uav):
    spec = four_uav.formation
    L = weighted_laplacian(spec.formation_graph, spec.mu)
    # weighted degree of each vertex in the complete 4-vertex graph
    mu = dict(zip(spec.formation_graph.edges, spec.mu))
    for v in range(4):
        deg = sum(w for (i, j), w in mu.items() if v in (i, j))
        assert L[v, v] == pytest.approx(deg)
    assert L[0, 1] == pytest.approx(-0.9)
    assert L[2, 3] == pytest.approx(-0.4)


def test_laplacian_rejects_non_positive_weight():
    g = DirectedGraph.from_one_based(3, [(1, 2), (2, 3)])
    with pytest.raises(InvalidWeightError):
        weighted_laplacian(g, [1.0, 0.0])
    with pytest.raises(InvalidWeightError):
        weighted_laplacian(g, [1.0, -2.0])


def test_kron_identity_small_cases(rng):
    np.testing.assert_array_equal(kron_identity(np.array([[2.0]]), 2), [[2, 0], [0, 2]])
    np.testing.assert_array_equal(kron_identity(np.eye(3), 4), np.eye(12))
    Y = rng.normal(size=(2, 3))
    x = rng.normal(size=(3, 3))
    stacked = kron_identity(Y, 3) @ x.reshape(-1)
    naive = np.array([sum(Y[i, j] * x[j] for j in range(3)) for i in range(2)])
    np.testing.assert_allclose(stacked, naive.reshape(-1), rtol=1e-14)


def _random_graph(rng, n):
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    mask = rng.random(len(pairs)) < 0.5
    edges = [p for p, keep in zip(pairs, mask) if keep] or [pairs[0]]
    return DirectedGraph(n, tuple(edges))


def test_sum_of_squares_identity_random_graph(rng):
    g = _random_graph(rng, 5)
    w = rng.uniform(0.1, 2.0, size=g.edge_count)
    L = weighted_laplacian(g, w)
    for m in (1, 3):
        for _ in range(100):
            x = rng.normal(size=5 * m)
            quad = x @ kron_identity(L, m) @ x
            direct = sum(wk * np.sum((x[m * i:m * i + m] - x[m * j:m * j + m]) ** 2)
                         for (i, j), wk in zip(g.edges, w))
            assert abs(quad - direct) <= 1e-9 * (1 + abs(quad))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 7), seed=st.integers(0, 2 ** 31 - 1))
def test_laplacian_properties(n, seed):
    rng = np.random.default_rng(seed)
    g = _random_graph(rng, n)
    w = rng.uniform(0.05, 3.0, size=g.edge_count)
    L = weighted_laplacian(g, w)
    np.testing.assert_array_equal(L, L.T)
    assert np.linalg.eigvalsh(L).min() >= -1e-10
    assert np.abs(L @ np.ones(n)).max() <= 1e-12
    # permuting the edge list permutes D and W together; L is unchanged
    perm = rng.permutation(g.edge_count)
    g2 = DirectedGraph(n, tuple(g.edges[k] for k in perm))
    np.testing.assert_allclose(weighted_laplacian(g2, w[perm]), L, atol=1e-12)
    np.testing.assert_array_equal(incidence_matrix(g2), incidence_matrix(g)[:, perm])


def test_graph_validation():
    with pytest.raises(ConfigError):
        DirectedGraph.from_one_based(2, [(1, 1)])
    with pytest.raises(ConfigError):
        DirectedGraph.from_one_based(2, [(1, 3)])
    with pytest.raises(ConfigError):
        DirectedGraph.from_one_based(3, [(1, 2), (1, 2)])
    with pytest.raises(ConfigError):
        DirectedGraph(0, ())


def test_complete_graph_has_every_ordered_pair():
    g = DirectedGraph.complete(4)
    assert g.edge_count == 12
    assert g.has_all_ordered_pairs()


def test_formation_spec_requires_connectivity():
    with pytest.raises(ConfigError, match="Assumption 1"):
        make_spec(3, [])
    with pytest.raises(ConfigError, match="connected"):
        make_spec(4, [(1, 2), (3, 4)])


def test_formation_spec_requires_globally_reachable_node():
    # 1 -> 2 <- 3: connected, but no vertex reaches all others
    with pytest.raises(ConfigError, match="globally reachable"):
        make_spec(3, [(1, 2), (3, 2)])
    spec = make_spec(3, [(1, 2), (2, 3)])
    assert spec.formation_graph.globally_reachable_nodes() == [0]


def test_formation_spec_requires_complete_communication_graph():
    g = DirectedGraph.from_one_based(3, [(1, 2), (2, 3)])
    with pytest.raises(ConfigError, match="Assumption 2"):
        FormationSpec(g, np.ones(2), np.ones(2), np.zeros((2, 3)), np.ones(3),
                      communication_graph=g)


def test_formation_spec_validates_weights_and_shapes():
    with pytest.raises(InvalidWeightError):
        make_spec(2, [(1, 2)], mu=[0.0])
    with pytest.raises(InvalidWeightError):
        make_spec(2, [(1, 2)], omega=[-1.0])
    with pytest.raises(InvalidWeightError):
        make_spec(2, [(1, 2)], gamma=[1.0, 0.0])
    g = DirectedGraph.from_one_based(2, [(1, 2)])
    with pytest.raises(ConfigError):
        FormationSpec(g, np.ones(1), np.ones(1), np.zeros((2, 3)), np.ones(2))
    with pytest.raises(ConfigError):
        FormationSpec(g, np.ones(2), np.ones(1), np.zeros((1, 3)), np.ones(2))


def test_formation_spec_is_read_only():
    spec = make_spec(2, [(1, 2)])
    with pytest.raises(ValueError):
        spec.mu[0] = 5.0
