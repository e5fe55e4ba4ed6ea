import numpy as np
import pytest

from dualgnn.graphs import Graph, row_normalize


def random_graph(rng, n, p=0.2):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph.from_edges(n, pairs, symmetrize=True)


def test_symmetrize_forced():
    g = Graph.from_edges(3, [(0, 1)], symmetrize=True)
    assert g.num_edges == 2
    assert set(zip(g.src.tolist(), g.dst.tolist())) == {(0, 1), (1, 0)}


def test_duplicate_edges_deduplicated():
    g = Graph.from_edges(3, [(0, 1), (0, 1), (1, 0)], symmetrize=True)
    assert g.num_edges == 2


def test_duplicate_edges_rejected_by_constructor():
    with pytest.raises(ValueError, match="duplicate"):
        Graph(num_nodes=3, src=np.array([0, 0]), dst=np.array([1, 1]))


def test_endpoint_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        Graph.from_edges(2, [(0, 5)])


def test_degrees_and_neighbors():
    g = Graph.from_edges(4, [(0, 1), (0, 2)], symmetrize=True)
    assert g.degrees.tolist() == [2, 1, 1, 0]
    assert g.neighbors(0).tolist() == [1, 2]
    assert g.neighbors(3).tolist() == []
    with pytest.raises(IndexError):
        g.neighbors(9)


def test_undirected_edge_count():
    g = Graph.from_edges(4, [(0, 1), (1, 2)], symmetrize=True)
    assert g.num_edges == 4
    assert g.num_undirected_edges == 2


def test_row_normalize_degree_two():
    g = Graph.from_edges(3, [(0, 1), (0, 2)], symmetrize=True)
    adj = row_normalize(g)
    from_zero = adj.weights[adj.src == 0]
    assert np.allclose(from_zero, 0.5)


def test_row_normalize_isolated_node_has_no_entries():
    g = Graph.from_edges(3, [(0, 1)], symmetrize=True)
    adj = row_normalize(g)
    assert not np.any(adj.src == 2)


def test_row_normalize_cycle_rows_sum_to_one():
    # 4-node cycle: every node has degree 2, so each weight is 0.5 and
    # per-source sums (computed by direct enumeration) are exactly 1.
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)], symmetrize=True)
    adj = row_normalize(g)
    assert np.allclose(adj.weights, 0.5)
    for node in range(4):
        assert abs(adj.weights[adj.src == node].sum() - 1.0) <= 1e-12


def test_row_sums_property_random_graphs():
    rng = np.random.default_rng(7)
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(2, 30)))
        adj = row_normalize(g)
        sums = np.zeros(g.num_nodes)
        np.add.at(sums, adj.src, adj.weights)
        for node in range(g.num_nodes):
            expected = 1.0 if g.degrees[node] > 0 else 0.0
            assert abs(sums[node] - expected) <= 1e-12


def test_self_loop_insertion():
    g = Graph.from_edges(3, [(0, 1)], symmetrize=True)
    looped = g.with_self_loops()
    assert looped.num_edges == 2 + 3
    adj = row_normalize(g, add_self_loops=True)
    assert np.any((adj.src == 2) & (adj.dst == 2))
    assert abs(adj.weights[adj.src == 0].sum() - 1.0) <= 1e-12


def test_dense_adjacency_matches_edges():
    g = Graph.from_edges(3, [(0, 1), (1, 2)], symmetrize=True)
    dense = row_normalize(g).to_dense()
    expected = np.array([[0, 1.0, 0], [0.5, 0, 0.5], [0, 1.0, 0]])
    assert np.allclose(dense, expected)
