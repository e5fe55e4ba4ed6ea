import numpy as np
import pytest

from dualgnn.metrics import edge_homophily
from dualgnn.synthetic import generate_synthetic, perturb_edges, perturb_features


def test_pure_homophily_graph():
    data = generate_synthetic(n=60, classes=3, avg_degree=4, edge_hom=1.0, feature_signal=1.0, seed=0)
    y = data.labels
    assert np.all(y[data.graph.src] == y[data.graph.dst])


def test_pure_heterophily_graph():
    data = generate_synthetic(n=60, classes=3, avg_degree=4, edge_hom=0.0, feature_signal=1.0, seed=0)
    y = data.labels
    assert np.all(y[data.graph.src] != y[data.graph.dst])


def test_realized_homophily_near_target():
    data = generate_synthetic(n=1000, classes=5, avg_degree=10, edge_hom=0.2, feature_signal=0.5, seed=1)
    realized = edge_homophily(data.graph, data.labels)
    assert 0.15 <= realized <= 0.25


def test_generator_deterministic():
    a = generate_synthetic(n=100, classes=4, avg_degree=6, edge_hom=0.3, feature_signal=0.7, seed=5)
    b = generate_synthetic(n=100, classes=4, avg_degree=6, edge_hom=0.3, feature_signal=0.7, seed=5)
    assert np.array_equal(a.graph.src, b.graph.src)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)


def test_generator_infeasible_degree():
    with pytest.raises(ValueError, match="infeasible"):
        generate_synthetic(n=10, classes=2, avg_degree=50, edge_hom=0.5, feature_signal=1.0)


def test_zero_signal_features_are_pure_noise():
    data = generate_synthetic(n=400, classes=2, avg_degree=4, edge_hom=0.5, feature_signal=0.0, seed=3)
    by_class = [data.features[data.labels == c].mean(axis=0) for c in (0, 1)]
    # class means of pure noise should agree within sampling error
    assert np.abs(by_class[0] - by_class[1]).max() < 0.5


def test_perturb_features_zero_coef_is_identity():
    x = np.arange(12, dtype=float).reshape(3, 4)
    out = perturb_features(x, 0.0, seed=0)
    assert np.array_equal(out, x)


def test_perturb_features_deterministic():
    x = np.ones((5, 5))
    a = perturb_features(x, 0.3, seed=42)
    b = perturb_features(x, 0.3, seed=42)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, x)


def test_perturb_features_variance_matches_coef():
    x = np.zeros((500, 200))
    coef = 0.3
    out = perturb_features(x, coef, seed=7)
    sample_var = np.var(out - x)
    assert abs(sample_var - coef**2) <= 0.05 * coef**2


def test_perturb_edges_zero_fraction():
    data = generate_synthetic(n=50, classes=2, avg_degree=4, edge_hom=0.5, feature_signal=1.0, seed=0)
    assert perturb_edges(data.graph, 0.0, "add", seed=0) is data.graph


def test_perturb_edges_remove_all():
    data = generate_synthetic(n=10, classes=2, avg_degree=2, edge_hom=0.5, feature_signal=1.0, seed=0)
    out = perturb_edges(data.graph, 1.0, "remove", seed=0)
    assert out.num_edges == 0


def test_perturb_edges_add_exact_count():
    data = generate_synthetic(n=200, classes=2, avg_degree=10, edge_hom=0.5, feature_signal=1.0, seed=2)
    g = data.graph
    assert g.num_undirected_edges == 1000
    out = perturb_edges(g, 0.1, "add", seed=1)
    assert out.num_undirected_edges == g.num_undirected_edges + 100


def test_perturb_edges_remove_exact_count():
    data = generate_synthetic(n=200, classes=2, avg_degree=10, edge_hom=0.5, feature_signal=1.0, seed=2)
    g = data.graph
    out = perturb_edges(g, 0.1, "remove", seed=1)
    assert out.num_undirected_edges == g.num_undirected_edges - 100


def test_perturb_edges_preserves_symmetry():
    data = generate_synthetic(n=80, classes=3, avg_degree=5, edge_hom=0.4, feature_signal=1.0, seed=4)
    for mode in ("add", "remove"):
        out = perturb_edges(data.graph, 0.2, mode, seed=9)
        assert out.is_symmetric()


def test_perturb_edges_rejects_complete_graph_add():
    from dualgnn.graphs import Graph

    pairs = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    g = Graph.from_edges(5, pairs, symmetrize=True)
    with pytest.raises(ValueError, match="complete"):
        perturb_edges(g, 0.3, "add", seed=0)


def test_perturb_edges_mode_validated():
    data = generate_synthetic(n=20, classes=2, avg_degree=3, edge_hom=0.5, feature_signal=1.0, seed=0)
    with pytest.raises(ValueError, match="mode"):
        perturb_edges(data.graph, 0.1, "flip", seed=0)
