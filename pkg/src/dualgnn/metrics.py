"""Label-agreement and attention-asymmetry metrics over graphs.

Hop-based metrics use *strict* k-hop neighborhoods: nodes whose shortest-path
distance from the anchor is exactly k. Fractions over empty pair sets are
reported as ``None`` rather than zero.
"""

from __future__ import annotations

import numpy as np

from .graphs import Graph, NormalizedAdjacency

__all__ = [
    "edge_homophily",
    "bfs_distances",
    "k_hop_neighbors",
    "k_hop_homophily",
    "k_hop_embedding_distance",
    "graph_asymmetry",
]


def edge_homophily(g: Graph, labels) -> float:
    """Fraction of directed edge entries whose endpoints share a label."""
    if g.num_edges == 0:
        raise ValueError("edge homophily undefined on an empty edge list")
    y = np.asarray(labels, dtype=np.int64)
    return float(np.mean(y[g.src] == y[g.dst]))


def bfs_distances(g: Graph, node: int) -> np.ndarray:
    """Shortest-path hop counts from ``node``; -1 marks unreachable nodes."""
    if not 0 <= node < g.num_nodes:
        raise IndexError(f"node {node} out of range for {g.num_nodes} nodes")
    dist = np.full(g.num_nodes, -1, dtype=np.int64)
    dist[node] = 0
    frontier = np.array([node], dtype=np.int64)
    d = 0
    while frontier.size:
        d += 1
        nxt = []
        for u in frontier:
            for v in g.neighbors(int(u)):
                if dist[v] < 0:
                    dist[v] = d
                    nxt.append(v)
        frontier = np.array(nxt, dtype=np.int64)
    return dist


def k_hop_neighbors(g: Graph, node: int, k: int) -> np.ndarray:
    """Nodes at shortest-path distance exactly ``k`` from ``node``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    dist = bfs_distances(g, node)
    return np.flatnonzero(dist == k)


def k_hop_homophily(g: Graph, labels, k: int) -> float | None:
    """Fraction of ordered (node, strict k-hop neighbor) pairs sharing a label.

    Returns ``None`` when no node has a strict k-hop neighbor.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    y = np.asarray(labels, dtype=np.int64)
    same = 0
    total = 0
    for node in range(g.num_nodes):
        nbrs = k_hop_neighbors(g, node, k)
        total += nbrs.size
        same += int(np.count_nonzero(y[nbrs] == y[node]))
    if total == 0:
        return None
    return same / total


def k_hop_embedding_distance(g: Graph, embeddings, k: int) -> float | None:
    """Mean cosine distance between each node and its strict k-hop neighbors.

    Averages over ordered pairs; zero-norm embedding rows are treated as
    orthogonal to everything (distance 1). ``None`` when no pairs exist.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2 or emb.shape[0] != g.num_nodes:
        raise ValueError("embedding row count must equal node count")
    norms = np.linalg.norm(emb, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = emb / safe[:, None]
    total = 0.0
    count = 0
    for node in range(g.num_nodes):
        nbrs = k_hop_neighbors(g, node, k)
        if nbrs.size == 0:
            continue
        sims = unit[nbrs] @ unit[node]
        total += float(np.sum(1.0 - sims))
        count += nbrs.size
    if count == 0:
        return None
    return total / count


def _edge_values(att) -> tuple[Graph, np.ndarray]:
    if isinstance(att, NormalizedAdjacency):
        return att.graph, np.asarray(att.weights, dtype=np.float64)
    graph = getattr(att, "graph")
    values = att.numpy() if hasattr(att, "numpy") else np.asarray(att.values, dtype=np.float64)
    return graph, values


def graph_asymmetry(att) -> float:
    """Mean relative difference |r_ij - r_ji| / (|r_ij| + |r_ji|).

    Averaged over unordered neighbor pairs of a symmetrized edge list;
    pairs with zero denominator are skipped, self-loops ignored. Returns
    0.0 when no eligible pair remains.
    """
    graph, values = _edge_values(att)
    if values.shape != (graph.num_edges,):
        raise ValueError("attention values must align with the edge list")
    if graph.num_edges == 0:
        return 0.0
    n = graph.num_nodes
    keys = graph.src * n + graph.dst  # sorted ascending by construction
    rev = graph.dst * n + graph.src
    pos = np.searchsorted(keys, rev)
    pos = np.clip(pos, 0, keys.size - 1)
    if not np.array_equal(keys[pos], rev):
        raise ValueError("attention must be aligned to a symmetrized edge list")
    lower = graph.src < graph.dst
    fwd = values[lower]
    bwd = values[pos[lower]]
    denom = np.abs(fwd) + np.abs(bwd)
    eligible = denom > 0
    if not eligible.any():
        return 0.0
    rel = np.abs(fwd[eligible] - bwd[eligible]) / denom[eligible]
    return float(np.mean(rel))
