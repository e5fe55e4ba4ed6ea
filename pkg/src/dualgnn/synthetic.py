"""Synthetic block-model graphs and feature/edge noise injection."""

from __future__ import annotations

import numpy as np

from .datasets import GraphData, Split, make_splits
from .graphs import Graph

__all__ = ["generate_synthetic", "perturb_features", "perturb_edges"]


def _sample_pair(rng, members, intra: bool, classes: int) -> tuple[int, int]:
    if intra:
        c = int(rng.integers(classes))
        while members[c].size < 2:
            c = int(rng.integers(classes))
        i, j = rng.choice(members[c], size=2, replace=False)
    else:
        ca, cb = rng.choice(classes, size=2, replace=False)
        i = int(rng.choice(members[ca]))
        j = int(rng.choice(members[cb]))
    return (int(i), int(j)) if i < j else (int(j), int(i))


def generate_synthetic(
    n: int,
    classes: int,
    avg_degree: float,
    edge_hom: float,
    feature_signal: float,
    seed: int = 0,
    num_features: int = 32,
    num_splits: int = 1,
    split_ratios=(0.48, 0.32, 0.20),
) -> GraphData:
    """Block-model graph with a target edge homophily.

    The number of intra-class undirected edges is fixed to
    ``round(edge_hom * m)`` out of ``m = round(avg_degree * n / 2)``, so the
    realized homophily matches the target up to duplicate-rejection effects.
    Node features are ``feature_signal * class_mean + standard normal noise``;
    ``feature_signal=0`` yields pure-noise features.
    """
    if not 0.0 <= edge_hom <= 1.0:
        raise ValueError("edge_hom must lie in [0, 1]")
    if classes < 1 or n < classes:
        raise ValueError("need at least one node per class")
    rng = np.random.default_rng(seed)

    labels = rng.permutation(np.arange(n) % classes)
    members = [np.flatnonzero(labels == c) for c in range(classes)]

    m = int(round(avg_degree * n / 2))
    max_pairs = n * (n - 1) // 2
    if m > max_pairs:
        raise ValueError(f"avg_degree {avg_degree} infeasible for n={n}")
    n_intra = int(round(edge_hom * m))
    n_inter = m - n_intra
    if n_intra > 0 and max(mem.size for mem in members) < 2:
        raise ValueError("intra-class edges requested but no class has two nodes")
    if n_inter > 0 and classes < 2:
        raise ValueError("inter-class edges requested but only one class exists")

    chosen: set[tuple[int, int]] = set()
    for intra, quota in ((True, n_intra), (False, n_inter)):
        placed = 0
        attempts = 0
        limit = 200 * max(quota, 1)
        while placed < quota:
            attempts += 1
            if attempts > limit:
                raise ValueError("edge sampling failed; graph too dense for target homophily")
            pair = _sample_pair(rng, members, intra, classes)
            if pair in chosen:
                continue
            chosen.add(pair)
            placed += 1

    graph = Graph.from_edges(n, sorted(chosen), symmetrize=True)

    class_means = rng.standard_normal((classes, num_features))
    features = feature_signal * class_means[labels] + rng.standard_normal((n, num_features))

    splits = make_splits(n, ratios=split_ratios, num_splits=num_splits, seed=seed)
    return GraphData(
        graph=graph,
        features=features,
        labels=labels,
        num_classes=classes,
        splits=splits,
    )


def perturb_features(x, coef: float, seed: int = 0) -> np.ndarray:
    """Add ``coef`` times standard-normal noise entrywise; ``coef=0`` is a no-op."""
    if coef < 0:
        raise ValueError("noise coefficient must be non-negative")
    x = np.asarray(x, dtype=np.float64)
    if coef == 0.0:
        return x
    rng = np.random.default_rng(seed)
    return x + coef * rng.standard_normal(x.shape)


def perturb_edges(g: Graph, frac: float, mode: str, seed: int = 0) -> Graph:
    """Randomly add or remove ``floor(frac * E/2)`` undirected edges.

    Additions are uniform over absent unordered pairs, removals uniform over
    present ones; both directions are touched together so symmetry survives.
    The experiment sweep stays in [0, 0.3] but any fraction up to 1 is valid.
    """
    if mode not in ("add", "remove"):
        raise ValueError(f"mode must be 'add' or 'remove', got {mode!r}")
    if not 0.0 <= frac <= 1.0:
        raise ValueError("frac must lie in [0, 1]")
    k = int(np.floor(frac * g.num_undirected_edges))
    if k == 0:
        return g
    rng = np.random.default_rng(seed)
    lower = g.src <= g.dst
    pairs = set(zip(g.src[lower].tolist(), g.dst[lower].tolist()))

    if mode == "remove":
        ordered = sorted(pairs)
        drop = rng.choice(len(ordered), size=k, replace=False)
        for idx in drop:
            pairs.discard(ordered[idx])
    else:
        max_pairs = g.num_nodes * (g.num_nodes - 1) // 2
        free = max_pairs - len(pairs)
        if free == 0:
            raise ValueError("cannot add edges to a complete graph")
        k = min(k, free)
        added = 0
        attempts = 0
        limit = 200 * k + 1000
        while added < k:
            attempts += 1
            if attempts > limit:
                # dense graph: fall back to explicit enumeration of non-edges
                all_pairs = [
                    (i, j)
                    for i in range(g.num_nodes)
                    for j in range(i + 1, g.num_nodes)
                    if (i, j) not in pairs
                ]
                extra = rng.choice(len(all_pairs), size=k - added, replace=False)
                for idx in extra:
                    pairs.add(all_pairs[idx])
                added = k
                break
            i, j = rng.integers(g.num_nodes, size=2)
            if i == j:
                continue
            pair = (int(min(i, j)), int(max(i, j)))
            if pair in pairs:
                continue
            pairs.add(pair)
            added += 1

    return Graph.from_edges(g.num_nodes, sorted(pairs), symmetrize=True)
