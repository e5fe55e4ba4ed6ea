"""Graph container and adjacency normalization.

Edges are stored as parallel ``src``/``dst`` index arrays holding *directed*
entries; an undirected graph stores both directions explicitly. The edge list
is kept sorted lexicographically by (src, dst) so that iteration order, and
therefore gradient accumulation order, is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Graph", "NormalizedAdjacency", "row_normalize"]


def _as_index_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("edge index arrays must be one-dimensional")
    return arr


@dataclass(frozen=True)
class Graph:
    """Directed edge list over ``num_nodes`` nodes plus per-node out-degrees."""

    num_nodes: int
    src: np.ndarray
    dst: np.ndarray
    degrees: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        src = _as_index_array(self.src)
        dst = _as_index_array(self.dst)
        if src.shape != dst.shape:
            raise ValueError("src and dst must have equal length")
        if src.size:
            if src.min() < 0 or dst.min() < 0:
                raise ValueError("negative node index in edge list")
            if src.max() >= self.num_nodes or dst.max() >= self.num_nodes:
                raise ValueError("edge endpoint out of range")
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        if src.size:
            dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if dup.any():
                raise ValueError("duplicate edge pairs in edge list")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        degrees = np.bincount(src, minlength=self.num_nodes).astype(np.int64)
        object.__setattr__(self, "degrees", degrees)
        self.src.setflags(write=False)
        self.dst.setflags(write=False)
        self.degrees.setflags(write=False)

    @classmethod
    def from_edges(cls, num_nodes: int, edges, symmetrize: bool = False) -> "Graph":
        """Build a graph from (src, dst) pairs, deduplicating entries.

        With ``symmetrize=True`` the reverse of every pair is added as well,
        so the result satisfies the undirected storage convention.
        """
        pairs = list(edges)
        if pairs:
            arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
            src, dst = arr[:, 0], arr[:, 1]
        else:
            src = dst = np.empty(0, dtype=np.int64)
        if symmetrize and src.size:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
        if src.size:
            keys = np.stack([src, dst], axis=1)
            keys = np.unique(keys, axis=0)
            src, dst = keys[:, 0], keys[:, 1]
        return cls(num_nodes=num_nodes, src=src, dst=dst)

    @property
    def num_edges(self) -> int:
        """Number of directed edge entries."""
        return int(self.src.size)

    @property
    def num_undirected_edges(self) -> int:
        """Number of unordered {i, j} pairs (self-loops count once)."""
        off = int(np.count_nonzero(self.src != self.dst))
        loops = self.num_edges - off
        return off // 2 + loops

    def is_symmetric(self) -> bool:
        """True when (i, j) is stored iff (j, i) is stored."""
        fwd = set(zip(self.src.tolist(), self.dst.tolist()))
        return all((j, i) in fwd for (i, j) in fwd)

    def edge_pairs(self) -> np.ndarray:
        """Directed entries as an (E, 2) array."""
        return np.stack([self.src, self.dst], axis=1)

    def neighbors(self, node: int) -> np.ndarray:
        """Out-neighbors of ``node`` in sorted order."""
        if not 0 <= node < self.num_nodes:
            raise IndexError(f"node {node} out of range for {self.num_nodes} nodes")
        lo = np.searchsorted(self.src, node, side="left")
        hi = np.searchsorted(self.src, node, side="right")
        return self.dst[lo:hi]

    def with_self_loops(self) -> "Graph":
        """Copy of the graph with (i, i) entries added for every node."""
        loops = np.arange(self.num_nodes, dtype=np.int64)
        have = self.src == self.dst
        missing = np.setdiff1d(loops, self.src[have])
        return Graph(
            num_nodes=self.num_nodes,
            src=np.concatenate([self.src, missing]),
            dst=np.concatenate([self.dst, missing]),
        )


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Per-edge weights of the row-normalized adjacency (one entry per edge)."""

    graph: Graph
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.graph.num_edges,):
            raise ValueError("weights must align with the edge list")
        object.__setattr__(self, "weights", w)
        self.weights.setflags(write=False)

    @property
    def src(self) -> np.ndarray:
        return self.graph.src

    @property
    def dst(self) -> np.ndarray:
        return self.graph.dst

    def to_dense(self) -> np.ndarray:
        """Dense N x N matrix; intended for small test graphs."""
        n = self.graph.num_nodes
        dense = np.zeros((n, n), dtype=np.float64)
        dense[self.src, self.dst] = self.weights
        return dense


def row_normalize(g: Graph, add_self_loops: bool = False) -> NormalizedAdjacency:
    """Weight each edge (i, j) by 1/out-degree(i).

    Rows of isolated nodes stay empty. ``add_self_loops`` inserts (i, i)
    entries before normalizing; the default leaves the diagonal to the
    model's residual branch.
    """
    if add_self_loops:
        g = g.with_self_loops()
    deg = g.degrees[g.src]
    weights = np.where(deg > 0, 1.0 / np.maximum(deg, 1), 0.0)
    return NormalizedAdjacency(graph=g, weights=weights)
