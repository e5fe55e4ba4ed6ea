"""Edge-indexed self-attention with signed reweighting.

Attention values live only on existing edges: query rows are gathered by
edge source, key rows by edge destination, multiplied entrywise and summed
per edge. That keeps the cost linear in the edge count and never
materializes an N x N matrix; :func:`dense_attention_oracle` provides the
quadratic reference for equivalence tests.

Stages of a value vector:

    raw         inner products of simplex rows, in [0, 1]
    scaled      affinely mapped to [-1, 1] so edges can carry negative weight
    reweighted  multiplied by the normalized adjacency entries
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, constant, gather_rows, row_sum
from .graphs import Graph, NormalizedAdjacency

__all__ = [
    "EdgeAttention",
    "edge_attention",
    "symmetric_edge_attention",
    "scale_attention",
    "reweight_adjacency",
    "dense_attention_oracle",
    "attention_to_csv",
]

DENSE_ORACLE_MAX_NODES = 4096

RAW = "raw"
SCALED = "scaled"
REWEIGHTED = "reweighted"


@dataclass
class EdgeAttention:
    """Per-edge attention values aligned to a graph's edge list."""

    graph: Graph
    values: Tensor
    stage: str

    def numpy(self) -> np.ndarray:
        return np.asarray(self.values.value, dtype=np.float64)

    def detach(self) -> "EdgeAttention":
        return EdgeAttention(graph=self.graph, values=self.values.detach(), stage=self.stage)

    @property
    def src(self) -> np.ndarray:
        return self.graph.src

    @property
    def dst(self) -> np.ndarray:
        return self.graph.dst


def edge_attention(q: Tensor, k: Tensor, g: Graph) -> EdgeAttention:
    """Raw attention r_e = <q_src, k_dst> computed per edge.

    Gather by source, gather by destination, Hadamard product, row sum;
    O(E * H) time. With simplex-valued rows the results lie in [0, 1].
    """
    if q.value.shape[1] != k.value.shape[1]:
        raise ValueError("query and key column counts differ")
    if q.value.shape[0] != g.num_nodes or k.value.shape[0] != g.num_nodes:
        raise ValueError("query/key row count must equal node count")
    values = row_sum(gather_rows(q, g.src) * gather_rows(k, g.dst))
    return EdgeAttention(graph=g, values=values, stage=RAW)


def symmetric_edge_attention(q: Tensor, g: Graph) -> EdgeAttention:
    """Symmetric variant r_e = <q_src, q_dst>; r_ij equals r_ji exactly."""
    if q.value.shape[0] != g.num_nodes:
        raise ValueError("query row count must equal node count")
    values = row_sum(gather_rows(q, g.src) * gather_rows(q, g.dst))
    return EdgeAttention(graph=g, values=values, stage=RAW)


def scale_attention(att: EdgeAttention) -> EdgeAttention:
    """Affine map 2r - 1 from [0, 1] to [-1, 1], enabling negative weights."""
    if att.stage != RAW:
        raise ValueError(f"scale_attention expects raw values, got {att.stage!r}")
    return EdgeAttention(graph=att.graph, values=att.values * 2.0 - 1.0, stage=SCALED)


def reweight_adjacency(att: EdgeAttention, adj: NormalizedAdjacency) -> EdgeAttention:
    """Entrywise product with the normalized adjacency weights.

    Non-edges stay zero by construction, so this is the sparse Hadamard
    product of the signed attention with the adjacency.
    """
    if att.stage == REWEIGHTED:
        raise ValueError("attention is already reweighted")
    if att.graph is not adj.graph and not (
        np.array_equal(att.graph.src, adj.graph.src) and np.array_equal(att.graph.dst, adj.graph.dst)
    ):
        raise ValueError("attention and adjacency edge lists differ")
    values = att.values * constant(adj.weights, dtype=att.values.dtype)
    return EdgeAttention(graph=att.graph, values=values, stage=REWEIGHTED)


def dense_attention_oracle(q, k, adj: NormalizedAdjacency) -> np.ndarray:
    """Dense (2 Q K^T - 1) * A-tilde reference; test use only.

    Materializes N x N, so a size guard rejects anything beyond
    ``DENSE_ORACLE_MAX_NODES`` nodes.
    """
    q = q.value if isinstance(q, Tensor) else np.asarray(q, dtype=np.float64)
    k = k.value if isinstance(k, Tensor) else np.asarray(k, dtype=np.float64)
    n = adj.graph.num_nodes
    if n > DENSE_ORACLE_MAX_NODES:
        raise ValueError(f"dense oracle guard exceeded: {n} > {DENSE_ORACLE_MAX_NODES}")
    if n == 0:
        return np.zeros((0, 0))
    scaled = 2.0 * (q @ k.T) - 1.0
    return scaled * adj.to_dense()


def attention_to_csv(att: EdgeAttention, path) -> None:
    """Write the per-edge values as ``src,dst,value`` rows."""
    values = att.numpy()
    with open(path, "w") as fh:
        fh.write("src,dst,value\n")
        for i, j, v in zip(att.src.tolist(), att.dst.tolist(), values.tolist()):
            fh.write(f"{i},{j},{v:.17g}\n")
