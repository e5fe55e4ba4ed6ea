"""Gated self-attention graph convolution.

One layer combines an attention-reweighted aggregation branch with a gated
linear residual branch:

    out = alpha_v * c_v * relu(spmm(att, h) @ W_v) + alpha_i * c_i * (h @ W_i)

where ``att`` is the signed, adjacency-reweighted edge attention and the
per-node gate pair (c_v, c_i) comes from :func:`compute_gates`.

The topology path feeds binary adjacency rows instead of a dense matrix;
:class:`AdjacencyRows` stands in for that input and projections against it
run as sparse aggregations over parameter rows, never materializing N x N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import (
    EdgeAttention,
    edge_attention,
    reweight_adjacency,
    scale_attention,
    symmetric_edge_attention,
)
from .autodiff import (
    ParamStore,
    Tensor,
    constant,
    dropout,
    glorot_init,
    hstack,
    column,
    relu,
    row_softmax,
    sigmoid,
    spmm,
)
from .graphs import Graph, NormalizedAdjacency

__all__ = ["AdjacencyRows", "compute_gates", "AttentionConvLayer"]


@dataclass(frozen=True)
class AdjacencyRows:
    """Marker input: each node's feature vector is its binary adjacency row."""

    graph: Graph

    @property
    def dim(self) -> int:
        return self.graph.num_nodes


def compute_gates(branch_a: Tensor, branch_b: Tensor, g_a, g_b, kind: int):
    """Per-node mixing pair (c_a, c_b) for two same-shape branches.

    kind 1: scores sigmoid(branch @ g), then a two-way softmax per node.
    kind 2: linear scores branch @ g, then the two-way softmax.
    kind 3: no gating; both coefficients fixed at one.

    Under kinds 1 and 2 the pair sums to one per node.
    """
    if kind == 3:
        ones = constant(np.ones((branch_a.value.shape[0], 1), dtype=branch_a.dtype))
        return ones, ones
    score_a = branch_a @ g_a
    score_b = branch_b @ g_b
    if kind == 1:
        score_a = sigmoid(score_a)
        score_b = sigmoid(score_b)
    elif kind != 2:
        raise ValueError(f"unknown gate kind: {kind}")
    both = row_softmax(hstack(score_a, score_b))
    return column(both, 0), column(both, 1)


class AttentionConvLayer:
    """One gated attention convolution over a fixed graph."""

    def __init__(
        self,
        store: ParamStore,
        prefix: str,
        in_dim: int,
        out_dim: int,
        key_dim: int,
        rng: np.random.Generator,
        dtype=np.float64,
        combine: int = 2,
        alpha_v: float = 1.0,
        alpha_i: float = 1.0,
        use_scaling: bool = True,
        symmetric: bool = False,
        non_linear: bool = False,
        bias: bool = False,
        dropout_p: float = 0.0,
    ):
        self.prefix = prefix
        self.combine = combine
        self.alpha_v = alpha_v
        self.alpha_i = alpha_i
        self.use_scaling = use_scaling
        self.symmetric = symmetric
        self.non_linear = non_linear
        self.dropout_p = dropout_p
        self.dtype = dtype

        self.w_q = store.add(f"{prefix}.w_q", glorot_init(in_dim, key_dim, rng, dtype))
        self.w_k = None
        if not symmetric:
            self.w_k = store.add(f"{prefix}.w_k", glorot_init(in_dim, key_dim, rng, dtype))
        self.w_v = store.add(f"{prefix}.w_v", glorot_init(in_dim, out_dim, rng, dtype))
        self.w_i = store.add(f"{prefix}.w_i", glorot_init(in_dim, out_dim, rng, dtype))
        self.b_i = None
        if bias:
            self.b_i = store.add(f"{prefix}.b_i", np.zeros((1, out_dim), dtype=dtype))
        self.g_v = self.g_i = None
        if combine != 3:
            self.g_v = store.add(f"{prefix}.g_v", glorot_init(out_dim, 1, rng, dtype))
            self.g_i = store.add(f"{prefix}.g_i", glorot_init(out_dim, 1, rng, dtype))

    def _projector(self, h, rng, training):
        """Shared dropped-out input; adjacency rows drop edge entries instead."""
        if isinstance(h, AdjacencyRows):
            g = h.graph
            unit = constant(np.ones(g.num_edges, dtype=self.dtype))
            edges = dropout(unit, self.dropout_p, rng, training)
            return lambda w: spmm(edges, w, g.src, g.dst, g.num_nodes)
        dropped = dropout(h, self.dropout_p, rng, training)
        return lambda w: dropped @ w

    def _attention_from(self, project, adj: NormalizedAdjacency):
        q = row_softmax(project(self.w_q))
        if self.symmetric:
            att = symmetric_edge_attention(q, adj.graph)
        else:
            k = row_softmax(project(self.w_k))
            att = edge_attention(q, k, adj.graph)
        if self.use_scaling:
            att = scale_attention(att)
        return reweight_adjacency(att, adj), att

    def build_attention(self, h, adj: NormalizedAdjacency, rng, training: bool):
        """Fresh per-edge attention from the current input; returns the
        reweighted values used for aggregation plus the pre-reweight snapshot."""
        return self._attention_from(self._projector(h, rng, training), adj)

    def forward(
        self,
        h,
        adj: NormalizedAdjacency,
        rng: np.random.Generator,
        training: bool,
        cached: EdgeAttention | None = None,
    ):
        """Apply the layer. ``cached`` reuses earlier attention as constants
        (no gradient reaches the query/key projections). One dropout sample
        of the input is shared by every projection in the layer."""
        project = self._projector(h, rng, training)
        snapshot = None
        if cached is None:
            att, pre = self._attention_from(project, adj)
            snapshot = pre.detach()
        else:
            att = cached

        g = adj.graph
        value = relu(spmm(att.values, project(self.w_v), g.src, g.dst, g.num_nodes))
        residual = project(self.w_i)
        if self.b_i is not None:
            residual = residual + self.b_i
        if self.non_linear:
            residual = relu(residual)

        c_v, c_i = compute_gates(value, residual, self.g_v, self.g_i, self.combine)
        out = self.alpha_v * (c_v * value) + self.alpha_i * (c_i * residual)
        return out, att, snapshot
