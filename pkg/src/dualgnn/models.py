"""Node-classification models: the dual-path attention network and baselines.

The dual-path model embeds node features and raw topology through two
independent stacks of gated attention convolutions and mixes the two class
score matrices only at the output. Baselines cover the classic probes:
feature-only MLP, adjacency-only linear model, two-layer GCN, and a
concatenation analog that embeds features and adjacency with separate
linear maps.
"""

from __future__ import annotations

import numpy as np

from .autodiff import ParamStore, Tensor, constant, dropout, glorot_init, hstack, relu, spmm
from .config import ModelConfig
from .graphs import NormalizedAdjacency
from .layers import AdjacencyRows, AttentionConvLayer, compute_gates

__all__ = [
    "DualPathModel",
    "GCNModel",
    "MLPModel",
    "LINKModel",
    "LINKXModel",
    "build_model",
]


def _binary_aggregate(graph, w: Tensor, rng, p: float, training: bool, dtype) -> Tensor:
    """A @ W for the binary adjacency, as a sparse aggregation of W's rows."""
    unit = constant(np.ones(graph.num_edges, dtype=dtype))
    edges = dropout(unit, p, rng, training)
    return spmm(edges, w, graph.src, graph.dst, graph.num_nodes)


class DualPathModel:
    """Dual-embedding network with signed edge attention and update caching."""

    kind = "dual"

    def __init__(self, cfg: ModelConfig, num_nodes: int, num_features: int,
                 num_classes: int, rng: np.random.Generator, dtype=np.float64):
        self.cfg = cfg
        self.dtype = dtype
        self.params = ParamStore()
        self._cache: dict[tuple[str, int], dict] = {}

        def make_path(name: str, in_dim: int, use_scaling: bool) -> list[AttentionConvLayer]:
            layers = []
            for li in range(cfg.layers):
                lin = in_dim if li == 0 else cfg.hidden_dim
                lout = num_classes if li == cfg.layers - 1 else cfg.hidden_dim
                layers.append(
                    AttentionConvLayer(
                        self.params,
                        prefix=f"{name}.l{li}",
                        in_dim=lin,
                        out_dim=lout,
                        key_dim=cfg.effective_key_dim,
                        rng=rng,
                        dtype=dtype,
                        combine=cfg.combine_vr,
                        alpha_v=cfg.alpha_v,
                        alpha_i=cfg.alpha_i,
                        use_scaling=use_scaling,
                        symmetric=cfg.symmetric_attention,
                        non_linear=cfg.non_linear,
                        bias=cfg.bias,
                        dropout_p=cfg.dropout,
                    )
                )
            return layers

        self.feature_layers = None
        if not cfg.no_feature_path:
            self.feature_layers = make_path("feature", num_features, not cfg.no_feature_scaling)
        self.topology_layers = None
        if not cfg.no_topology_path:
            self.topology_layers = make_path("topology", num_nodes, not cfg.no_topology_scaling)

        self.g_f = self.g_t = None
        if self.feature_layers and self.topology_layers and cfg.combine_ft != 3:
            self.g_f = self.params.add("out.g_f", glorot_init(num_classes, 1, rng, dtype))
            self.g_t = self.params.add("out.g_t", glorot_init(num_classes, 1, rng, dtype))

    @property
    def attention_param_names(self) -> list[str]:
        return [n for n in self.params.names() if n.endswith((".w_q", ".w_k"))]

    def clear_attention_cache(self) -> None:
        self._cache.clear()

    def _run_path(self, name: str, layers, h, adj, rng, training, refresh):
        snapshots = []
        for li, layer in enumerate(layers):
            entry = self._cache.get((name, li))
            cached = None if (refresh or entry is None) else entry["att"]
            h, att, snap = layer.forward(h, adj, rng, training, cached=cached)
            if snap is not None:
                entry = {"att": att.detach(), "pre": snap}
                self._cache[(name, li)] = entry
            snapshots.append(entry["pre"])
        return h, snapshots

    def forward(self, x: Tensor, adj: NormalizedAdjacency, rng: np.random.Generator,
                training: bool = False, refresh_attention: bool = False):
        cfg = self.cfg
        diag = {"attention": {}, "embeddings": {}}
        h_f = h_t = None
        if self.feature_layers is not None:
            h_f, snaps = self._run_path("feature", self.feature_layers, x, adj, rng, training, refresh_attention)
            diag["attention"]["feature"] = snaps
            diag["embeddings"]["feature"] = h_f.value
        if self.topology_layers is not None:
            rows = AdjacencyRows(adj.graph)
            h_t, snaps = self._run_path("topology", self.topology_layers, rows, adj, rng, training, refresh_attention)
            diag["attention"]["topology"] = snaps
            diag["embeddings"]["topology"] = h_t.value

        if h_f is not None and h_t is not None:
            c_f, c_t = compute_gates(h_f, h_t, self.g_f, self.g_t, cfg.combine_ft)
            logits = cfg.alpha_f * (c_f * h_f) + cfg.alpha_t * (c_t * h_t)
        elif h_f is not None:
            logits = cfg.alpha_f * h_f
        elif h_t is not None:
            logits = cfg.alpha_t * h_t
        else:
            raise ValueError("both embedding paths are disabled")
        return logits, diag


class GCNModel:
    """Two-layer graph convolution over the row-normalized adjacency."""

    kind = "gcn"

    def __init__(self, cfg: ModelConfig, num_nodes: int, num_features: int,
                 num_classes: int, rng: np.random.Generator, dtype=np.float64):
        self.dropout_p = cfg.dropout
        self.dtype = dtype
        self.params = ParamStore()
        self.w1 = self.params.add("w1", glorot_init(num_features, cfg.hidden_dim, rng, dtype))
        self.w2 = self.params.add("w2", glorot_init(cfg.hidden_dim, num_classes, rng, dtype))

    def forward(self, x, adj, rng, training=False, refresh_attention=False):
        weights = constant(adj.weights, dtype=self.dtype)
        g = adj.graph
        h = dropout(x, self.dropout_p, rng, training)
        h = relu(spmm(weights, h @ self.w1, g.src, g.dst, g.num_nodes))
        h = dropout(h, self.dropout_p, rng, training)
        logits = spmm(weights, h @ self.w2, g.src, g.dst, g.num_nodes)
        return logits, {}


class MLPModel:
    """Feature-only two-layer perceptron."""

    kind = "mlp"

    def __init__(self, cfg: ModelConfig, num_nodes: int, num_features: int,
                 num_classes: int, rng: np.random.Generator, dtype=np.float64):
        self.dropout_p = cfg.dropout
        self.params = ParamStore()
        self.w1 = self.params.add("w1", glorot_init(num_features, cfg.hidden_dim, rng, dtype))
        self.b1 = self.params.add("b1", np.zeros((1, cfg.hidden_dim), dtype=dtype))
        self.w2 = self.params.add("w2", glorot_init(cfg.hidden_dim, num_classes, rng, dtype))
        self.b2 = self.params.add("b2", np.zeros((1, num_classes), dtype=dtype))

    def forward(self, x, adj, rng, training=False, refresh_attention=False):
        h = dropout(x, self.dropout_p, rng, training)
        h = relu(h @ self.w1 + self.b1)
        h = dropout(h, self.dropout_p, rng, training)
        return h @ self.w2 + self.b2, {}


class LINKModel:
    """Linear classifier on raw binary adjacency rows."""

    kind = "link"

    def __init__(self, cfg: ModelConfig, num_nodes: int, num_features: int,
                 num_classes: int, rng: np.random.Generator, dtype=np.float64):
        self.dtype = dtype
        self.params = ParamStore()
        self.w = self.params.add("w", glorot_init(num_nodes, num_classes, rng, dtype))
        self.b = self.params.add("b", np.zeros((1, num_classes), dtype=dtype))

    def forward(self, x, adj, rng, training=False, refresh_attention=False):
        g = adj.graph
        logits = _binary_aggregate(g, self.w, rng, 0.0, training, self.dtype) + self.b
        return logits, {}


class LINKXModel:
    """Concatenation analog: MLP on features next to a linear map on adjacency."""

    kind = "linkx"

    def __init__(self, cfg: ModelConfig, num_nodes: int, num_features: int,
                 num_classes: int, rng: np.random.Generator, dtype=np.float64):
        self.dropout_p = cfg.dropout
        self.dtype = dtype
        self.params = ParamStore()
        h = cfg.hidden_dim
        self.w_x = self.params.add("w_x", glorot_init(num_features, h, rng, dtype))
        self.w_a = self.params.add("w_a", glorot_init(num_nodes, h, rng, dtype))
        self.w_out = self.params.add("w_out", glorot_init(2 * h, num_classes, rng, dtype))
        self.b = self.params.add("b", np.zeros((1, num_classes), dtype=dtype))

    def forward(self, x, adj, rng, training=False, refresh_attention=False):
        g = adj.graph
        hx = relu(dropout(x, self.dropout_p, rng, training) @ self.w_x)
        ha = _binary_aggregate(g, self.w_a, rng, self.dropout_p, training, self.dtype)
        return hstack(hx, ha) @ self.w_out + self.b, {}


_MODELS = {
    "dual": DualPathModel,
    "gcn": GCNModel,
    "mlp": MLPModel,
    "link": LINKModel,
    "linkx": LINKXModel,
}


def build_model(cfg: ModelConfig, num_nodes: int, num_features: int, num_classes: int,
                rng: np.random.Generator, dtype=np.float64):
    cls = _MODELS[cfg.model]
    return cls(cfg, num_nodes, num_features, num_classes, rng, dtype)
