"""Dual-embedding graph network with signed edge attention.

Node classification for graphs whose edges often connect different classes:
features and raw topology are embedded through two independent attention
convolution stacks whose edge weights may go negative, then mixed per node
at the output. Includes MLP/LINK/GCN baselines, graph heterophily metrics,
synthetic generators, and an experiment CLI (``dualgnn``).
"""

from .attention import (
    EdgeAttention,
    dense_attention_oracle,
    edge_attention,
    reweight_adjacency,
    scale_attention,
    symmetric_edge_attention,
)
from .autodiff import ParamStore, Tensor, glorot_init
from .config import ModelConfig, TrainConfig, parse_config_file
from .datasets import GraphData, Split, load_graph, make_splits, save_dataset
from .estimators import (
    DualGNNClassifier,
    GCNClassifier,
    LinkClassifier,
    MLPClassifier,
)
from .graphs import Graph, NormalizedAdjacency, row_normalize
from .metrics import (
    edge_homophily,
    graph_asymmetry,
    k_hop_embedding_distance,
    k_hop_homophily,
    k_hop_neighbors,
)
from .synthetic import generate_synthetic, perturb_edges, perturb_features
from .training import TrainReport, aggregate_runs, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "EdgeAttention",
    "dense_attention_oracle",
    "edge_attention",
    "reweight_adjacency",
    "scale_attention",
    "symmetric_edge_attention",
    "ParamStore",
    "Tensor",
    "glorot_init",
    "ModelConfig",
    "TrainConfig",
    "parse_config_file",
    "GraphData",
    "Split",
    "load_graph",
    "make_splits",
    "save_dataset",
    "DualGNNClassifier",
    "GCNClassifier",
    "LinkClassifier",
    "MLPClassifier",
    "Graph",
    "NormalizedAdjacency",
    "row_normalize",
    "edge_homophily",
    "graph_asymmetry",
    "k_hop_embedding_distance",
    "k_hop_homophily",
    "k_hop_neighbors",
    "generate_synthetic",
    "perturb_edges",
    "perturb_features",
    "TrainReport",
    "aggregate_runs",
    "evaluate",
    "train",
]
