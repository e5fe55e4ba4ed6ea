"""Estimator-style wrappers around the training loop.

These follow the scikit-learn conventions (hyperparameters stored verbatim
in ``__init__``, ``get_params``/``set_params``, fitted attributes with a
trailing underscore) so the models drop into ecosystem tooling such as
``clone`` and parameter grids. Training is transductive: ``fit`` consumes a
:class:`~dualgnn.datasets.GraphData` bundle plus a node split, and
``predict`` returns labels for any node subset of that same graph.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .config import ModelConfig, TrainConfig
from .datasets import GraphData, Split, make_splits
from .training import evaluate, train

__all__ = [
    "DualGNNClassifier",
    "GCNClassifier",
    "MLPClassifier",
    "LinkClassifier",
    "LinkxClassifier",
]


def _check_data(data) -> GraphData:
    if not isinstance(data, GraphData):
        raise TypeError("expected a GraphData bundle; build one via load_graph or generate_synthetic")
    return data


def _resolve_split(data: GraphData, split) -> Split:
    if isinstance(split, Split):
        split.validate(data.num_nodes)
        return split
    if isinstance(split, int):
        try:
            return data.splits[split]
        except IndexError:
            raise IndexError(f"dataset has {len(data.splits)} splits, requested index {split}") from None
    if split is None:
        if data.splits:
            return data.splits[0]
        return make_splits(data.num_nodes, seed=0)[0]
    raise TypeError(f"split must be a Split, an index, or None, got {type(split)!r}")


class _NodeClassifierBase(BaseEstimator):
    """Shared transductive fit/predict machinery."""

    _model_kind = ""

    def _model_config(self) -> ModelConfig:
        raise NotImplementedError

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            update_interval=getattr(self, "update_interval", 1),
            seed=self.seed,
            precision=self.precision,
        )

    def fit(self, data, split=None):
        data = _check_data(data)
        split = _resolve_split(data, split)
        self.report_ = train(self._model_config(), self._train_config(), data, split)
        best = self.report_.epochs[self.report_.selected_epoch - 1]
        self.best_epoch_ = self.report_.selected_epoch
        self.val_accuracy_ = best.val_acc
        self.test_accuracy_ = best.test_acc
        self.labels_ = data.labels
        self.classes_ = np.arange(data.num_classes)
        self.n_features_in_ = data.num_features
        self.split_ = split
        self.logits_ = self.report_.logits
        return self

    def _require_fitted(self):
        if not hasattr(self, "logits_"):
            raise RuntimeError("estimator is not fitted; call fit(data, split) first")

    def predict(self, nodes=None) -> np.ndarray:
        self._require_fitted()
        logits = self.logits_ if nodes is None else self.logits_[np.asarray(nodes, dtype=np.int64)]
        return np.argmax(logits, axis=1)

    def predict_proba(self, nodes=None) -> np.ndarray:
        self._require_fitted()
        logits = self.logits_ if nodes is None else self.logits_[np.asarray(nodes, dtype=np.int64)]
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)

    def score(self, nodes=None) -> float:
        """Accuracy over ``nodes`` (defaults to the fitted split's test set)."""
        self._require_fitted()
        if nodes is None:
            nodes = self.split_.test
        return evaluate(self.logits_, self.labels_, nodes)


class DualGNNClassifier(_NodeClassifierBase):
    """Dual-path attention network over features and adjacency rows."""

    _model_kind = "dual"

    def __init__(self, hidden_dim=64, key_dim=None, layers=2, combine_vr=2, combine_ft=2,
                 alpha_v=1.0, alpha_i=1.0, alpha_f=1.0, alpha_t=1.0, non_linear=False,
                 bias=False, self_loops=False, dropout=0.0, no_feature_path=False,
                 no_topology_path=False, no_feature_scaling=False, no_topology_scaling=False,
                 symmetric_attention=False, epochs=200, learning_rate=0.01,
                 weight_decay=5e-4, update_interval=10, seed=0, precision=64):
        self.hidden_dim = hidden_dim
        self.key_dim = key_dim
        self.layers = layers
        self.combine_vr = combine_vr
        self.combine_ft = combine_ft
        self.alpha_v = alpha_v
        self.alpha_i = alpha_i
        self.alpha_f = alpha_f
        self.alpha_t = alpha_t
        self.non_linear = non_linear
        self.bias = bias
        self.self_loops = self_loops
        self.dropout = dropout
        self.no_feature_path = no_feature_path
        self.no_topology_path = no_topology_path
        self.no_feature_scaling = no_feature_scaling
        self.no_topology_scaling = no_topology_scaling
        self.symmetric_attention = symmetric_attention
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.update_interval = update_interval
        self.seed = seed
        self.precision = precision

    def _model_config(self) -> ModelConfig:
        return ModelConfig(
            model="dual",
            layers=self.layers,
            hidden_dim=self.hidden_dim,
            key_dim=self.key_dim,
            alpha_v=self.alpha_v,
            alpha_i=self.alpha_i,
            alpha_f=self.alpha_f,
            alpha_t=self.alpha_t,
            combine_vr=self.combine_vr,
            combine_ft=self.combine_ft,
            dropout=self.dropout,
            non_linear=self.non_linear,
            bias=self.bias,
            self_loops=self.self_loops,
            no_feature_path=self.no_feature_path,
            no_topology_path=self.no_topology_path,
            no_feature_scaling=self.no_feature_scaling,
            no_topology_scaling=self.no_topology_scaling,
            symmetric_attention=self.symmetric_attention,
        )


class _SimpleClassifier(_NodeClassifierBase):
    def __init__(self, hidden_dim=64, dropout=0.0, epochs=200, learning_rate=0.01,
                 weight_decay=5e-4, seed=0, precision=64):
        self.hidden_dim = hidden_dim
        self.dropout = dropout
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.seed = seed
        self.precision = precision

    def _model_config(self) -> ModelConfig:
        return ModelConfig(model=self._model_kind, hidden_dim=self.hidden_dim, dropout=self.dropout)


class GCNClassifier(_SimpleClassifier):
    """Two-layer graph convolution baseline."""

    _model_kind = "gcn"


class MLPClassifier(_SimpleClassifier):
    """Feature-only perceptron baseline."""

    _model_kind = "mlp"


class LinkClassifier(_SimpleClassifier):
    """Linear model on raw adjacency rows."""

    _model_kind = "link"


class LinkxClassifier(_SimpleClassifier):
    """Feature-MLP next to adjacency-linear, concatenated."""

    _model_kind = "linkx"
