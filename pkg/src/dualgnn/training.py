"""Full-graph training loop with interval-based attention refresh.

Every epoch runs forward, masked cross-entropy, backward, and one Adam step.
The dual-path model recomputes its per-edge attention only on epoch 1 and
whenever ``epoch % U == 0``; between refreshes the cached values act as
constants, so the query/key projections receive no gradient there.

Model selection follows validation accuracy, breaking ties by lower
validation loss and then by earlier epoch. Runs are deterministic given
(seed, config, data) in single-worker mode.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import ParamStore, Tensor, constant, masked_cross_entropy
from .config import ModelConfig, TrainConfig
from .datasets import GraphData, Split
from .graphs import row_normalize
from .models import build_model

__all__ = [
    "Adam",
    "DivergenceError",
    "EpochRecord",
    "TrainReport",
    "evaluate",
    "train",
    "aggregate_runs",
    "save_checkpoint",
    "load_checkpoint",
]


class DivergenceError(RuntimeError):
    """Raised when the training loss stops being finite."""


class Adam:
    """Adam with bias correction and decoupled-style weight decay.

    Parameters whose gradient buffer is unpopulated are skipped entirely,
    so cached-attention epochs leave the query/key projections untouched.
    """

    def __init__(self, store: ParamStore, lr: float, betas=(0.9, 0.999),
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.store = store
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, p in self.store.items():
            g = p.grad
            if g is None:
                continue
            m = self._m.get(name)
            if m is None:
                m = np.zeros_like(p.value)
                self._m[name] = m
                self._v[name] = np.zeros_like(p.value)
            v = self._v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1 ** self.t)
            v_hat = v / (1 - b2 ** self.t)
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            if self.weight_decay:
                p.value -= self.lr * self.weight_decay * p.value


def evaluate(logits, labels, mask) -> float:
    """Fraction of masked nodes whose argmax class (ties to the lowest
    index) matches the label."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("evaluate over an empty mask")
    values = logits.value if isinstance(logits, Tensor) else np.asarray(logits)
    pred = np.argmax(values[mask], axis=1)
    return float(np.mean(pred == np.asarray(labels)[mask]))


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    train_acc: float
    val_acc: float
    test_acc: float
    qk_grad_max: float


@dataclass
class TrainReport:
    """Per-epoch trajectory plus the selected checkpoint's test accuracy."""

    epochs: list[EpochRecord]
    selected_epoch: int
    val_accuracy: float
    test_accuracy: float
    wall_time_s: float
    seed: int
    model_config: dict
    train_config: dict
    embeddings: dict = field(default_factory=dict, repr=False)
    attention: dict = field(default_factory=dict, repr=False)
    logits: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_wall_time: bool = True) -> dict:
        blob = {
            "selected_epoch": self.selected_epoch,
            "val_accuracy": self.val_accuracy,
            "test_accuracy": self.test_accuracy,
            "seed": self.seed,
            "model_config": self.model_config,
            "train_config": self.train_config,
            "epochs": [
                {
                    "epoch": r.epoch,
                    "train_loss": r.train_loss,
                    "val_loss": r.val_loss,
                    "train_acc": r.train_acc,
                    "val_acc": r.val_acc,
                    "test_acc": r.test_acc,
                }
                for r in self.epochs
            ],
        }
        if include_wall_time:
            blob["wall_time_s"] = self.wall_time_s
        return blob

    def curves_csv(self) -> str:
        lines = ["epoch,train_loss,val_loss,val_acc,test_acc"]
        for r in self.epochs:
            lines.append(f"{r.epoch},{r.train_loss:.17g},{r.val_loss:.17g},{r.val_acc:.17g},{r.test_acc:.17g}")
        return "\n".join(lines) + "\n"


def train(model_cfg: ModelConfig, train_cfg: TrainConfig, data: GraphData, split: Split) -> TrainReport:
    """Run the training loop on one split and return the full report."""
    dtype = train_cfg.dtype
    rng = np.random.default_rng(train_cfg.seed)
    adj = row_normalize(data.graph, add_self_loops=model_cfg.self_loops)
    x = constant(data.features.astype(dtype))
    y = data.labels

    model = build_model(model_cfg, data.num_nodes, data.num_features, data.num_classes, rng, dtype)
    adam = Adam(
        model.params,
        lr=train_cfg.learning_rate,
        betas=train_cfg.adam_betas,
        eps=train_cfg.adam_eps,
        weight_decay=train_cfg.weight_decay,
    )
    qk_names = getattr(model, "attention_param_names", [])

    records: list[EpochRecord] = []
    best = None  # (val_acc, -val_loss) comparison handled explicitly
    best_logits = None
    best_embeddings: dict = {}
    best_attention: dict = {}
    started = time.perf_counter()

    for epoch in range(1, train_cfg.epochs + 1):
        refresh = epoch == 1 or epoch % train_cfg.update_interval == 0
        model.params.zero_grad()
        logits, _ = model.forward(x, adj, rng, training=True, refresh_attention=refresh)
        loss = masked_cross_entropy(logits, y, split.train)
        train_loss = loss.item()
        if not np.isfinite(train_loss):
            raise DivergenceError(f"non-finite training loss at epoch {epoch}")
        loss.backward()
        qk_grad_max = 0.0
        for name in qk_names:
            g = model.params[name].grad
            if g is not None:
                qk_grad_max = max(qk_grad_max, float(np.max(np.abs(g))))
        adam.step()

        eval_logits, diag = model.forward(x, adj, rng, training=False)
        val_loss = masked_cross_entropy(eval_logits, y, split.val).item() if split.val.size else float("nan")
        rec = EpochRecord(
            epoch=epoch,
            train_loss=train_loss,
            val_loss=val_loss,
            train_acc=evaluate(eval_logits, y, split.train),
            val_acc=evaluate(eval_logits, y, split.val) if split.val.size else 0.0,
            test_acc=evaluate(eval_logits, y, split.test) if split.test.size else 0.0,
            qk_grad_max=qk_grad_max,
        )
        records.append(rec)

        better = (
            best is None
            or rec.val_acc > best.val_acc
            or (rec.val_acc == best.val_acc and rec.val_loss < best.val_loss)
        )
        if better:
            best = rec
            best_logits = eval_logits.value.copy()
            best_embeddings = {
                path: emb.copy() for path, emb in diag.get("embeddings", {}).items()
            }
            best_attention = {
                path: [(att.numpy().copy()) for att in snaps]
                for path, snaps in diag.get("attention", {}).items()
            }

    return TrainReport(
        epochs=records,
        selected_epoch=best.epoch,
        val_accuracy=best.val_acc,
        test_accuracy=best.test_acc,
        wall_time_s=time.perf_counter() - started,
        seed=train_cfg.seed,
        model_config=model_cfg.to_mapping(),
        train_config=train_cfg.to_mapping(),
        embeddings=best_embeddings,
        attention=best_attention,
        logits=best_logits,
    )


def aggregate_runs(values) -> tuple[float, float]:
    """Sample mean and (n-1)-normalized standard deviation; n=1 gives 0."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no runs to aggregate")
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def save_checkpoint(path, report: TrainReport, graph) -> None:
    """Persist selected-epoch embeddings and attention as named arrays."""
    payload: dict[str, np.ndarray] = {
        "edges_src": graph.src,
        "edges_dst": graph.dst,
        "meta": np.frombuffer(
            json.dumps(
                {
                    "selected_epoch": report.selected_epoch,
                    "seed": report.seed,
                    "model_config": report.model_config,
                    "train_config": report.train_config,
                }
            ).encode(),
            dtype=np.uint8,
        ),
    }
    for path_name, emb in report.embeddings.items():
        payload[f"embedding_{path_name}"] = emb
    for path_name, layers in report.attention.items():
        for li, values in enumerate(layers):
            payload[f"attention_{path_name}_l{li}"] = values
    np.savez(path, **payload)


def load_checkpoint(path) -> dict:
    with np.load(path) as blob:
        out = {key: blob[key] for key in blob.files}
    if "meta" in out:
        out["meta"] = json.loads(bytes(out["meta"].tobytes()).decode())
    return out
