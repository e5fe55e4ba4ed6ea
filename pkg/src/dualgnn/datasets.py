"""Dataset directory I/O, node splits, and the bundled graph record.

A dataset directory is plain text:

    edges.tsv        one "src<TAB>dst" pair per line, 0-indexed
    features.csv     N lines of F comma-separated floats
    labels.txt       N lines, one integer class per line
    splits/split_<k>.json   {"train": [...], "val": [...], "test": [...]}

``edges.tsv`` may list each undirected edge once; the loader symmetrizes
and deduplicates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graphs import Graph

__all__ = ["Split", "GraphData", "load_graph", "save_dataset", "make_splits"]


@dataclass(frozen=True)
class Split:
    """Disjoint train/validation/test node index sets."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "val", "test"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            object.__setattr__(self, name, arr)
        seen = np.concatenate([self.train, self.val, self.test])
        if len(np.unique(seen)) != len(seen):
            raise ValueError("train/val/test sets overlap")

    def validate(self, num_nodes: int) -> None:
        for name in ("train", "val", "test"):
            arr = getattr(self, name)
            if arr.size and (arr.min() < 0 or arr.max() >= num_nodes):
                raise ValueError(f"{name} split index out of range")


@dataclass(frozen=True)
class GraphData:
    """Graph, node features, labels, and the available splits."""

    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    splits: tuple[Split, ...]

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        n = self.graph.num_nodes
        if x.ndim != 2 or x.shape[0] != n:
            raise ValueError("feature matrix row count must equal node count")
        if not np.isfinite(x).all():
            raise ValueError("non-finite feature values")
        if y.shape != (n,):
            raise ValueError("label vector length must equal node count")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise ValueError("label out of range")
        for s in self.splits:
            s.validate(n)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        x.setflags(write=False)
        y.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def num_features(self) -> int:
        return int(self.features.shape[1])


def _require(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing dataset file: {path}")
    return path


def load_graph(dataset_dir) -> GraphData:
    """Load a dataset directory into a consistent :class:`GraphData` bundle."""
    root = Path(dataset_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")

    features = np.loadtxt(_require(root / "features.csv"), delimiter=",", ndmin=2, dtype=np.float64)
    labels = np.loadtxt(_require(root / "labels.txt"), ndmin=1, dtype=np.int64)
    if features.shape[0] != labels.shape[0]:
        raise ValueError(
            f"row-count mismatch: {features.shape[0]} feature rows vs {labels.shape[0]} labels"
        )
    num_nodes = features.shape[0]

    edges_path = _require(root / "edges.tsv")
    pairs = []
    with edges_path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{edges_path}:{lineno}: expected 'src<TAB>dst'")
            pairs.append((int(parts[0]), int(parts[1])))
    graph = Graph.from_edges(num_nodes, pairs, symmetrize=True)

    splits = []
    split_dir = root / "splits"
    if split_dir.is_dir():
        for path in sorted(split_dir.glob("split_*.json")):
            with path.open() as fh:
                blob = json.load(fh)
            splits.append(Split(train=blob["train"], val=blob["val"], test=blob["test"]))

    num_classes = int(labels.max()) + 1 if labels.size else 0
    return GraphData(
        graph=graph,
        features=features,
        labels=labels,
        num_classes=num_classes,
        splits=tuple(splits),
    )


def save_dataset(dataset_dir, data: GraphData) -> None:
    """Write a bundle back out in the dataset directory format.

    Each undirected edge is listed once (the smaller endpoint first);
    reloading recovers the identical symmetrized edge set.
    """
    root = Path(dataset_dir)
    root.mkdir(parents=True, exist_ok=True)

    g = data.graph
    keep = g.src <= g.dst
    with (root / "edges.tsv").open("w") as fh:
        for i, j in zip(g.src[keep].tolist(), g.dst[keep].tolist()):
            fh.write(f"{i}\t{j}\n")
    np.savetxt(root / "features.csv", data.features, delimiter=",", fmt="%.17g")
    np.savetxt(root / "labels.txt", data.labels, fmt="%d")

    split_dir = root / "splits"
    split_dir.mkdir(exist_ok=True)
    for k, split in enumerate(data.splits):
        blob = {
            "train": split.train.tolist(),
            "val": split.val.tolist(),
            "test": split.test.tolist(),
        }
        (split_dir / f"split_{k}.json").write_text(json.dumps(blob))


def make_splits(n: int, ratios=(0.48, 0.32, 0.20), num_splits: int = 1, seed: int = 0) -> tuple[Split, ...]:
    """Random node partitions by (train, val, test) ratios.

    Rounding residue goes to the test set. Deterministic per seed.
    """
    train_r, val_r, test_r = ratios
    if abs(train_r + val_r + test_r - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    rng = np.random.default_rng(seed)
    n_train = int(np.floor(train_r * n))
    n_val = int(np.floor(val_r * n))
    splits = []
    for _ in range(num_splits):
        perm = rng.permutation(n)
        splits.append(
            Split(
                train=perm[:n_train],
                val=perm[n_train : n_train + n_val],
                test=perm[n_train + n_val :],
            )
        )
    return tuple(splits)
