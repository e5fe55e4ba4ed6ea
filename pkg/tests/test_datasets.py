import json

import numpy as np
import pytest

from dualgnn.datasets import GraphData, Split, load_graph, make_splits, save_dataset
from dualgnn.graphs import Graph


def write_dataset(root, edges, features, labels, splits=None):
    root.mkdir(parents=True, exist_ok=True)
    with (root / "edges.tsv").open("w") as fh:
        for i, j in edges:
            fh.write(f"{i}\t{j}\n")
    np.savetxt(root / "features.csv", np.asarray(features, dtype=float), delimiter=",")
    np.savetxt(root / "labels.txt", np.asarray(labels, dtype=int), fmt="%d")
    if splits:
        (root / "splits").mkdir()
        for k, blob in enumerate(splits):
            (root / "splits" / f"split_{k}.json").write_text(json.dumps(blob))


def test_load_symmetrizes_single_direction(tmp_path):
    write_dataset(tmp_path / "d", [(0, 1)], np.eye(3), [0, 1, 0])
    data = load_graph(tmp_path / "d")
    assert data.graph.num_edges == 2
    assert data.graph.is_symmetric()
    assert data.num_classes == 2


def test_load_reads_splits(tmp_path):
    splits = [{"train": [0], "val": [1], "test": [2]}]
    write_dataset(tmp_path / "d", [(0, 1), (1, 2)], np.eye(3), [0, 1, 1], splits)
    data = load_graph(tmp_path / "d")
    assert len(data.splits) == 1
    assert data.splits[0].test.tolist() == [2]


def test_row_count_mismatch(tmp_path):
    root = tmp_path / "d"
    write_dataset(root, [(0, 1)], np.eye(4), [0, 1, 0, 1])
    (root / "labels.txt").write_text("0\n1\n0\n1\n0\n")
    with pytest.raises(ValueError, match="row-count mismatch"):
        load_graph(root)


def test_missing_file(tmp_path):
    root = tmp_path / "d"
    write_dataset(root, [(0, 1)], np.eye(2), [0, 1])
    (root / "edges.tsv").unlink()
    with pytest.raises(FileNotFoundError):
        load_graph(root)


def test_edge_index_out_of_range(tmp_path):
    write_dataset(tmp_path / "d", [(0, 9)], np.eye(3), [0, 1, 0])
    with pytest.raises(ValueError, match="out of range"):
        load_graph(tmp_path / "d")


def test_save_then_load_keeps_edge_set(tmp_path):
    rng = np.random.default_rng(3)
    pairs = [(i, j) for i in range(12) for j in range(i + 1, 12) if rng.random() < 0.3]
    g = Graph.from_edges(12, pairs, symmetrize=True)
    data = GraphData(
        graph=g,
        features=rng.standard_normal((12, 4)),
        labels=rng.integers(0, 3, size=12),
        num_classes=3,
        splits=make_splits(12, num_splits=2, seed=0),
    )
    save_dataset(tmp_path / "round", data)
    reloaded = load_graph(tmp_path / "round")
    assert np.array_equal(reloaded.graph.src, g.src)
    assert np.array_equal(reloaded.graph.dst, g.dst)
    assert len(reloaded.splits) == 2
    assert np.array_equal(reloaded.splits[1].train, data.splits[1].train)


def test_make_splits_sizes():
    splits = make_splits(100, (0.48, 0.32, 0.20), num_splits=3, seed=1)
    for s in splits:
        assert (len(s.train), len(s.val), len(s.test)) == (48, 32, 20)
        assert len(set(s.train) | set(s.val) | set(s.test)) == 100


def test_make_splits_all_train():
    (s,) = make_splits(10, (1.0, 0.0, 0.0), seed=2)
    assert len(s.train) == 10 and len(s.val) == 0 and len(s.test) == 0


def test_make_splits_deterministic():
    a = make_splits(50, num_splits=2, seed=9)
    b = make_splits(50, num_splits=2, seed=9)
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.train, sb.train)
        assert np.array_equal(sa.test, sb.test)


def test_make_splits_rejects_bad_ratios():
    with pytest.raises(ValueError, match="sum to 1"):
        make_splits(10, (0.5, 0.2, 0.2))


def test_split_overlap_rejected():
    with pytest.raises(ValueError, match="overlap"):
        Split(train=[0, 1], val=[1], test=[2])


def test_bundle_validates_labels():
    g = Graph.from_edges(3, [(0, 1)], symmetrize=True)
    with pytest.raises(ValueError, match="label out of range"):
        GraphData(graph=g, features=np.eye(3), labels=[0, 1, 7], num_classes=2, splits=())
