"""Experiment command line.

Subcommands::

    train         run every requested split/seed, write reports + summary.json
    ablate        compare the full model against path/scaling/symmetry variants
    noise-sweep   accuracy under feature noise and edge add/remove noise
    khop          hop-distance homophily and embedding distances from a checkpoint
    info          dataset card (nodes, edges, features, classes, homophily)
    kernel-bench  wall-time scaling of the edge attention and aggregation kernels

Exit codes: 0 success, 1 runtime failure, 2 usage or config error. Output
files are written atomically (temp file + rename) and reruns with the same
seed and configuration are byte-identical in single-worker mode, except for
the per-run report files, which record wall time.
"""

from __future__ import annotations

import argparse
import json
import os
import resource
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attention import dense_attention_oracle, edge_attention
from .autodiff import constant, row_softmax, spmm
from .config import ModelConfig, TrainConfig, configs_from_mapping, parse_config_file
from .datasets import GraphData, Split, load_graph
from .graphs import Graph, row_normalize
from .metrics import edge_homophily, graph_asymmetry, k_hop_embedding_distance, k_hop_homophily
from .synthetic import generate_synthetic, perturb_edges, perturb_features
from .training import TrainReport, aggregate_runs, load_checkpoint, save_checkpoint, train

__all__ = ["main"]


class UsageError(Exception):
    """Bad flags, bad config, or missing input files."""


# -- output helpers -----------------------------------------------------------


def _write_text(path: Path, text: str) -> None:
    tmp = path.parent / (path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, blob) -> None:
    _write_text(path, json.dumps(blob, indent=2, sort_keys=True) + "\n")


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.17g}"


# -- configuration and data loading --------------------------------------------


def _load_configs(args) -> tuple[ModelConfig, TrainConfig]:
    mapping: dict[str, str] = {}
    for flag in ("model_config", "train_config"):
        path = getattr(args, flag, None)
        if path is None:
            continue
        if not Path(path).is_file():
            raise UsageError(f"missing config path: {path}")
        try:
            mapping.update(parse_config_file(path))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    try:
        model_cfg, train_cfg = configs_from_mapping(mapping)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    if getattr(args, "precision", None):
        train_cfg = train_cfg.with_overrides(precision=int(args.precision))
    return model_cfg, train_cfg


_SYNTH_KEYS = {
    "n": int,
    "classes": int,
    "avg_degree": float,
    "edge_hom": float,
    "feature_signal": float,
    "features": int,
    "seed": int,
}

_SYNTH_DEFAULTS = {
    "n": 1000,
    "classes": 5,
    "avg_degree": 10.0,
    "edge_hom": 0.25,
    "feature_signal": 1.0,
    "features": 32,
    "seed": 0,
}


def _parse_synthetic(spec: str) -> dict:
    recipe = dict(_SYNTH_DEFAULTS)
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise UsageError(f"synthetic recipe entries must be key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip().lower()
        if key not in _SYNTH_KEYS:
            raise UsageError(f"unknown synthetic key: {key}")
        recipe[key] = _SYNTH_KEYS[key](value)
    return recipe


def _generate_from_recipe(recipe: dict, seed_offset: int = 0) -> GraphData:
    return generate_synthetic(
        n=recipe["n"],
        classes=recipe["classes"],
        avg_degree=recipe["avg_degree"],
        edge_hom=recipe["edge_hom"],
        feature_signal=recipe["feature_signal"],
        seed=recipe["seed"] + seed_offset,
        num_features=recipe["features"],
    )


def _load_data(args) -> tuple[GraphData | None, dict | None, dict]:
    """Returns (dataset bundle or None, synthetic recipe or None, source echo)."""
    dataset = getattr(args, "dataset", None)
    synthetic = getattr(args, "synthetic", None)
    if (dataset is None) == (synthetic is None):
        raise UsageError("exactly one of --dataset and --synthetic is required")
    if dataset is not None:
        try:
            data = load_graph(dataset)
        except (FileNotFoundError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        return data, None, {"dataset": str(dataset)}
    recipe = _parse_synthetic(synthetic)
    return None, recipe, {"synthetic": recipe}


# -- run orchestration ----------------------------------------------------------


@dataclass
class RunSpec:
    run_id: str
    split_index: int
    model_cfg: ModelConfig
    train_cfg: TrainConfig
    data: GraphData
    split: Split


def _execute_run(spec: RunSpec) -> TrainReport:
    return train(spec.model_cfg, spec.train_cfg, spec.data, spec.split)


def _build_runs(args, model_cfg: ModelConfig, train_cfg: TrainConfig,
                data: GraphData | None, recipe: dict | None) -> list[RunSpec]:
    seeds = getattr(args, "seeds", 1)
    runs: list[RunSpec] = []
    if data is not None:
        if not data.splits:
            raise UsageError("dataset provides no splits; add splits/split_<k>.json files")
        which = getattr(args, "splits", "all")
        if which == "all":
            indices = range(len(data.splits))
        else:
            try:
                idx = int(which)
                data.splits[idx]
            except (ValueError, IndexError) as exc:
                raise UsageError(f"bad --splits value: {which}") from exc
            indices = [idx]
        for rep in range(seeds):
            for si in indices:
                cfg = train_cfg.with_overrides(seed=train_cfg.seed + rep)
                suffix = f"_seed{cfg.seed}" if seeds > 1 else ""
                runs.append(RunSpec(f"split{si}{suffix}", si, model_cfg, cfg, data, data.splits[si]))
    else:
        for rep in range(seeds):
            bundle = _generate_from_recipe(recipe, seed_offset=rep)
            cfg = train_cfg.with_overrides(seed=train_cfg.seed + rep)
            runs.append(RunSpec(f"seed{cfg.seed}", 0, model_cfg, cfg, bundle, bundle.splits[0]))
    return runs


def _write_run_outputs(out: Path, spec: RunSpec, report: TrainReport, save_attention: bool) -> None:
    _write_json(out / f"report_{spec.run_id}.json", report.to_dict(include_wall_time=True))
    _write_text(out / f"curves_{spec.run_id}.csv", report.curves_csv())
    if report.embeddings:
        tmp = out / f"checkpoint_{spec.run_id}.tmp.npz"
        save_checkpoint(tmp, report, spec.data.graph)
        os.replace(tmp, out / f"checkpoint_{spec.run_id}.npz")
    if save_attention and report.attention:
        g = spec.data.graph
        for path_name, layers in report.attention.items():
            for li, values in enumerate(layers):
                lines = ["src,dst,value"]
                for i, j, v in zip(g.src.tolist(), g.dst.tolist(), values.tolist()):
                    lines.append(f"{i},{j},{v:.17g}")
                _write_text(out / f"attention_{spec.run_id}_{path_name}_l{li}.csv", "\n".join(lines) + "\n")


def _run_all(runs: list[RunSpec], out: Path, workers: int, save_attention: bool = False) -> dict[str, TrainReport]:
    results: dict[str, TrainReport] = {}
    if workers <= 1:
        for spec in runs:
            report = _execute_run(spec)
            _write_run_outputs(out, spec, report, save_attention)
            results[spec.run_id] = report
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_execute_run, spec): spec for spec in runs}
            for fut in as_completed(futures):
                spec = futures[fut]
                report = fut.result()
                _write_run_outputs(out, spec, report, save_attention)
                results[spec.run_id] = report
    return {spec.run_id: results[spec.run_id] for spec in runs}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands -------------------------------------------------------------------


def cmd_train(args) -> int:
    model_cfg, train_cfg = _load_configs(args)
    data, recipe, source = _load_data(args)
    out = _out_dir(args)
    runs = _build_runs(args, model_cfg, train_cfg, data, recipe)
    results = _run_all(runs, out, args.workers, save_attention=args.save_attention)

    accs = [r.test_accuracy for r in results.values()]
    mean, std = aggregate_runs(accs)
    summary = {
        "command": "train",
        "source": source,
        "model": model_cfg.model,
        "model_config": model_cfg.to_mapping(),
        "train_config": train_cfg.to_mapping(),
        "runs": [
            {
                "id": spec.run_id,
                "split": spec.split_index,
                "seed": report.seed,
                "selected_epoch": report.selected_epoch,
                "val_accuracy": report.val_accuracy,
                "test_accuracy": report.test_accuracy,
            }
            for spec, report in zip(runs, results.values())
        ],
        "mean_test_accuracy": mean,
        "std_test_accuracy": std,
    }
    _write_json(out / "summary.json", summary)
    print(f"{model_cfg.model}: test accuracy {100 * mean:.2f} +- {100 * std:.2f} over {len(accs)} run(s)")
    return 0


_ABLATION_VARIANTS = [
    ("full", {}),
    ("no_feature_path", {"no_feature_path": True}),
    ("no_topology_path", {"no_topology_path": True}),
    ("no_feature_scaling", {"no_feature_scaling": True}),
    ("no_topology_scaling", {"no_topology_scaling": True}),
    ("symmetric", {"symmetric_attention": True}),
]


def _first_layer_asymmetry(report: TrainReport, graph: Graph) -> dict[str, float | None]:
    out: dict[str, float | None] = {"feature": None, "topology": None}
    for path_name in ("feature", "topology"):
        layers = report.attention.get(path_name)
        if layers:
            shim = type("Att", (), {"graph": graph, "values": layers[0]})()
            out[path_name] = graph_asymmetry(shim)
    return out


def cmd_ablate(args) -> int:
    model_cfg, train_cfg = _load_configs(args)
    data, recipe, source = _load_data(args)
    out = _out_dir(args)

    rows = []
    summary_variants = {}
    for name, overrides in _ABLATION_VARIANTS:
        try:
            variant_cfg = model_cfg.with_overrides(**overrides)
        except ValueError as exc:
            raise UsageError(f"variant {name}: {exc}") from exc
        variant_out = out / name
        variant_out.mkdir(exist_ok=True)
        runs = _build_runs(args, variant_cfg, train_cfg, data, recipe)
        results = _run_all(runs, variant_out, args.workers)
        mean, std = aggregate_runs([r.test_accuracy for r in results.values()])

        asym_f, asym_t = [], []
        for spec, report in zip(runs, results.values()):
            asym = _first_layer_asymmetry(report, spec.data.graph)
            if asym["feature"] is not None:
                asym_f.append(asym["feature"])
            if asym["topology"] is not None:
                asym_t.append(asym["topology"])
        mean_f = float(np.mean(asym_f)) if asym_f else None
        mean_t = float(np.mean(asym_t)) if asym_t else None
        both = [v for v in (mean_f, mean_t) if v is not None]
        mean_all = float(np.mean(both)) if both else None

        rows.append((name, mean, std, mean_f, mean_t, mean_all))
        summary_variants[name] = {
            "mean_test_accuracy": mean,
            "std_test_accuracy": std,
            "asym_feature": mean_f,
            "asym_topology": mean_t,
            "asym_mean": mean_all,
        }
        print(f"{name}: {100 * mean:.2f} +- {100 * std:.2f}")

    lines = ["variant,mean,std,asym_feature,asym_topology,asym_mean"]
    for name, mean, std, mean_f, mean_t, mean_all in rows:
        lines.append(
            f"{name},{_fmt(mean)},{_fmt(std)},{_fmt(mean_f)},{_fmt(mean_t)},{_fmt(mean_all)}"
        )
    _write_text(out / "ablation.csv", "\n".join(lines) + "\n")
    _write_json(
        out / "summary.json",
        {
            "command": "ablate",
            "source": source,
            "model_config": model_cfg.to_mapping(),
            "train_config": train_cfg.to_mapping(),
            "variants": summary_variants,
        },
    )
    return 0


def _noise_levels(raw: str) -> list[float]:
    levels = [float(part) for part in raw.split(",") if part.strip()]
    if not levels:
        raise UsageError("empty noise level list")
    return levels


def cmd_noise_sweep(args) -> int:
    model_cfg, train_cfg = _load_configs(args)
    data, recipe, source = _load_data(args)
    out = _out_dir(args)
    feature_levels = _noise_levels(args.feature_levels)
    edge_levels = _noise_levels(args.edge_levels)
    models = [m.strip() for m in args.models.split(",") if m.strip()]

    grid: list[tuple[str, float]] = [("feature", lv) for lv in feature_levels]
    grid += [("edge_add", lv) for lv in edge_levels]
    grid += [("edge_remove", lv) for lv in edge_levels]
    kind_salt = {"feature": 1, "edge_add": 2, "edge_remove": 3}

    lines = ["noise_kind,level,model,mean,std"]
    records = []
    for kind, level in grid:
        for model_name in models:
            cfg = model_cfg.with_overrides(model=model_name)
            accs = []
            for rep in range(args.seeds):
                bundle = data if data is not None else _generate_from_recipe(recipe, seed_offset=rep)
                if not bundle.splits:
                    raise UsageError("no splits available for the noise sweep")
                split_index = args.split_index if data is not None else 0
                if split_index >= len(bundle.splits):
                    raise UsageError(f"--split-index {split_index} out of range")
                noise_seed = train_cfg.seed + 7919 * rep + kind_salt[kind]
                noisy = _apply_noise(bundle, kind, level, noise_seed)
                run_cfg = train_cfg.with_overrides(seed=train_cfg.seed + rep)
                report = train(cfg, run_cfg, noisy, noisy.splits[split_index])
                accs.append(report.test_accuracy)
            mean, std = aggregate_runs(accs)
            records.append({"noise_kind": kind, "level": level, "model": model_name, "mean": mean, "std": std})
            lines.append(f"{kind},{_fmt(level)},{model_name},{_fmt(mean)},{_fmt(std)}")
            print(f"{kind} level={level} {model_name}: {100 * mean:.2f} +- {100 * std:.2f}")

    _write_text(out / "noise_sweep.csv", "\n".join(lines) + "\n")
    _write_json(out / "summary.json", {"command": "noise-sweep", "source": source, "grid": records})
    return 0


def _apply_noise(data: GraphData, kind: str, level: float, seed: int) -> GraphData:
    if level == 0.0:
        return data
    if kind == "feature":
        return GraphData(
            graph=data.graph,
            features=perturb_features(data.features, level, seed=seed),
            labels=data.labels,
            num_classes=data.num_classes,
            splits=data.splits,
        )
    mode = "add" if kind == "edge_add" else "remove"
    return GraphData(
        graph=perturb_edges(data.graph, level, mode, seed=seed),
        features=data.features,
        labels=data.labels,
        num_classes=data.num_classes,
        splits=data.splits,
    )


def cmd_khop(args) -> int:
    if not Path(args.checkpoint).is_file():
        raise UsageError(f"missing checkpoint: {args.checkpoint}")
    data, recipe, source = _load_data(args)
    bundle = data if data is not None else _generate_from_recipe(recipe)
    blob = load_checkpoint(args.checkpoint)
    out = _out_dir(args)

    g = bundle.graph
    emb_f = blob.get("embedding_feature")
    emb_t = blob.get("embedding_topology")
    lines = ["k,homophily,feature_distance,topology_distance"]
    rows = []
    for k in range(1, args.k_max + 1):
        hom = k_hop_homophily(g, bundle.labels, k)
        dist_f = k_hop_embedding_distance(g, emb_f, k) if emb_f is not None else None
        dist_t = k_hop_embedding_distance(g, emb_t, k) if emb_t is not None else None
        rows.append({"k": k, "homophily": hom, "feature_distance": dist_f, "topology_distance": dist_t})
        lines.append(f"{k},{_fmt(hom)},{_fmt(dist_f)},{_fmt(dist_t)}")
    _write_text(out / "khop.csv", "\n".join(lines) + "\n")
    _write_json(out / "summary.json", {"command": "khop", "source": source, "rows": rows})
    print("\n".join(lines))
    return 0


def cmd_info(args) -> int:
    data, recipe, source = _load_data(args)
    bundle = data if data is not None else _generate_from_recipe(recipe)
    g = bundle.graph
    hom = edge_homophily(g, bundle.labels) if g.num_edges else None
    card = {
        "nodes": g.num_nodes,
        "edges": g.num_undirected_edges,
        "features": bundle.num_features,
        "classes": bundle.num_classes,
        "edge_homophily": hom,
    }
    for key, value in card.items():
        shown = f"{value:.4g}" if isinstance(value, float) else value
        print(f"{key}: {shown}")
    if args.out:
        out = _out_dir(args)
        lines = ["metric,k,value"]
        for key, value in card.items():
            lines.append(f"{key},,{_fmt(float(value)) if value is not None else ''}")
        _write_text(out / "metrics.csv", "\n".join(lines) + "\n")
    return 0


# -- kernel benchmark -------------------------------------------------------------


def _time_call(fn, min_total: float = 0.05) -> float:
    fn()  # warm up
    reps = 1
    while True:
        start = time.perf_counter()
        for _ in range(reps):
            fn()
        elapsed = time.perf_counter() - start
        if elapsed >= min_total:
            return elapsed / reps
        reps = max(reps * 2, int(reps * min_total / max(elapsed, 1e-9)))


def _loglog_slope(xs, ys) -> float | None:
    pairs = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(pairs) < 2:
        return None
    logx = np.log([p[0] for p in pairs])
    logy = np.log([p[1] for p in pairs])
    slope, _ = np.polyfit(logx, logy, 1)
    return float(slope)


def bench_sparse_kernels(edge_counts, hidden: int, avg_degree: float = 10.0, seed: int = 0) -> dict:
    """Time edge attention and aggregation at fixed degree and width."""
    rng = np.random.default_rng(seed)
    att_times, spmm_times, realized = [], [], []
    for target_e in edge_counts:
        n = max(int(round(target_e / avg_degree)), 2)
        m = int(round(avg_degree * n / 2))
        pairs = set()
        while len(pairs) < m:
            i, j = rng.integers(n, size=2)
            if i != j:
                pairs.add((int(min(i, j)), int(max(i, j))))
        g = Graph.from_edges(n, sorted(pairs), symmetrize=True)
        realized.append(g.num_edges)
        q = row_softmax(constant(rng.standard_normal((n, hidden))))
        k = row_softmax(constant(rng.standard_normal((n, hidden))))
        h = constant(rng.standard_normal((n, hidden)))
        weights = constant(rng.standard_normal(g.num_edges))
        att_times.append(_time_call(lambda: edge_attention(q, k, g)))
        spmm_times.append(_time_call(lambda: spmm(weights, h, g.src, g.dst, g.num_nodes)))
    return {
        "edges": realized,
        "attention_seconds": att_times,
        "attention_slope": _loglog_slope(realized, att_times),
        "spmm_seconds": spmm_times,
        "spmm_slope": _loglog_slope(realized, spmm_times),
    }


def bench_dense_oracle(node_counts, hidden: int, avg_degree: float = 10.0, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    times = []
    for n in node_counts:
        m = int(round(avg_degree * n / 2))
        pairs = set()
        while len(pairs) < m:
            i, j = rng.integers(n, size=2)
            if i != j:
                pairs.add((int(min(i, j)), int(max(i, j))))
        g = Graph.from_edges(n, sorted(pairs), symmetrize=True)
        adj = row_normalize(g)
        q = row_softmax(constant(rng.standard_normal((n, hidden)))).value
        k = row_softmax(constant(rng.standard_normal((n, hidden)))).value
        times.append(_time_call(lambda: dense_attention_oracle(q, k, adj)))
    return {"nodes": list(node_counts), "seconds": times, "slope": _loglog_slope(node_counts, times)}


def cmd_kernel_bench(args) -> int:
    out = _out_dir(args)
    edge_counts = [int(float(v)) for v in args.edges.split(",")]
    node_counts = [int(v) for v in args.dense_nodes.split(",")]
    sparse = bench_sparse_kernels(edge_counts, hidden=args.hidden)
    dense = bench_dense_oracle(node_counts, hidden=args.hidden)
    peak_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
    report = {"sparse": sparse, "dense": dense, "hidden": args.hidden, "peak_rss_mb": peak_mb}
    _write_json(out / "kernel_bench.json", report)
    print(f"edge attention slope vs E: {sparse['attention_slope']}")
    print(f"aggregation slope vs E:   {sparse['spmm_slope']}")
    print(f"dense oracle slope vs N:  {dense['slope']}")
    print(f"peak RSS: {peak_mb:.1f} MB")
    return 0


# -- argument parsing ---------------------------------------------------------------


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="dataset directory (edges.tsv, features.csv, labels.txt, splits/)")
    p.add_argument("--synthetic", help="synthetic recipe, e.g. n=1000,classes=5,edge_hom=0.15")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model-config", help="key = value model config file")
    p.add_argument("--train-config", help="key = value training config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seeds", type=int, default=1, help="number of seed repetitions")
    p.add_argument("--splits", default="all", help="'all' or a split index")
    p.add_argument("--precision", choices=["32", "64"], help="float width override")
    p.add_argument("--workers", type=int, default=1, help="parallel run workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualgnn", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on all requested splits")
    _add_data_flags(p)
    _add_run_flags(p)
    p.add_argument("--save-attention", action="store_true", help="dump per-edge attention CSVs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="run the ablation variant battery")
    _add_data_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("noise-sweep", help="accuracy under feature/edge noise")
    _add_data_flags(p)
    _add_run_flags(p)
    p.add_argument("--feature-levels", default="0,0.1,0.2,0.3")
    p.add_argument("--edge-levels", default="0,0.1,0.2,0.3")
    p.add_argument("--models", default="dual,gcn,linkx")
    p.add_argument("--split-index", type=int, default=0)
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("khop", help="hop metrics from a training checkpoint")
    _add_data_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_khop)

    p = sub.add_parser("info", help="print the dataset card")
    _add_data_flags(p)
    p.add_argument("--out", help="also write metrics.csv here")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("kernel-bench", help="kernel scaling measurements")
    p.add_argument("--edges", default="10000,40000,160000")
    p.add_argument("--dense-nodes", default="512,1024,2048")
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kernel_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
