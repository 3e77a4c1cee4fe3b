"""Command-line entry points: generate, train, eval, distortion, symmetry-demo.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime error.
All JSON outputs use lowercase snake_case keys and are byte-identical across
repeated invocations with the same config and seed; volatile wall time goes
to stderr only.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import struct
import sys
import time
from dataclasses import asdict

import numpy as np

from .graph import (Graph, connected_caveman, constant_features, grid_graph,
                    load_edge_list, load_feature_csv, load_node_labels,
                    split_pairs, write_edge_list, write_node_labels, TASKS)
from .metric import (AnchorFamily, DisconnectedGraphError, all_pairs,
                     bourgain_embed, measure_distortion, sample_anchor_family)
from .model import (GCNConfig, PGNNConfig, PGNNParams, gcn_forward,
                    init_gcn_params, init_pgnn_params, make_distance_input,
                    pgnn_forward)
from .tensor import Tape
from .train import (SETTINGS, TrainConfig, _forward_graph, _score_pairs,
                    roc_auc, run_experiment)

CHECKPOINT_MAGIC = b"PGNNCKPT"
CHECKPOINT_VERSION = 1

_MISSING = object()


class ConfigError(ValueError):
    """Configuration rejected before any computation."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ----------------------------------------------------------------------
# config handling


def _check_unknown(section: dict, allowed: set[str], path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown config key: {path}{key}")


def _get(section: dict, key: str, path: str, kinds, default=_MISSING):
    if key not in section:
        if default is _MISSING:
            raise ConfigError(f"missing config key: {path}{key}")
        return default
    value = section[key]
    if kinds is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"config key {path}{key} must be a boolean")
        return value
    if kinds is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key {path}{key} must be an integer")
        return value
    if kinds is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {path}{key} must be a number")
        return float(value)
    if kinds is str:
        if not isinstance(value, str):
            raise ConfigError(f"config key {path}{key} must be a string")
        return value
    if kinds is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"config key {path}{key} must be an object")
        return value
    raise AssertionError(kinds)


def _parse_dataset(section: dict):
    kind = _get(section, "kind", "dataset.", str)
    if kind == "grid":
        _check_unknown(section, {"kind", "rows", "cols"}, "dataset.")
        rows = _get(section, "rows", "dataset.", int)
        cols = _get(section, "cols", "dataset.", int)
        resolved = {"kind": "grid", "rows": rows, "cols": cols}
        build = lambda: grid_graph(rows, cols)
        name = f"grid-{rows}x{cols}"
    elif kind == "communities":
        _check_unknown(section, {"kind", "n_comm", "comm_size", "rewire_prob", "seed"},
                       "dataset.")
        n_comm = _get(section, "n_comm", "dataset.", int)
        comm_size = _get(section, "comm_size", "dataset.", int)
        rewire_prob = _get(section, "rewire_prob", "dataset.", float, 0.01)
        seed = _get(section, "seed", "dataset.", int, 0)
        resolved = {"kind": "communities", "n_comm": n_comm, "comm_size": comm_size,
                    "rewire_prob": rewire_prob, "seed": seed}
        build = lambda: connected_caveman(n_comm, comm_size, rewire_prob, seed)
        name = f"communities-{n_comm}x{comm_size}"
    elif kind == "edge_list":
        _check_unknown(section, {"kind", "path", "labels_path", "features_path"},
                       "dataset.")
        path = _get(section, "path", "dataset.", str)
        labels_path = _get(section, "labels_path", "dataset.", str, None)
        features_path = _get(section, "features_path", "dataset.", str, None)
        resolved = {"kind": "edge_list", "path": path,
                    "labels_path": labels_path, "features_path": features_path}

        def build():
            g = load_edge_list(path)
            labels = load_node_labels(labels_path, g.n) if labels_path else None
            feats = load_feature_csv(features_path, g.n) if features_path else None
            return Graph(n=g.n, adjacency=g.adjacency, features=feats, labels=labels)

        name = os.path.splitext(os.path.basename(path))[0]
    else:
        raise ConfigError(f"config key dataset.kind has unsupported value {kind!r}")
    return build, name, resolved


def _parse_model(section: dict):
    kind = _get(section, "kind", "model.", str)
    if kind == "pgnn":
        _check_unknown(section, {"kind", "layers", "variant", "anchor_c",
                                 "message_dim", "closest_node_agg",
                                 "resample_anchors"}, "model.")
        cfg = PGNNConfig(
            layers=_get(section, "layers", "model.", int, 2),
            anchor_c=_get(section, "anchor_c", "model.", float, 1.0),
            variant=_get(section, "variant", "model.", str, "exact"),
            message_dim=_get(section, "message_dim", "model.", int, 32),
            closest_node_agg=_get(section, "closest_node_agg", "model.", bool, True),
            resample_anchors=_get(section, "resample_anchors", "model.", bool, True),
        )
        resolved = {"kind": "pgnn", **asdict(cfg)}
    elif kind == "gcn":
        _check_unknown(section, {"kind", "layers", "message_dim"}, "model.")
        cfg = GCNConfig(layers=_get(section, "layers", "model.", int, 2),
                        message_dim=_get(section, "message_dim", "model.", int, 32))
        resolved = {"kind": "gcn", **asdict(cfg)}
    else:
        raise ConfigError(f"config key model.kind has unsupported value {kind!r}")
    return cfg, resolved


def _parse_run_config(raw: dict, seed_override: int | None,
                      repeats_override: int | None):
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _check_unknown(raw, {"dataset", "task", "setting", "split", "model", "train"}, "")
    build, name, ds_resolved = _parse_dataset(_get(raw, "dataset", "", dict))
    task = _get(raw, "task", "", str)
    if task not in TASKS:
        raise ConfigError(f"config key task has unsupported value {task!r}")
    setting = _get(raw, "setting", "", str, "inductive")
    if setting not in SETTINGS:
        raise ConfigError(f"config key setting has unsupported value {setting!r}")

    split_sec = _get(raw, "split", "", dict, {})
    _check_unknown(split_sec, {"val_frac", "test_frac", "seed"}, "split.")
    val_frac = _get(split_sec, "val_frac", "split.", float, 0.1)
    test_frac = _get(split_sec, "test_frac", "split.", float, 0.1)
    split_seed = _get(split_sec, "seed", "split.", int, 0)

    model_cfg, model_resolved = _parse_model(_get(raw, "model", "", dict))

    train_sec = _get(raw, "train", "", dict, {})
    _check_unknown(train_sec, {"epochs", "lr", "beta1", "beta2", "eps",
                               "seed", "repeats"}, "train.")
    train_kwargs = dict(
        epochs=_get(train_sec, "epochs", "train.", int, 200),
        lr=_get(train_sec, "lr", "train.", float, 0.01),
        beta1=_get(train_sec, "beta1", "train.", float, 0.9),
        beta2=_get(train_sec, "beta2", "train.", float, 0.999),
        eps=_get(train_sec, "eps", "train.", float, 1e-8),
        seed=_get(train_sec, "seed", "train.", int, 0),
        repeats=_get(train_sec, "repeats", "train.", int, 10),
        setting=setting,
    )
    if seed_override is not None:
        train_kwargs["seed"] = seed_override
    if repeats_override is not None:
        train_kwargs["repeats"] = repeats_override
    try:
        train_cfg = TrainConfig(**train_kwargs)
        if val_frac < 0 or test_frac < 0 or val_frac + test_frac >= 1:
            raise ValueError(f"bad split fractions val={val_frac} test={test_frac}")
        if split_seed < 0:
            raise ValueError(f"split.seed must be >= 0, got {split_seed}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    resolved = {
        "dataset": ds_resolved,
        "task": task,
        "setting": setting,
        "split": {"val_frac": val_frac, "test_frac": test_frac, "seed": split_seed},
        "model": model_resolved,
        "train": {k: train_kwargs[k] for k in
                  ("epochs", "lr", "beta1", "beta2", "eps", "seed", "repeats")},
    }
    return build, name, task, (val_frac, test_frac, split_seed), model_cfg, train_cfg, resolved


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


# ----------------------------------------------------------------------
# output helpers


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj


def _write_json(path: str, payload: dict) -> None:
    text = json.dumps(_sanitize(payload), indent=2) + "\n"
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ----------------------------------------------------------------------
# checkpoints


def save_checkpoint(path: str, header: dict, matrices: list[np.ndarray]) -> None:
    """Binary dump: magic, version, JSON header with shapes, row-major float64."""
    header = dict(header)
    header["matrices"] = [{"name": name, "rows": int(a.shape[0]),
                           "cols": int(a.shape[1])}
                          for name, a in matrices]
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for _, a in matrices:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    os.replace(tmp, path)


def load_checkpoint(path: str) -> tuple[dict, list[np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        matrices = []
        for spec in header["matrices"]:
            count = spec["rows"] * spec["cols"]
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise ValueError(f"{path}: truncated checkpoint")
            matrices.append(np.frombuffer(raw, dtype="<f8").reshape(
                spec["rows"], spec["cols"]).copy())
    return header, matrices


# ----------------------------------------------------------------------
# commands


def _cmd_generate(args) -> int:
    if args.dataset == "grid":
        g = grid_graph(args.rows, args.cols)
        write_edge_list(args.out, g, f"grid {args.rows}x{args.cols}")
    else:
        g = connected_caveman(args.n_comm, args.comm_size, args.rewire_prob,
                              args.seed)
        header = (f"communities n_comm={args.n_comm} comm_size={args.comm_size} "
                  f"rewire_prob={args.rewire_prob} seed={args.seed}")
        write_edge_list(args.out, g, header)
        labels_path = os.path.splitext(args.out)[0] + ".labels"
        write_node_labels(labels_path, g, header)
    return 0


def _checkpoint_header(task, name, setting, model_resolved, best) -> dict:
    return {
        "task": task,
        "dataset": name,
        "setting": setting,
        "model_config": model_resolved,
        "anchor_seed": best.anchor_seed,
        "best_epoch": best.best_epoch,
        "repeat": best.repeat,
    }


def _named_matrices(model_resolved: dict, arrays) -> list:
    if model_resolved["kind"] == "pgnn":
        names = []
        for layer in range(len(arrays) // 2):
            names.append(f"layer{layer}.w_msg")
            names.append(f"layer{layer}.w")
    else:
        names = [f"layer{layer}.w" for layer in range(len(arrays))]
    return list(zip(names, arrays))


def _cmd_train(args) -> int:
    raw = _load_config_file(args.config)
    (build, name, task, split_args, model_cfg, train_cfg,
     resolved) = _parse_run_config(raw, args.seed, args.repeats)
    g = build()
    split = split_pairs(g, task, *split_args)
    t0 = time.perf_counter()
    metrics = run_experiment(g, split, model_cfg, train_cfg, dataset=name)
    elapsed = time.perf_counter() - t0
    payload = metrics.to_dict()
    payload["wall_time_s"] = None
    payload["config"] = resolved
    _write_json(args.out, payload)
    best = max(metrics.per_repeat, key=lambda r: (r.val_auc, -r.repeat))
    ckpt_path = args.checkpoint or os.path.splitext(args.out)[0] + ".ckpt"
    save_checkpoint(ckpt_path,
                    _checkpoint_header(task, name, train_cfg.setting,
                                       resolved["model"], best),
                    _named_matrices(resolved["model"], best.snapshot))
    print(f"wall_time_s={elapsed:.3f}", file=sys.stderr)
    return 0


def _cmd_eval(args) -> int:
    raw = _load_config_file(args.config)
    (build, name, task, split_args, _model_cfg, train_cfg,
     resolved) = _parse_run_config(raw, args.seed, args.repeats)
    header, arrays = load_checkpoint(args.checkpoint)
    model_resolved = header["model_config"]
    g = build()
    split = split_pairs(g, task, *split_args)
    fg = _forward_graph(g, split, train_cfg.setting)
    tape = Tape()
    if model_resolved["kind"] == "pgnn":
        model_cfg = PGNNConfig(**{k: v for k, v in model_resolved.items()
                                  if k != "kind"})
        dm = make_distance_input(fg, model_cfg)
        fam = sample_anchor_family(fg.n, model_cfg.anchor_c, header["anchor_seed"])
        emb = pgnn_forward(tape, fg, dm, fam,
                           PGNNParams.from_list(arrays), model_cfg)
        z = emb.z.data
        model_name = f"pgnn-{model_cfg.variant[0]}-{model_cfg.layers}l"
    else:
        model_cfg = GCNConfig(**{k: v for k, v in model_resolved.items()
                                 if k != "kind"})
        z = gcn_forward(tape, fg, arrays, model_cfg.layers).data
        model_name = f"gcn-{model_cfg.layers}l"
    val_scores, val_labels = _score_pairs(z, split.val_pos, split.val_neg)
    test_scores, test_labels = _score_pairs(z, split.test_pos, split.test_neg)
    payload = {
        "task": task,
        "dataset": name,
        "model": model_name,
        "setting": train_cfg.setting,
        "val_auc": roc_auc(val_scores, val_labels),
        "test_auc": roc_auc(test_scores, test_labels),
        "config": resolved,
    }
    _write_json(args.out, payload)
    return 0


def _component_sizes(g: Graph) -> list[int]:
    seen = [False] * g.n
    sizes = []
    for start in range(g.n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        size = 0
        while stack:
            u = stack.pop()
            size += 1
            for v in g.adjacency[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        sizes.append(size)
    return sizes


def _cmd_distortion(args) -> int:
    if args.dataset == "grid":
        g = grid_graph(args.rows, args.cols)
        n_label = f"grid-{args.rows}x{args.cols}"
    elif args.dataset == "communities":
        g = connected_caveman(args.n_comm, args.comm_size, args.rewire_prob,
                              args.seed)
        n_label = f"communities-{args.n_comm}x{args.comm_size}"
    else:
        g = load_edge_list(args.path)
        n_label = os.path.splitext(os.path.basename(args.path))[0]
    sizes = _component_sizes(g)
    if len(sizes) > 1:
        raise DisconnectedGraphError(
            f"{n_label}: graph has {len(sizes)} components with sizes {sizes}")
    p = math.inf if args.p == "inf" else int(args.p)
    dm = all_pairs(g)
    per = []
    k = None
    for t in range(args.repeats):
        fam = sample_anchor_family(g.n, args.anchor_c, args.seed + t)
        k = fam.k
        emb = bourgain_embed(dm, fam)
        expansion, contraction, distortion = measure_distortion(dm, emb, p)
        per.append({"expansion": expansion, "contraction": contraction,
                    "distortion": distortion})
    payload = {
        "n": g.n,
        "c": args.anchor_c,
        "p": "inf" if p == math.inf else p,
        "k": k,
        "repeats": args.repeats,
        "per_repeat": per,
        "expansion": _stats([r["expansion"] for r in per]),
        "contraction": _stats([r["contraction"] for r in per]),
        "distortion": _stats([r["distortion"] for r in per]),
    }
    if args.out:
        _write_json(args.out, payload)
    else:
        print(json.dumps(_sanitize(payload), indent=2))
    return 0


def _stats(values: list[float]) -> dict:
    if any(math.isinf(v) for v in values):
        return {"mean": math.inf, "max": math.inf}
    return {"mean": float(np.mean(values)), "max": float(np.max(values))}


def symmetry_report() -> dict:
    """Positional dichotomy on the 5-node path with constant features."""
    g = constant_features(Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)]))
    gcn_w = init_gcn_params(1, GCNConfig(layers=2, message_dim=8),
                            np.random.default_rng(0))
    h = gcn_forward(Tape(), g, gcn_w, 2).data
    gcn_gap = float(np.linalg.norm(h[0] - h[4]))
    cfg = PGNNConfig(layers=2, anchor_c=1.0, variant="exact", message_dim=8,
                     closest_node_agg=True, resample_anchors=False)
    params = init_pgnn_params(1, cfg, np.random.default_rng(0))
    fam = AnchorFamily(sets=((0,),), provenance=((1, 1),), c=1.0, seed=0)
    emb = pgnn_forward(Tape(), g, all_pairs(g), fam, params, cfg)
    z = emb.z.data
    pgnn_gap = float(np.linalg.norm(z[0] - z[4]))
    return {
        "gcn_gap": gcn_gap,
        "pgnn_gap": pgnn_gap,
        "positional_contrast": bool(gcn_gap == 0.0 and pgnn_gap > 1e-6),
    }


def _cmd_symmetry_demo(args) -> int:
    payload = symmetry_report()
    if args.out:
        _write_json(args.out, payload)
    print(json.dumps(_sanitize(payload), indent=2))
    return 0 if payload["positional_contrast"] else 2


# ----------------------------------------------------------------------
# argument parsing


def _add_dataset_subparsers(sub):
    grid = sub.add_parser("grid", help="2-d lattice")
    grid.add_argument("rows", type=int)
    grid.add_argument("cols", type=int)
    comm = sub.add_parser("communities", help="ring of rewired cliques")
    comm.add_argument("n_comm", type=int)
    comm.add_argument("comm_size", type=int)
    comm.add_argument("rewire_prob", type=float)
    edge = sub.add_parser("edge-list", help="load from an edge-list file")
    edge.add_argument("path")
    return grid, comm, edge


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pgnn",
                     description="Position-aware GNN experiments on synthetic graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    gen_parent = sub.add_parser("generate", help="write synthetic datasets to disk")
    gen_sub = gen_parent.add_subparsers(dest="dataset", required=True)
    g_grid = gen_sub.add_parser("grid", help="2-d lattice")
    g_grid.add_argument("rows", type=int)
    g_grid.add_argument("cols", type=int)
    g_comm = gen_sub.add_parser("communities", help="ring of rewired cliques")
    g_comm.add_argument("n_comm", type=int)
    g_comm.add_argument("comm_size", type=int)
    g_comm.add_argument("rewire_prob", type=float)
    g_comm.add_argument("--seed", type=int, default=0)
    for sp in (g_grid, g_comm):
        sp.add_argument("--out", required=True, help="edge-list output path")
        sp.set_defaults(func=_cmd_generate)

    tr = sub.add_parser("train", help="run a training experiment from a JSON config")
    tr.add_argument("--config", required=True)
    tr.add_argument("--seed", type=int, default=None, help="override train.seed")
    tr.add_argument("--repeats", type=int, default=None, help="override train.repeats")
    tr.add_argument("--out", default="metrics.json", help="metrics JSON path")
    tr.add_argument("--checkpoint", default=None,
                    help="checkpoint path (default: metrics path with .ckpt)")
    tr.set_defaults(func=_cmd_train)

    ev = sub.add_parser("eval", help="re-evaluate a checkpoint against a config")
    ev.add_argument("--config", required=True)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--seed", type=int, default=None)
    ev.add_argument("--repeats", type=int, default=None)
    ev.add_argument("--out", default="eval.json")
    ev.set_defaults(func=_cmd_eval)

    dist = sub.add_parser("distortion",
                          help="anchor-distance embedding distortion statistics")
    dist_sub = dist.add_subparsers(dest="dataset", required=True)
    d_grid, d_comm, d_edge = _add_dataset_subparsers(dist_sub)
    for sp in (d_grid, d_comm, d_edge):
        sp.add_argument("--anchor-c", type=float, default=1.0, dest="anchor_c")
        sp.add_argument("--p", choices=["1", "2", "inf"], default="1")
        sp.add_argument("--repeats", type=int, default=5)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)
        sp.set_defaults(func=_cmd_distortion)

    sym = sub.add_parser("symmetry-demo",
                         help="positional dichotomy on a 5-node path")
    sym.add_argument("--out", default=None)
    sym.set_defaults(func=_cmd_symmetry_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
