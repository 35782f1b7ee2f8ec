"""Batch entry points: train, evaluate, cluster, and export.

All outputs are CSV tables under a run directory, plus a JSON manifest that
pins the config, seed, and metric summary of a run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import maddpg, runio
from .clustering import cluster_users
from .config import (ConfigError, SimConfig, config_from_dict, config_hash,
                     config_to_dict, apply_overrides, place_users,
                     replace_fields)

# Stride between attempted layout seeds when an evaluation layout must
# reproduce the training cluster sizes.
LAYOUT_SEED_STRIDE = 1_000_003
LAYOUT_MATCH_ATTEMPTS = 100


def _build_config(args) -> SimConfig:
    doc = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
    doc = apply_overrides(doc, args.set or [])
    if getattr(args, "mode", None):
        doc["mode"] = args.mode
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    if getattr(args, "episodes", None) is not None:
        doc.setdefault("train", {})["episodes"] = args.episodes
    return config_from_dict(doc)


def _run_id(cfg: SimConfig) -> str:
    return f"{cfg.mode.lower()}-seed{cfg.seed}-{config_hash(cfg)[:8]}"


def cmd_train(args) -> int:
    cfg = _build_config(args)
    run_dir = runio.ensure_dir(args.out or os.path.join("runs", _run_id(cfg)))
    progress = None
    if not args.quiet:
        def progress(s):
            if s.episode % 50 == 0 or s.episode == cfg.train.episodes - 1:
                print(f"episode {s.episode}: avg_cum_reward={s.avg_cum_reward:.2f} "
                      f"fst={s.fst_mbits:.1f} Mb fairness={s.avg_fairness:.3f}")
    result = maddpg.train(cfg, run_dir=run_dir, progress=progress)

    runio.write_csv(os.path.join(run_dir, "metrics.csv"), runio.METRICS_HEADER,
                    runio.metrics_rows(result.stats))
    env_names = [f"d{i + 1}" for i in range(cfg.m_comm_uavs)] \
        + (["j"] if cfg.has_jammer else [])
    runio.write_csv(os.path.join(run_dir, "trajectories.csv"),
                    runio.trace_header(env_names, cfg.m_comm_uavs),
                    runio.trace_rows(result.trace, len(env_names)))
    g = result.greedy
    last = result.stats[-1]
    runio.write_manifest(
        os.path.join(run_dir, "manifest.json"),
        run_id=_run_id(cfg),
        cfg_dict=config_to_dict(cfg),
        cfg_sha=config_hash(cfg),
        mode=cfg.mode,
        seed=cfg.seed,
        episodes=len(result.stats),
        cluster_sizes=result.cluster_sizes,
        metrics_summary={
            "final_episode": {
                "avg_cum_reward": last.avg_cum_reward,
                "fst_mbits": last.fst_mbits,
                "st_mbits": last.st_mbits,
                "avg_fairness": last.avg_fairness,
            },
            "greedy": {
                "n_slots": g.n_slots,
                "fst_mbits": g.fst_mbits,
                "st_mbits": g.st_mbits,
                "avg_cum_st_mbits": g.avg_cum_st_mbits,
                "avg_fairness": g.avg_fairness,
                "avg_speed": g.avg_speed,
                "arrivals": [bool(x) for x in g.arrivals],
            },
        })
    print(run_dir)
    return 0


def _matched_layout_seed(cfg: SimConfig, seed: int, sizes: tuple) -> int:
    """First derived layout seed whose clustering reproduces the training
    cluster sizes (network input dims depend on them)."""
    starts = [s for s, _ in cfg.start_end_positions.comm]
    for attempt in range(LAYOUT_MATCH_ATTEMPTS):
        candidate = seed + attempt * LAYOUT_SEED_STRIDE
        layout = place_users(cfg, seed=candidate)
        clusters = cluster_users(layout.as_array(), starts, cfg.m_comm_uavs,
                                 candidate)
        got = tuple(len(clusters.users_of_uav(m)) for m in range(cfg.m_comm_uavs))
        if got == tuple(sizes):
            return candidate
    raise RuntimeError(
        f"no layout with cluster sizes {tuple(sizes)} found from seed {seed}")


def cmd_eval(args) -> int:
    manifest = runio.read_manifest(os.path.join(args.run, "manifest.json"))
    cfg = config_from_dict(manifest["config"])
    ckpt = os.path.join(args.run, "checkpoints", args.checkpoint)
    if not os.path.isdir(ckpt):
        raise FileNotFoundError(f"checkpoint directory not found: {ckpt}")
    seeds = [int(s) for s in args.seeds.split(",") if s.strip() != ""]
    if not seeds:
        raise ValueError("--seeds must name at least one seed")
    sizes = tuple(manifest["cluster_sizes"])

    names = [f"d{i + 1}" for i in range(cfg.m_comm_uavs)] \
        + (["j"] if cfg.has_jammer else [])
    rows = []
    columns = {"total_fst_mbits": [], "total_st_mbits": [],
               "avg_fairness": [], "avg_cum_st_mbits": []}
    for seed in seeds:
        layout_seed = _matched_layout_seed(cfg, seed, sizes)
        env_cfg = replace_fields(cfg, seed=layout_seed)
        env = maddpg.build_env(env_cfg)
        agents = maddpg.load_checkpoint(ckpt, cfg, env)
        _, stats = maddpg.greedy_episode(env, agents)
        rows.append([seed, stats.n_slots, stats.fst_mbits, stats.st_mbits,
                     stats.avg_cum_st_mbits, stats.avg_fairness]
                    + [bool(x) for x in stats.arrivals])
        columns["total_fst_mbits"].append(stats.fst_mbits)
        columns["total_st_mbits"].append(stats.st_mbits)
        columns["avg_fairness"].append(stats.avg_fairness)
        columns["avg_cum_st_mbits"].append(stats.avg_cum_st_mbits)

    out = args.out or os.path.join(args.run, "eval.csv")
    header = ["seed", "n_slots", "total_fst_mbits", "total_st_mbits",
              "avg_cum_st_mbits", "avg_fairness"] + [f"arrived_{n}" for n in names]
    runio.write_csv(out, header, rows)
    for key, vals in columns.items():
        print(f"{key}: mean={np.mean(vals):.6g} std={np.std(vals):.6g}")
    print(out)
    return 0


def cmd_cluster(args) -> int:
    cfg = _build_config(args)
    layout = place_users(cfg)
    starts = [s for s, _ in cfg.start_end_positions.comm]
    clusters = cluster_users(layout.as_array(), starts, cfg.m_comm_uavs, cfg.seed)
    rows = []
    for k, (x, y) in enumerate(layout.positions):
        c = int(clusters.labels[k])
        rows.append(["user", k, x, y, c, clusters.uav_of_cluster[c]])
    for c in range(cfg.m_comm_uavs):
        rows.append(["centroid", c, clusters.centroids[c][0],
                     clusters.centroids[c][1], c, clusters.uav_of_cluster[c]])
    out = args.out or "clusters.csv"
    runio.write_csv(out, ["kind", "id", "x", "y", "cluster", "uav"], rows)
    print(out)
    return 0


EXPORT_KINDS = ("trajectories", "speeds", "scheduling", "losses")


def cmd_export(args) -> int:
    if args.what not in EXPORT_KINDS:
        raise ValueError(f"unknown export kind {args.what!r}; "
                         f"choose from {EXPORT_KINDS}")
    out = args.out or os.path.join(args.run, f"export_{args.what}.csv")
    if args.what == "losses":
        header, data = runio.read_csv(os.path.join(args.run, "metrics.csv"))
        idx = {h: i for i, h in enumerate(header)}
        rows = [[r[idx["episode"]], r[idx["actor_loss"]], r[idx["critic_loss"]]]
                for r in data]
        runio.write_csv(out, ["episode", "actor_loss", "critic_loss"], rows)
        print(out)
        return 0

    header, data = runio.read_csv(os.path.join(args.run, "trajectories.csv"))
    idx = {h: i for i, h in enumerate(header)}
    uav_names = sorted({h.rsplit("_", 1)[0] for h in header
                        if h.endswith("_v") and not h.startswith("c")})
    rows = []
    if args.what == "trajectories":
        for r in data:
            for n in uav_names + ["eve"]:
                rows.append([r[idx["slot"]], "e" if n == "eve" else n,
                             r[idx[f"{n}_x"]], r[idx[f"{n}_y"]]])
        runio.write_csv(out, ["slot", "uav", "x", "y"], rows)
    elif args.what == "speeds":
        for r in data:
            for n in uav_names:
                rows.append([r[idx["slot"]], n, r[idx[f"{n}_v"]]])
        runio.write_csv(out, ["slot", "uav", "speed"], rows)
    else:
        n_clusters = len([h for h in header if h.endswith("_user")])
        for r in data:
            for c in range(1, n_clusters + 1):
                rows.append([r[idx["slot"]], c, r[idx[f"c{c}_user"]],
                             r[idx[f"c{c}_rate_mbps"]]])
        runio.write_csv(out, ["slot", "cluster", "user", "secrecy_rate"], rows)
    print(out)
    return 0


def _add_config_flags(p) -> None:
    p.add_argument("--config", help="JSON config document; defaults used if omitted")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (dotted paths allowed); repeatable")
    p.add_argument("--seed", type=int, help="override the run seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavsec",
        description="Secure multi-UAV communication: simulate, train, evaluate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training job and write run artifacts")
    _add_config_flags(p)
    p.add_argument("--mode", choices=["SCTPD", "BEN1", "BEN2"])
    p.add_argument("--episodes", type=int)
    p.add_argument("--out", help="run directory (default runs/<run-id>)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="greedy rollouts of a trained checkpoint")
    p.add_argument("--run", required=True, help="run directory from train")
    p.add_argument("--seeds", required=True, help="comma-separated seed list")
    p.add_argument("--checkpoint", default="final")
    p.add_argument("--out", help="output CSV (default <run>/eval.csv)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cluster", help="emit user clusters and centroids")
    _add_config_flags(p)
    p.add_argument("--out", help="output CSV (default clusters.csv)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("export", help="plot-ready tables from a run directory")
    p.add_argument("--run", required=True)
    p.add_argument("what", choices=EXPORT_KINDS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
