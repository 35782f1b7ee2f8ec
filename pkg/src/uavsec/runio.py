"""Run-artifact I/O: CSV tables with stable number formatting, the run
manifest, and the episode-trace schema shared by training and export."""

from __future__ import annotations

import csv
import json
import os
from datetime import datetime, timezone

import numpy as np

METRICS_HEADER = ["episode", "avg_cum_reward", "avg_cum_st", "avg_fairness",
                  "fst", "avg_speed", "accel_violation_rate",
                  "dist_violation_rate", "actor_loss", "critic_loss"]


def fmt(value) -> str:
    """Serialize one cell: floats at 9 significant digits, bools as 0/1."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.9g" % value
    return str(value)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def metrics_rows(stats) -> list[list]:
    return [[s.episode, s.avg_cum_reward, s.avg_cum_st_mbits, s.avg_fairness,
             s.fst_mbits, s.avg_speed, s.accel_violation_rate,
             s.dist_violation_rate, s.actor_loss, s.critic_loss]
            for s in stats]


def trace_header(agent_names, n_clusters) -> list[str]:
    header = ["slot"]
    for n in agent_names:
        header += [f"{n}_x", f"{n}_y", f"{n}_v", f"{n}_p", f"{n}_e"]
    header += ["eve_x", "eve_y"]
    for c in range(1, n_clusters + 1):
        header += [f"c{c}_user", f"c{c}_rate_mbps", f"c{c}_jain"]
    header += ["r_ins_mbits", "fst_mbits", "st_mbits"]
    for n in agent_names:
        header += [f"{n}_xi_a", f"{n}_xi_l", f"{n}_xi_rd"]
    return header


def trace_rows(outcomes, n_agents) -> list[list]:
    rows = []
    for o in outcomes:
        m = o.slot_metrics
        row = [m.slot]
        for i in range(n_agents):
            row += [m.positions[i][0], m.positions[i][1], m.speeds[i],
                    m.powers_w[i], m.energies_j[i]]
        row += [m.eve_pos[0], m.eve_pos[1]]
        for c in range(len(m.selections)):
            row += [m.selections[c], m.selected_rates_bps[c] / 1e6, m.jain[c]]
        row += [m.r_ins_bits / 1e6, m.fst_bits / 1e6, m.st_bits / 1e6]
        for i in range(n_agents):
            row += [o.xi_a[i], o.xi_l[i], o.xi_rd[i]]
        rows.append(row)
    return rows


def write_manifest(path, *, run_id, cfg_dict, cfg_sha, mode, seed, episodes,
                   cluster_sizes, metrics_summary) -> None:
    doc = {
        "run_id": run_id,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "mode": mode,
        "seed": seed,
        "episodes": episodes,
        "config_hash": cfg_sha,
        "cluster_sizes": list(cluster_sizes),
        "metrics": metrics_summary,
        "config": cfg_dict,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
