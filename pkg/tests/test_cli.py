import json
import os

import pytest

from uavsec.cli import main
from uavsec.runio import read_csv, read_manifest

USERS = [[140.0, 140.0], [150.0, 150.0], [160.0, 145.0],
         [340.0, 140.0], [350.0, 150.0], [360.0, 145.0]]

TINY = {
    "schema_version": 1,
    "k_users": 6,
    "user_positions": USERS,
    "e_max_j": 500.0,
    "max_slots": 8,
    "seed": 5,
    "train": {"episodes": 3, "batch_size": 8, "buffer_capacity": 64,
              "hidden_dims": [8, 6], "checkpoint_interval": 100},
}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY))
    return str(path)


def run(*argv):
    return main(list(argv))


def test_train_writes_run_artifacts(tiny_config, tmp_path, capsys):
    out = tmp_path / "run"
    assert run("train", "--config", tiny_config, "--out", str(out),
               "--quiet") == 0
    header, rows = read_csv(out / "metrics.csv")
    assert header == ["episode", "avg_cum_reward", "avg_cum_st", "avg_fairness",
                      "fst", "avg_speed", "accel_violation_rate",
                      "dist_violation_rate", "actor_loss", "critic_loss"]
    assert len(rows) == 3
    assert [r[0] for r in rows] == ["0", "1", "2"]
    manifest = read_manifest(out / "manifest.json")
    assert manifest["seed"] == 5
    assert manifest["mode"] == "SCTPD"
    assert manifest["episodes"] == 3
    assert os.path.isdir(out / "checkpoints" / "final")
    t_header, t_rows = read_csv(out / "trajectories.csv")
    assert t_header[0] == "slot"
    assert len(t_rows) >= 1


def test_train_episode_count_flag(tiny_config, tmp_path):
    out = tmp_path / "run5"
    assert run("train", "--config", tiny_config, "--episodes", "5",
               "--out", str(out), "--quiet") == 0
    _, rows = read_csv(out / "metrics.csv")
    assert len(rows) == 5


def test_train_reruns_byte_identical(tiny_config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("train", "--config", tiny_config, "--out", str(a), "--quiet")
    run("train", "--config", tiny_config, "--out", str(b), "--quiet")
    for name in ("metrics.csv", "trajectories.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_train_seed_override_changes_results(tiny_config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("train", "--config", tiny_config, "--out", str(a), "--quiet")
    run("train", "--config", tiny_config, "--seed", "6", "--out", str(b),
        "--quiet")
    assert read_manifest(b / "manifest.json")["seed"] == 6
    assert (a / "metrics.csv").read_bytes() != (b / "metrics.csv").read_bytes()


def test_train_ben2_roster(tiny_config, tmp_path):
    out = tmp_path / "ben2"
    assert run("train", "--config", tiny_config, "--mode", "BEN2",
               "--out", str(out), "--quiet") == 0
    header, _ = read_csv(out / "trajectories.csv")
    assert "j_x" not in header
    assert "d2_x" in header
    assert read_manifest(out / "manifest.json")["mode"] == "BEN2"


def test_eval_table_and_determinism(tiny_config, tmp_path):
    out = tmp_path / "run"
    run("train", "--config", tiny_config, "--out", str(out), "--quiet")
    e1 = tmp_path / "eval1.csv"
    e2 = tmp_path / "eval2.csv"
    assert run("eval", "--run", str(out), "--seeds", "5,6", "--out", str(e1)) == 0
    assert run("eval", "--run", str(out), "--seeds", "5,6", "--out", str(e2)) == 0
    assert e1.read_bytes() == e2.read_bytes()
    header, rows = read_csv(e1)
    assert header[:6] == ["seed", "n_slots", "total_fst_mbits", "total_st_mbits",
                          "avg_cum_st_mbits", "avg_fairness"]
    assert "arrived_d1" in header and "arrived_j" in header
    assert len(rows) == 2


def test_eval_single_seed_zero_std(tiny_config, tmp_path, capsys):
    out = tmp_path / "run"
    run("train", "--config", tiny_config, "--out", str(out), "--quiet")
    capsys.readouterr()
    assert run("eval", "--run", str(out), "--seeds", "5") == 0
    printed = capsys.readouterr().out
    assert "std=0" in printed


def test_eval_missing_checkpoint_fails_cleanly(tiny_config, tmp_path, capsys):
    out = tmp_path / "run"
    run("train", "--config", tiny_config, "--out", str(out), "--quiet")
    assert run("eval", "--run", str(out), "--seeds", "5",
               "--checkpoint", "nope") == 1
    assert "error:" in capsys.readouterr().err


def test_cluster_command_schema(tiny_config, tmp_path):
    out = tmp_path / "clusters.csv"
    assert run("cluster", "--config", tiny_config, "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert header == ["kind", "id", "x", "y", "cluster", "uav"]
    kinds = [r[0] for r in rows]
    assert kinds.count("user") == 6
    assert kinds.count("centroid") == 2


def test_export_schemas_and_idempotence(tiny_config, tmp_path):
    out = tmp_path / "run"
    run("train", "--config", tiny_config, "--out", str(out), "--quiet")
    assert run("export", "--run", str(out), "trajectories") == 0
    header, rows = read_csv(out / "export_trajectories.csv")
    assert header == ["slot", "uav", "x", "y"]
    uavs = {r[1] for r in rows}
    assert uavs == {"d1", "d2", "j", "e"}

    assert run("export", "--run", str(out), "speeds") == 0
    header, _ = read_csv(out / "export_speeds.csv")
    assert header == ["slot", "uav", "speed"]

    assert run("export", "--run", str(out), "scheduling") == 0
    header, sched_rows = read_csv(out / "export_scheduling.csv")
    assert header == ["slot", "cluster", "user", "secrecy_rate"]

    assert run("export", "--run", str(out), "losses") == 0
    header, loss_rows = read_csv(out / "export_losses.csv")
    assert header == ["episode", "actor_loss", "critic_loss"]
    assert len(loss_rows) == 3

    before = (out / "export_scheduling.csv").read_bytes()
    run("export", "--run", str(out), "scheduling")
    assert (out / "export_scheduling.csv").read_bytes() == before


def test_export_fst_column_matches_manifest_total(tiny_config, tmp_path):
    out = tmp_path / "run"
    run("train", "--config", tiny_config, "--out", str(out), "--quiet")
    header, rows = read_csv(out / "trajectories.csv")
    fst_idx = header.index("fst_mbits")
    total = sum(float(r[fst_idx]) for r in rows)
    manifest = read_manifest(out / "manifest.json")
    assert total == pytest.approx(manifest["metrics"]["greedy"]["fst_mbits"],
                                  rel=1e-6)


def test_unknown_export_kind_rejected(tiny_config, tmp_path, capsys):
    out = tmp_path / "run"
    run("train", "--config", tiny_config, "--out", str(out), "--quiet")
    with pytest.raises(SystemExit):
        run("export", "--run", str(out), "wavelets")


def test_invalid_config_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"accel_max_mps2": -2.0}))
    assert run("train", "--config", str(bad), "--out", str(tmp_path / "x"),
               "--quiet") == 1
    err = capsys.readouterr().err
    assert "error:" in err and "accel_max" in err


def test_set_overrides_reach_training(tiny_config, tmp_path):
    out = tmp_path / "run"
    assert run("train", "--config", tiny_config, "--set", "train.episodes=2",
               "--set", "reward_weights.kappa_th=30.0",
               "--out", str(out), "--quiet") == 0
    manifest = read_manifest(out / "manifest.json")
    assert manifest["config"]["reward_weights"]["kappa_th"] == 30.0
    _, rows = read_csv(out / "metrics.csv")
    assert len(rows) == 2
