"""Command-line interface: exit codes, artifact contents, config-file
defaults, and the demo -> train -> eval -> serve/deploy round trip on a
miniature dataset."""

import csv
import json
import socket
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from bimanu.cli import main
from bimanu.data.dataset import load_split
from bimanu.data.episode import read_episode
from bimanu.policy.checkpoint import load_checkpoint


@pytest.fixture(scope="module")
def mini_dataset(tmp_path_factory):
    """Six tiny demos recorded through the CLI."""
    out = tmp_path_factory.mktemp("data") / "mini"
    rc = main([
        "--seed", "0", "demo", "--task", "handover", "--episodes", "6",
        "--out", str(out), "--height", "12", "--width", "16",
    ])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def mini_checkpoint(mini_dataset, tmp_path_factory):
    ckpt = tmp_path_factory.mktemp("ckpt") / "mini.bmck"
    rc = main([
        "--seed", "0", "train", "--data", str(mini_dataset), "--out", str(ckpt),
        "--steps", "12", "--batch-size", "16", "--log-every", "4",
    ])
    assert rc == 0
    return ckpt


class TestExitCodes:
    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_missing_required_flag_is_usage_error(self, capsys):
        assert main(["train", "--data", "x"]) == 1  # --out missing

    def test_bad_flag_value_is_usage_error(self, capsys):
        assert main(["demo", "--task", "zzz", "--out", "x"]) == 1

    def test_missing_checkpoint_is_data_error(self, tmp_path, capsys):
        rc = main([
            "eval", "--checkpoint", str(tmp_path / "none.bmck"),
            "--data", str(tmp_path), "--out", str(tmp_path / "o.json"),
        ])
        assert rc == 2

    def test_corrupt_checkpoint_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.bmck"
        bad.write_bytes(b"garbage")
        rc = main([
            "eval", "--checkpoint", str(bad), "--data", str(tmp_path),
            "--out", str(tmp_path / "o.json"),
        ])
        assert rc == 2

    def test_missing_dataset_is_data_error(self, tmp_path, capsys):
        rc = main([
            "train", "--data", str(tmp_path / "none"), "--out", str(tmp_path / "c.bmck"),
        ])
        assert rc == 2


class TestDemo:
    def test_artifacts(self, mini_dataset):
        files = sorted(p.name for p in mini_dataset.glob("*.bmep"))
        assert files == [f"handover_{i:04d}.bmep" for i in range(6)]
        split = load_split(mini_dataset)
        assert len(split["train"]) == 5 and len(split["test"]) == 1
        assert not set(split["train"]) & set(split["test"])
        ep = read_episode(mini_dataset / files[0])
        assert ep.success
        assert ep.task == "handover"
        assert ep.frames[0].obs.images["third_view"].shape == (12, 16, 3)

    def test_deterministic_for_seed(self, mini_dataset, tmp_path):
        out = tmp_path / "again"
        assert main([
            "--seed", "0", "demo", "--task", "handover", "--episodes", "1",
            "--out", str(out), "--height", "12", "--width", "16",
        ]) == 0
        a = (mini_dataset / "handover_0000.bmep").read_bytes()
        b = (out / "handover_0000.bmep").read_bytes()
        assert a == b


class TestTrainEval:
    def test_checkpoint_stats_and_curve(self, mini_dataset, mini_checkpoint):
        policy = load_checkpoint(mini_checkpoint)
        assert policy.cfg.cameras == ("wrist_left", "wrist_right", "third_view")
        stats_file = mini_dataset / "stats.json"
        assert stats_file.exists()
        saved = json.loads(stats_file.read_text())
        assert saved["hand"]["max"] == [110, 110, 110, 110, 90, 120]
        curve = list(csv.DictReader(open(str(mini_checkpoint) + ".loss.csv")))
        assert curve[0]["step"] == "0"
        assert all(float(r["loss"]) > 0 for r in curve)

    def test_eval_json(self, mini_dataset, mini_checkpoint, tmp_path, capsys):
        out = tmp_path / "eval.json"
        rc = main([
            "eval", "--checkpoint", str(mini_checkpoint), "--data", str(mini_dataset),
            "--stride", "8", "--out", str(out),
        ])
        assert rc == 0
        res = json.loads(out.read_text())
        assert res["split"] == "test"
        assert len(res["episodes"]) == 1
        assert np.isfinite(res["action_mse"]) and res["action_mse"] > 0

    def test_eval_drop_validation(self, mini_dataset, mini_checkpoint, tmp_path, capsys):
        # dropping a modality the checkpoint was trained on is a data error
        rc = main([
            "eval", "--checkpoint", str(mini_checkpoint), "--data", str(mini_dataset),
            "--drop", "touch", "--out", str(tmp_path / "x.json"),
        ])
        assert rc == 2
        rc = main([
            "eval", "--checkpoint", str(mini_checkpoint), "--data", str(mini_dataset),
            "--drop", "sonar", "--out", str(tmp_path / "x.json"),
        ])
        assert rc == 1

    def test_eval_drop_touch_on_touchless_checkpoint(self, mini_dataset, tmp_path, capsys):
        ckpt = tmp_path / "nt.bmck"
        assert main([
            "--seed", "0", "train", "--data", str(mini_dataset), "--out", str(ckpt),
            "--steps", "4", "--batch-size", "8", "--no-touch", "--no-vision",
            "--log-every", "2",
        ]) == 0
        out = tmp_path / "nt.json"
        rc = main([
            "eval", "--checkpoint", str(ckpt), "--data", str(mini_dataset),
            "--stride", "8", "--drop", "touch,vision", "--out", str(out),
        ])
        assert rc == 0
        assert np.isfinite(json.loads(out.read_text())["action_mse"])

    def test_resume_matches_straight_run(self, mini_dataset, tmp_path, capsys):
        def train(path, steps, resume=False):
            args = [
                "--seed", "0", "train", "--data", str(mini_dataset), "--out", str(path),
                "--steps", str(steps), "--batch-size", "8", "--precision", "f64",
                "--no-vision", "--log-every", "2",
            ]
            if resume:
                args.append("--resume")
            assert main(args) == 0

        straight = tmp_path / "straight.bmck"
        train(straight, 6)
        split = tmp_path / "split.bmck"
        train(split, 3)
        train(split, 6, resume=True)
        assert straight.read_bytes() == split.read_bytes()


class TestConfigFile:
    def test_config_defaults_and_cli_override(self, mini_dataset, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "seed": 0,
            "train": {"steps": 4, "batch_size": 8, "no_vision": True, "log_every": 2},
        }))
        out = tmp_path / "c.bmck"
        rc = main([
            "--config", str(cfg), "train", "--data", str(mini_dataset),
            "--out", str(out), "--steps", "2",
        ])
        assert rc == 0
        curve = list(csv.DictReader(open(str(out) + ".loss.csv")))
        # CLI --steps 2 overrides the config's 4
        assert int(curve[-1]["step"]) == 1
        assert load_checkpoint(out).cfg.cameras == ()

    def test_unreadable_config_is_data_error(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert main(["--config", str(cfg), "demo", "--out", "x"]) == 2


class TestAblate:
    def test_csv_schema(self, mini_dataset, tmp_path, capsys):
        out = tmp_path / "ablate.csv"
        rc = main([
            "--seed", "0", "ablate", "--data", str(mini_dataset), "--out", str(out),
            "--sizes", "2,4", "--modalities", "full,no_touch", "--steps", "4",
            "--batch-size", "8", "--stride", "8",
        ])
        assert rc == 0
        rows = list(csv.DictReader(open(out)))
        assert set(r["sweep"] for r in rows) == {"size", "modality"}
        sizes = [int(r["train_episodes"]) for r in rows if r["sweep"] == "size"]
        assert sizes == [2, 4]
        variants = [r["variant"] for r in rows if r["sweep"] == "modality"]
        assert variants == ["full", "no_touch"]
        assert all(float(r["action_mse"]) > 0 for r in rows)


class TestServeDeploy:
    def test_round_trip_over_websocket(self, mini_checkpoint, tmp_path):
        port = _free_port()
        server = subprocess.Popen(
            [sys.executable, "-m", "bimanu.cli", "serve",
             "--checkpoint", str(mini_checkpoint), "--bind", f"127.0.0.1:{port}"],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True,
        )
        try:
            _wait_port(port)
            rc = main([
                "--seed", "0", "deploy", "--connect", f"ws://127.0.0.1:{port}",
                "--task", "handover", "--episodes", "1", "--latency-inject", "1",
                "--checkpoint", str(mini_checkpoint), "--tick-period", "0",
            ])
            assert rc == 0
        finally:
            server.terminate()
            server.wait(timeout=10)

    def test_deploy_without_server_fails_cleanly(self, mini_checkpoint, capsys):
        port = _free_port()
        rc = main([
            "deploy", "--connect", f"ws://127.0.0.1:{port}", "--episodes", "1",
            "--checkpoint", str(mini_checkpoint), "--tick-period", "0",
        ])
        assert rc == 3


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _wait_port(port: int, timeout: float = 30.0) -> None:
    deadline = time.time() + timeout
    while time.time() < deadline:
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=1):
                return
        except OSError:
            time.sleep(0.2)
    raise TimeoutError(f"server never opened port {port}")
