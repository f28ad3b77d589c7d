import csv
import json
import subprocess
import sys

import pytest

from zkfl.cli import METRICS_COLUMNS, main
from zkfl.config import ExperimentConfig
from zkfl.harness import attack_config


def small_config(tmp_path, **changes):
    cfg = attack_config().replace(rounds=2, **changes)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg.to_json()))
    return p


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", str(small_config(tmp_path)), "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {
        "config.json", "genesis.json", "chain.bin", "metrics.csv", "timings.csv",
        "model_final.bin", "shadow_final.bin", "report.json", "manifest.json",
    } <= names
    rows = list(csv.reader((out / "metrics.csv").open()))
    assert tuple(rows[0]) == METRICS_COLUMNS and len(rows) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) >= {"chain.bin", "metrics.csv"}
    assert len(manifest["code_digest"]) == 64
    assert main(["audit", str(out / "chain.bin"), str(out / "genesis.json")]) == 0


def test_mock_metrics_label_replayed_timings(tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", str(small_config(tmp_path)), "--out", str(out), "--backend", "mock"]) == 0
    row = next(csv.DictReader((out / "metrics.csv").open()))
    assert row["proof_backend"] == "mock" and row["proof_bytes"] == "128"
    assert row["timing_source"] == "replayed-published" and float(row["prove_ms"]) == 45200.0


def test_audit_detects_corruption(tmp_path, capsys):
    out = tmp_path / "run"
    main(["run", "--config", str(small_config(tmp_path)), "--out", str(out)])
    chain = bytearray((out / "chain.bin").read_bytes())
    chain[-5] ^= 1
    (out / "bad.bin").write_bytes(bytes(chain))
    assert main(["audit", str(out / "bad.bin"), str(out / "genesis.json")]) == 5
    assert "first_bad_height" in capsys.readouterr().out


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 1, "rounds": 0}')
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 2
    assert main(["audit", str(tmp_path / "nochain"), str(tmp_path / "nogenesis")]) == 2


def test_round_failure_exit_3_saves_chain(tmp_path):
    cfg = small_config(tmp_path)
    doc = json.loads(cfg.read_text())
    doc["policy"]["quorum"] = 9  # more than the 8 sites
    doc["policy"]["norm_bound"] = 4.0
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 3
    assert (out / "chain.bin").stat().st_size > 0
    report = json.loads((out / "report.json").read_text())
    assert report["round_failed"]["reason"] == "quorum"


def test_attack_exit_codes(tmp_path):
    cfg = attack_config()
    doc = cfg.to_json()
    doc["attacks"] = {"scenarios": ["replay-update"], "repetitions": 1, "include_control": True, "skip_verification": []}
    p = tmp_path / "a.json"
    p.write_text(json.dumps(doc))
    out = tmp_path / "atk"
    assert main(["attack", "--config", str(p), "--out", str(out)]) == 0
    assert json.loads((out / "reports.json").read_text())["complete"]
    doc["attacks"] = {"scenarios": ["tamper-delta"], "include_control": False, "skip_verification": ["tamper-delta"]}
    p.write_text(json.dumps(doc))
    assert main(["attack", "--config", str(p)]) == 4


def test_bench_small_sweep(tmp_path):
    p = tmp_path / "b.json"
    p.write_text(json.dumps({"dims": [64, 128], "clients": [2, 4], "repeats": 1, "ledger_txs": 100}))
    out = tmp_path / "bench"
    assert main(["bench", "--config", str(p), "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "bench.csv").open()))
    assert len(rows) == 8
    assert {r["proof_bytes"] for r in rows if r["backend"] == "mock"} == {"128"}
    assert "verify_fit_r2" in json.loads((out / "manifest.json").read_text())


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "zkfl.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "audit" in res.stdout
