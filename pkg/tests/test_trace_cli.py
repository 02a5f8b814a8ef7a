"""Trace persistence, replay closure and the command-line interface."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from lumiswarm.cli import main
from lumiswarm.config import parse_config
from lumiswarm.trace import (
    build_footer,
    build_header,
    read_trace,
    replay,
    trace_lines,
    write_trace,
)
from lumiswarm.verify import initial_configuration, run_experiment

SHRINK_RAW = {
    "protocol": "shrink",
    "scheduler": "ssynch",
    "adversary": {"activation": {"kind": "randomFair"},
                  "frames": {"kind": "randomPerActivation"}},
    "rigidity": {"kind": "rigid"},
    "initial": {"generator": "uniform", "n": 8},
    "seed": 5,
    "caps": {"maxRounds": 20000},
}


def write_config(tmp_path: Path, raw: dict, name="cfg.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


def run_to_trace(raw: dict, path: Path) -> None:
    cfg = parse_config(raw)
    events, verdict = run_experiment(cfg)
    header = build_header(cfg, initial_configuration(cfg))
    footer = build_footer(header, events, verdict)
    write_trace(str(path), header, events, footer)


def test_trace_roundtrip_and_replay(tmp_path):
    path = tmp_path / "t.jsonl"
    run_to_trace(SHRINK_RAW, path)
    header, events, footer = read_trace(str(path))
    assert header["configHash"]
    result = replay(header, events, footer)
    assert result["verdictMatches"]
    assert result["checksumMatches"]
    assert result["statsMatch"]
    assert result["outcome"] == footer["verdict"]["outcome"]


def test_same_seed_byte_identical(tmp_path):
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    run_to_trace(SHRINK_RAW, p1)
    run_to_trace(SHRINK_RAW, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_different_seed_differs(tmp_path):
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    run_to_trace(SHRINK_RAW, p1)
    run_to_trace({**SHRINK_RAW, "seed": 6}, p2)
    assert p1.read_bytes() != p2.read_bytes()


def test_tampered_position_detected(tmp_path):
    path = tmp_path / "t.jsonl"
    run_to_trace(SHRINK_RAW, path)
    lines = path.read_text().splitlines()
    for i, ln in enumerate(lines):
        ev = json.loads(ln)
        if ev.get("kind") == "moveEnd":
            ev["pos"][0] += 1.0
            lines[i] = json.dumps(ev, sort_keys=True, separators=(",", ":"))
            break
    tampered = tmp_path / "tampered.jsonl"
    tampered.write_text("\n".join(lines) + "\n")
    header, events, footer = read_trace(str(tampered))
    result = replay(header, events, footer)
    assert not result["checksumMatches"]
    assert not result["verdictMatches"]


def test_violation_trace_replays_same_violation(tmp_path):
    raw = {
        "protocol": "shrink", "scheduler": "ssynch",
        "adversary": {"activation": {"kind": "randomFair"}},
        "initial": {"generator": "uniform", "n": 6}, "seed": 2,
        "caps": {"maxRounds": 20000},
    }
    # force a violation by monkey-free means: tiny collision tolerance makes
    # ordinary shrinking moves count as near-collisions
    raw["tolerances"] = {"epsColl": 0.5}
    path = tmp_path / "v.jsonl"
    run_to_trace(raw, path)
    header, events, footer = read_trace(str(path))
    assert footer["verdict"]["outcome"] == "InvariantViolation"
    result = replay(header, events, footer)
    assert result["verdictMatches"]
    assert result["violation"]["time"] == footer["verdict"]["violation"]["time"]


# ---------------------------------------------------------------------------
# CLI


def test_cli_run_solved(tmp_path):
    cfg_path = write_config(tmp_path, SHRINK_RAW)
    out = tmp_path / "out.jsonl"
    code = main(["run", "--config", str(cfg_path), "--out", str(out), "--quiet"])
    assert code == 0
    assert out.exists()


def test_cli_run_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == 1
    assert "config error" in capsys.readouterr().err


def test_cli_run_missing_fields(tmp_path, capsys):
    cfg_path = write_config(tmp_path, {"protocol": "shrink"})
    assert main(["run", "--config", str(cfg_path)]) == 1


def test_cli_run_cap_exit_code(tmp_path):
    raw = {**SHRINK_RAW, "caps": {"maxRounds": 1}}
    cfg_path = write_config(tmp_path, raw)
    out = tmp_path / "out.jsonl"
    assert main(["run", "--config", str(cfg_path), "--out", str(out), "--quiet"]) == 3


def test_cli_seed_override_changes_trace(tmp_path):
    cfg_path = write_config(tmp_path, SHRINK_RAW)
    o1, o2 = tmp_path / "1.jsonl", tmp_path / "2.jsonl"
    main(["run", "--config", str(cfg_path), "--out", str(o1), "--quiet"])
    main(["run", "--config", str(cfg_path), "--seed", "99", "--out", str(o2), "--quiet"])
    assert o1.read_bytes() != o2.read_bytes()


def test_cli_replay_matches(tmp_path, capsys):
    cfg_path = write_config(tmp_path, SHRINK_RAW)
    out = tmp_path / "out.jsonl"
    main(["run", "--config", str(cfg_path), "--out", str(out), "--quiet"])
    assert main(["replay", str(out)]) == 0
    assert "match" in capsys.readouterr().out


def test_cli_trace_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("LUMISWARM_TRACE_DIR", str(tmp_path / "traces"))
    cfg_path = write_config(tmp_path, SHRINK_RAW)
    assert main(["run", "--config", str(cfg_path), "--quiet"]) == 0
    assert (tmp_path / "traces" / "cfg.trace.jsonl").exists()


def test_cli_sweep(tmp_path, capsys):
    cfg_path = write_config(tmp_path, {**SHRINK_RAW,
                                       "initial": {"generator": "uniform", "n": 6}})
    out = tmp_path / "summary.csv"
    code = main(["sweep", "--config", str(cfg_path), "--seeds", "5",
                 "--out", str(out), "--quiet"])
    assert code == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 6  # header + 5 seeds
    assert "Solved" in rows[1]


def test_cli_sweep_empty_range(tmp_path):
    cfg_path = write_config(tmp_path, SHRINK_RAW)
    out = tmp_path / "summary.csv"
    code = main(["sweep", "--config", str(cfg_path), "--seeds", "0",
                 "--out", str(out), "--quiet"])
    assert out.read_text().splitlines()[0].startswith("seed")


def test_cli_vessels_csv(tmp_path):
    out = tmp_path / "vessels.csv"
    code = main(["vessels", "--n", "4", "--steps", "5", "--schedule", "all-open",
                 "--seed", "3", "--out", str(out), "--quiet"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[:1] == ["t"]
    assert len(lines) == 7  # header + 5 steps + final state


def test_cli_report(tmp_path):
    cfg_path = write_config(tmp_path, SHRINK_RAW)
    out = tmp_path / "out.jsonl"
    main(["run", "--config", str(cfg_path), "--out", str(out), "--quiet"])
    rep = tmp_path / "report"
    assert main(["report", str(out), "--out", str(rep), "--quiet"]) == 0
    assert (rep / "metrics.csv").exists()
    assert (rep / "metrics.png").exists()
    assert (rep / "final.png").exists()


def test_console_script_entrypoint():
    proc = subprocess.run([sys.executable, "-m", "lumiswarm.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "run" in proc.stdout and "sweep" in proc.stdout
