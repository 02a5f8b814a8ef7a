"""Playground sessions: wire protocol, clamps, and scripted-replay closure."""

import json
import random

import pytest

from lumiswarm.config import parse_config
from lumiswarm.service import PlaygroundSession, SessionError, create_app
from lumiswarm.trace import build_footer, build_header, trace_lines
from lumiswarm.verify import initial_configuration, run_experiment

BASE = {
    "protocol": "shrink",
    "scheduler": "ssynch",
    "rigidity": {"kind": "rigid"},
    "initial": {"generator": "uniform", "n": 5},
    "seed": 12,
    "caps": {"maxRounds": 5000},
}


def open_session(raw=None):
    s = PlaygroundSession(raw or BASE)
    s.open()
    return s, s.take_outbox()


def by_type(msgs, t):
    return [m for m in msgs if m["type"] == t]


def test_open_pushes_hello_state_and_request():
    s, out = open_session()
    assert [m["type"] for m in out] == ["hello", "stateUpdate", "decisionRequest"]
    assert out[0]["palette"] == ["Off", "Vertex"]
    state = json.loads(out[1]["stateJson"])
    assert len(state["robots"]) == 5
    assert out[2]["mode"] == "round"
    seqs = [m["seq"] for m in out]
    assert seqs == sorted(seqs)


def test_invalid_config_rejected():
    with pytest.raises(SessionError) as err:
        PlaygroundSession({"protocol": "nope"})
    assert err.value.code == "ConfigInvalid"


def test_decision_advances_one_round():
    s, out = open_session()
    req = by_type(out, "decisionRequest")[0]
    s.handle({"type": "decision", "requestId": req["requestId"],
              "activate": [0, 2]})
    out = s.take_outbox()
    kinds = [m["type"] for m in out]
    assert "stepResult" in kinds and "stateUpdate" in kinds and "decisionRequest" in kinds
    step = by_type(out, "stepResult")[0]
    assert step["activated"] == [0, 2]


def test_stale_decision_rejected():
    s, out = open_session()
    req = by_type(out, "decisionRequest")[0]
    s.handle({"type": "decision", "requestId": req["requestId"] + 5,
              "activate": [0]})
    out = s.take_outbox()
    assert by_type(out, "error")[0]["code"] == "StaleDecision"


def test_activating_terminated_robot_rejected():
    raw = {**BASE, "initial": {"points": [[0, 0], [3, 0]]}}
    s, out = open_session(raw)
    req = by_type(out, "decisionRequest")[0]
    # both robots see each other; with two robots both light Vertex and the
    # second activation terminates them
    s.handle({"type": "decision", "requestId": req["requestId"], "activate": [0, 1]})
    out = s.take_outbox()
    req = by_type(out, "decisionRequest")[0]
    s.handle({"type": "decision", "requestId": req["requestId"], "activate": [0]})
    out = s.take_outbox()
    req = by_type(out, "decisionRequest")[0]
    s.handle({"type": "decision", "requestId": req["requestId"], "activate": [0]})
    out = s.take_outbox()
    err = by_type(out, "error")
    if not err:  # robot 0 terminated on that second activation
        req = by_type(out, "decisionRequest")[0]
        s.handle({"type": "decision", "requestId": req["requestId"], "activate": [0]})
        out = s.take_outbox()
        err = by_type(out, "error")
    assert err and err[0]["code"] == "IllegalDecision"


def test_empty_activation_rejected():
    s, out = open_session()
    req = by_type(out, "decisionRequest")[0]
    s.handle({"type": "decision", "requestId": req["requestId"], "activate": []})
    out = s.take_outbox()
    assert by_type(out, "error")[0]["code"] == "IllegalDecision"


def test_truncation_clamped_and_reported():
    raw = {**BASE, "protocol": "contain",
           "rigidity": {"kind": "nonRigid", "delta": 0.5},
           "initial": {"points": [[0, 0], [10, 0]]}}
    s, out = open_session(raw)
    req = by_type(out, "decisionRequest")[0]
    # both robots request a 10-length orthogonal move; fraction 0.01 clamps to
    # delta/10 = 0.05 of the request
    s.handle({"type": "decision", "requestId": req["requestId"],
              "activate": [0, 1], "truncation": {"0": 0.01, "1": 0.01}})
    out = s.take_outbox()
    step = by_type(out, "stepResult")[0]
    assert step["realizedFraction"]["0"] == pytest.approx(0.05)
    assert step["realizedFraction"]["1"] == pytest.approx(0.05)


def test_fairness_window_enforced():
    s, out = open_session()
    window = 2 * 5
    req = by_type(out, "decisionRequest")[0]
    for _ in range(window + 1):
        s.handle({"type": "decision", "requestId": req["requestId"],
                  "activate": [0]})
        out = s.take_outbox()
        errs = by_type(out, "error")
        if errs:
            assert errs[0]["code"] == "IllegalDecision"
            assert "fairness" in errs[0]["message"]
            return
        req = by_type(out, "decisionRequest")[0]
    pytest.fail("fairness window never enforced")


def play_session_randomly(raw, seed=0, max_steps=500):
    """Drive a session with random legal decisions until it finishes."""
    rng = random.Random(seed)
    s = PlaygroundSession(raw)
    s.open()
    out = s.take_outbox()
    steps = 0
    while s.finished is None and steps < max_steps:
        reqs = by_type(out, "decisionRequest")
        assert reqs, f"no pending request: {[m['type'] for m in out]}"
        req = reqs[0]
        alive = req["alive"]
        must = req["mustActivate"]
        pick = sorted(set(must) | {rng.choice(alive)})
        frames = {str(r): {"rotation": rng.uniform(0, 6.28),
                           "reflect": rng.random() < 0.5,
                           "scale": rng.uniform(0.5, 2.0)} for r in pick}
        trunc = {str(r): rng.random() for r in pick}
        s.handle({"type": "decision", "requestId": req["requestId"],
                  "activate": pick, "frames": frames, "truncation": trunc})
        out = s.take_outbox()
        steps += 1
    return s


def test_session_replay_is_bit_identical():
    raw = {**BASE, "protocol": "contain",
           "rigidity": {"kind": "nonRigid", "delta": 0.05},
           "initial": {"generator": "uniform", "n": 6}}
    s = play_session_randomly(raw, seed=4)
    assert s.finished is not None and s.finished.outcome == "Solved"
    session_lines = s.export_trace()

    scripted = parse_config(s.scripted_config())
    events, verdict = run_experiment(scripted)
    header = build_header(scripted, initial_configuration(scripted))
    footer = build_footer(header, events, verdict)
    assert trace_lines(header, events, footer) == session_lines


def test_session_decisions_never_applied_twice():
    s, out = open_session()
    req = by_type(out, "decisionRequest")[0]
    s.handle({"type": "decision", "requestId": req["requestId"], "activate": [0]})
    first = s.take_outbox()
    s.handle({"type": "decision", "requestId": req["requestId"], "activate": [0]})
    second = s.take_outbox()
    assert by_type(second, "error")[0]["code"] == "StaleDecision"
    assert s.round_no == 1


def test_websocket_session_flow():
    from starlette.testclient import TestClient

    app = create_app()
    client = TestClient(app)
    with client.websocket_connect("/session") as ws:
        ws.send_json({"type": "open", "config": BASE})
        hello = ws.receive_json()
        assert hello["type"] == "hello"
        state = ws.receive_json()
        assert state["type"] == "stateUpdate"
        req = ws.receive_json()
        assert req["type"] == "decisionRequest"
        ws.send_json({"type": "decision", "requestId": req["requestId"],
                      "activate": [0, 1]})
        kinds = {ws.receive_json()["type"] for _ in range(3)}
        assert kinds == {"stepResult", "stateUpdate", "decisionRequest"}
        ws.send_json({"type": "export"})
        export = ws.receive_json()
        assert export["type"] == "traceExport"
        assert export["lines"][0].startswith('{"')


def test_websocket_invalid_config():
    from starlette.testclient import TestClient

    app = create_app()
    client = TestClient(app)
    with client.websocket_connect("/session") as ws:
        ws.send_json({"type": "open", "config": {"protocol": "bogus"}})
        err = ws.receive_json()
        assert err["type"] == "error" and err["code"] == "ConfigInvalid"


def test_asynch_session_cycle_mode_replay():
    raw = {
        "protocol": "contain",
        "scheduler": "asynch",
        "rigidity": {"kind": "rigid"},
        "initial": {"points": [[0, 0], [4, 0], [4, 4], [0, 4], [2, 2]]},
        "caps": {"maxEvents": 100000},
        "seed": 3,
    }
    rng = random.Random(0)
    s = PlaygroundSession(raw)
    s.open()
    out = s.take_outbox()
    assert by_type(out, "decisionRequest")[0]["mode"] == "cycle"
    steps = 0
    while s.finished is None and steps < 300:
        req = by_type(out, "decisionRequest")[0]
        s.handle({"type": "decision", "requestId": req["requestId"],
                  "robot": req["robot"],
                  "lookDelay": rng.uniform(0.1, 1.0),
                  "computeDuration": rng.uniform(0.1, 0.5),
                  "moveDuration": rng.uniform(0.2, 1.5),
                  "truncation": 1.0})
        out = s.take_outbox()
        steps += 1
    assert s.finished is not None and s.finished.outcome == "Solved"

    session_lines = s.export_trace()
    scripted = parse_config(s.scripted_config())
    events, verdict = run_experiment(scripted)
    header = build_header(scripted, initial_configuration(scripted))
    footer = build_footer(header, events, verdict)
    assert trace_lines(header, events, footer) == session_lines
