"""Trace persistence and replay verification.

A trace is a JSON-lines file: a header line (format version, config hash,
full config, initial robot states), one line per event, and a footer line
holding the verdict, run statistics and a checksum over everything above it.
Identical configs and seeds produce byte-identical files, and the monitors
and final-state judges can be re-run over a persisted trace without
re-simulating.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import replace

from .config import RunConfig, canonical_json, parse_config
from .geometry import Point2
from .model import Configuration, RobotState, STATUS_TERMINATED
from .verify import (
    MonitorSuite,
    Verdict,
    Violation,
    all_pairs_visible,
    judge_circle,
    judge_mutual_visibility,
    judge_near_gathering,
)

FORMAT_VERSION = 1


class TraceError(ValueError):
    pass


def _dump(obj: dict) -> str:
    return canonical_json(obj)


def build_header(cfg: RunConfig, initial: Configuration) -> dict:
    return {
        "kind": "header",
        "format": FORMAT_VERSION,
        "configHash": cfg.hash(),
        "config": cfg.raw,
        "initial": [
            {"id": r.id, "pos": [r.position.x, r.position.y], "light": r.light}
            for r in initial.robots
        ],
    }


def build_footer(header: dict, events: list[dict], verdict: Verdict) -> dict:
    return {
        "kind": "footer",
        "verdict": verdict.to_dict(),
        "checksum": checksum(header, events),
    }


def checksum(header: dict, events: list[dict]) -> str:
    h = hashlib.sha256()
    h.update(_dump(header).encode())
    for ev in events:
        h.update(_dump(ev).encode())
    return h.hexdigest()


def trace_lines(header: dict, events: list[dict], footer: dict) -> list[str]:
    return [_dump(header)] + [_dump(e) for e in events] + [_dump(footer)]


def write_trace(path: str, header: dict, events: list[dict], footer: dict) -> None:
    with open(path, "w") as fh:
        for line in trace_lines(header, events, footer):
            fh.write(line + "\n")


def read_trace(path: str) -> tuple[dict, list[dict], dict]:
    with open(path) as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln]
    if len(lines) < 2:
        raise TraceError("trace too short")
    try:
        header = json.loads(lines[0])
        footer = json.loads(lines[-1])
        events = [json.loads(ln) for ln in lines[1:-1]]
    except json.JSONDecodeError as exc:
        raise TraceError(f"trace is not valid JSON lines: {exc}") from exc
    if header.get("kind") != "header" or footer.get("kind") != "footer":
        raise TraceError("missing header or footer line")
    return header, events, footer


# ---------------------------------------------------------------------------
# replay


def _initial_from_header(header: dict) -> Configuration:
    robots = tuple(
        RobotState(int(r["id"]), Point2(*map(float, r["pos"])), r["light"])
        for r in header["initial"]
    )
    return Configuration(robots, 0.0)


class _SeqTracker:
    """Recomputes the visibility objective of sequential runs from a trace."""

    def __init__(self, cfg: RunConfig) -> None:
        self.enabled = cfg.objective.get("kind") == "sequential-visibility"
        self.eps_vis = cfg.params.eps_vis
        self.moved: set[int] = set(cfg.faulty)
        self.n = cfg.n
        self.all_moved = False
        self.lost = False

    def after_round(self, moved_ids: list[int], config: Configuration) -> None:
        if not self.enabled:
            return
        self.moved.update(moved_ids)
        if len(self.moved) >= self.n:
            self.all_moved = True
        if self.all_moved and not all_pairs_visible(config, self.eps_vis):
            self.lost = True


def _replay_rounds(cfg: RunConfig, config: Configuration, events: list[dict],
                   suite: MonitorSuite,
                   ) -> tuple[Violation | None, Configuration, _SeqTracker]:
    seq = _SeqTracker(cfg)
    i = 0
    while i < len(events):
        ev = events[i]
        if ev["kind"] == "violation":
            i += 1
            continue
        if ev["kind"] != "round":
            raise TraceError(f"unexpected event {ev['kind']!r} at round boundary")
        t = float(ev["t"])
        i += 1
        lights: dict[int, str] = {}
        landings: dict[int, Point2] = {}
        terminated: list[int] = []
        moved: list[int] = []
        while i < len(events) and events[i]["kind"] not in ("round", "violation"):
            e = events[i]
            if e["kind"] == "light":
                lights[int(e["robot"])] = e["light"]
            elif e["kind"] == "moveEnd":
                landings[int(e["robot"])] = Point2(*map(float, e["pos"]))
                moved.append(int(e["robot"]))
            elif e["kind"] == "terminate":
                terminated.append(int(e["robot"]))
            i += 1
        new_states = []
        for r in config.robots:
            s = r
            if r.id in lights:
                s = replace(s, light=lights[r.id])
            if r.id in landings:
                s = replace(s, position=landings[r.id])
            if r.id in terminated:
                s = replace(s, status=STATUS_TERMINATED)
            new_states.append(s)
        new_config = Configuration(tuple(new_states), t + 1.0)
        pos0 = {r.id: r.position for r in config.robots}
        pos1 = {r.id: r.position for r in new_config.robots}
        v = suite.observe_window(t, t + 1.0, pos0, pos1)
        if v is None:
            v = suite.observe_checkpoint(t + 1.0, new_config, tuple(moved))
        config = new_config
        seq.after_round(moved, config)
        if v is not None:
            return v, config, seq
    return None, config, seq


def _replay_asynch(cfg: RunConfig, config: Configuration, events: list[dict],
                   suite: MonitorSuite,
                   ) -> tuple[Violation | None, Configuration, _SeqTracker]:
    states = {r.id: r for r in config.robots}
    motions: dict[int, tuple[float, float, Point2, Point2]] = {}

    def position_at(rid: int, t: float) -> Point2:
        if rid in motions:
            t0, t1, p0, p1 = motions[rid]
            if t >= t1:
                return p1
            if t1 > t0:
                return p0 + (p1 - p0) * ((t - t0) / (t1 - t0))
        return states[rid].position

    def config_at(t: float) -> Configuration:
        return Configuration(
            tuple(replace(states[k], position=position_at(k, t))
                  for k in sorted(states)), t)

    prev_t = config.time
    last_t = prev_t
    for ev in events:
        if ev["kind"] == "violation":
            continue
        t = float(ev["t"])
        last_t = max(last_t, t)
        if t > prev_t:
            pos0 = {rid: position_at(rid, prev_t) for rid in states}
            pos1 = {rid: position_at(rid, t) for rid in states}
            v = suite.observe_window(prev_t, t, pos0, pos1)
            if v is not None:
                return v, config_at(t), _SeqTracker(cfg)
            prev_t = t
        rid = int(ev.get("robot", -1))
        if ev["kind"] == "computeEnd":
            states[rid] = replace(states[rid], light=ev["light"])
            if ev.get("terminate"):
                states[rid] = replace(states[rid], status=STATUS_TERMINATED)
                v = suite.observe_checkpoint(t, config_at(t), ())
                if v is not None:
                    return v, config_at(t), _SeqTracker(cfg)
            elif "pos" in ev:
                landing = Point2(*map(float, ev["landing"]))
                motions[rid] = (t, float(ev["moveEnd"]),
                                states[rid].position, landing)
        elif ev["kind"] == "moveEnd":
            landing = Point2(*map(float, ev["pos"]))
            states[rid] = replace(states[rid], position=landing)
            motions.pop(rid, None)
            v = suite.observe_checkpoint(t, config_at(t), (rid,))
            if v is not None:
                return v, config_at(t), _SeqTracker(cfg)
    return None, config_at(last_t), _SeqTracker(cfg)


def _rejudge(cfg: RunConfig, final: Configuration, seq: _SeqTracker) -> bool:
    kind = cfg.objective.get("kind", "mutual-visibility")
    if kind == "mutual-visibility":
        try:
            return judge_mutual_visibility(final, cfg.params.eps_geom,
                                           ignore=cfg.faulty)
        except Exception:
            return False
    if kind == "circle":
        return (all(r.terminated for r in final.robots)
                and judge_circle(final, tol=1e-6))
    if kind == "near-gathering":
        target = None
        if cfg.faulty:
            target = final.robot(cfg.faulty[0]).position
        tol = float(cfg.objective.get("tolFraction", 1e-3)) * max(cfg.initial_diameter(), 1e-12)
        alive = [r for r in final.robots
                 if not r.terminated and r.id not in cfg.faulty]
        if cfg.params.eps_ng is not None and not alive:
            tol = max(tol, cfg.params.eps_ng)
        return judge_near_gathering(final, tol, target)
    if kind == "sequential-visibility":
        return seq.all_moved and not seq.lost
    return False


def replay(header: dict, events: list[dict], footer: dict) -> dict:
    """Re-run monitors and judges over a persisted trace without simulating.

    The replayed verdict is derived purely from recorded positions, so on an
    untampered trace it matches the original bit for bit; a tampered trace
    fails the checksum and typically the monitors as well.
    """
    expected = checksum(header, events)
    checksum_ok = footer.get("checksum") == expected
    cfg = parse_config(header["config"])
    config = _initial_from_header(header)
    suite = MonitorSuite(cfg.protocol, cfg.params.eps_geom,
                         cfg.effective_eps_coll(), config,
                         round_based=(cfg.scheduler != "asynch"),
                         objective=cfg.objective.get("kind", "mutual-visibility"))
    if cfg.scheduler == "asynch":
        violation, final, seq = _replay_asynch(cfg, config, events, suite)
    else:
        violation, final, seq = _replay_rounds(cfg, config, events, suite)

    recorded = footer.get("verdict", {})
    if violation is not None:
        outcome = "InvariantViolation"
        violation_dict = violation.to_dict()
    elif recorded.get("outcome") == "CapExceeded":
        outcome = "CapExceeded"
        violation_dict = None
    elif _rejudge(cfg, final, seq):
        outcome = "Solved"
        violation_dict = None
    else:
        outcome = "InvariantViolation"
        violation_dict = Violation("FinalStateRejected", final.time).to_dict()

    recorded_violation = recorded.get("violation")
    verdict_matches = (
        checksum_ok
        and outcome == recorded.get("outcome")
        and ((violation_dict is None and recorded_violation is None)
             or (violation_dict is not None and recorded_violation is not None
                 and violation_dict["kind"] == recorded_violation.get("kind")
                 and violation_dict["time"] == recorded_violation.get("time")))
    )
    stats_match = recorded.get("stats", {}) == suite.stats.to_dict()
    return {
        "outcome": outcome,
        "violation": violation_dict,
        "checksumMatches": checksum_ok,
        "statsMatch": stats_match,
        "verdictMatches": verdict_matches and stats_match,
        "stats": suite.stats.to_dict(),
    }
