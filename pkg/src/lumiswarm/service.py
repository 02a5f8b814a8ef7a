"""Interactive playground: a human plays the adversary over a WebSocket.

One session per connection at /session.  The client opens with a run config;
the server answers with hello + stateUpdate and then drives a strict
request/response loop: exactly one decisionRequest is outstanding, each
decision advances the engine one round (round-based schedulers) or schedules
one activation cycle (asynchronous runs).  The server is authoritative: it
clamps truncation fractions, enforces the fairness window and rejects
illegal activations.  Every decision is recorded so the whole session can be
replayed as a scripted run; the exported trace embeds that scripted config
and is byte-identical to what `lumiswarm run` produces from it.
"""

from __future__ import annotations

import hashlib
import json
import uuid
from dataclasses import replace

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import ConfigError, RunConfig, canonical_json, parse_config
from .geometry import Point2, convex_hull, is_visible
from .model import Configuration, LocalFrame
from .protocols import get_protocol
from .scheduler import (
    AsynchCaps,
    AsynchEngine,
    CycleSpec,
    IllegalDecisionError,
    RigidityModel,
    RoundDecision,
    SchedulerError,
    ScriptedAsynchAdversary,
    sequential_round,
    ssynch_round,
)
from .trace import build_footer, build_header, trace_lines
from .verify import AsynchObserver, MonitorSuite, Verdict, initial_configuration


class SessionError(ValueError):
    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code


def _state_payload(config: Configuration, eps_vis: float,
                   pending_request: dict | None,
                   alerts: list[dict]) -> dict:
    pts = config.positions()
    robots = [{
        "id": r.id,
        "pos": [r.position.x, r.position.y],
        "light": r.light,
        "terminated": r.terminated,
    } for r in config.robots]
    hull_info = None
    if len(pts) >= 2:
        try:
            hull = convex_hull(pts, 1e-12)
            hull_info = {
                "boundary": [[p.x, p.y] for p in hull.boundary],
                "vertexFlags": list(hull.vertex_flags),
                "isSegment": hull.is_segment,
            }
        except Exception:
            hull_info = None
    visible_pairs = []
    blocked_pairs = []
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            others = [p for k, p in enumerate(pts) if k not in (i, j)]
            pair = [config.robots[i].id, config.robots[j].id]
            if is_visible(pts[i], pts[j], others, eps_vis):
                visible_pairs.append(pair)
            else:
                blocked_pairs.append(pair)
    return {
        "time": config.time,
        "robots": robots,
        "hull": hull_info,
        "visible": visible_pairs,
        "blocked": blocked_pairs,
        "pendingRequest": pending_request,
        "alerts": alerts,
    }


class PlaygroundSession:
    """Socket-free session core: feed it messages, drain its outbox."""

    def __init__(self, raw_config: dict) -> None:
        try:
            self.cfg: RunConfig = parse_config(raw_config)
        except ConfigError as exc:
            raise SessionError("ConfigInvalid", str(exc)) from exc
        self.session_id = uuid.uuid4().hex[:12]
        self.proto = get_protocol(self.cfg.protocol)
        self.config = initial_configuration(self.cfg)
        self.round_based = self.cfg.scheduler != "asynch"
        self.suite = MonitorSuite(
            self.cfg.protocol, self.cfg.params.eps_geom,
            self.cfg.effective_eps_coll(), self.config,
            round_based=self.round_based,
            objective=self.cfg.objective.get("kind", "mutual-visibility"))
        self.events: list[dict] = []
        self.alerts: list[dict] = []
        self.seq = 0
        self.request_id = 0
        self.pending: dict | None = None
        self.finished: Verdict | None = None
        self.round_no = 0
        self.idle = {r.id: 0 for r in self.config.robots}
        self.decision_log: list[dict] = []
        self._outbox: list[dict] = []
        self._engine: AsynchEngine | None = None
        self._observer: AsynchObserver | None = None
        if not self.round_based:
            adversary = ScriptedAsynchAdversary({}, seed=0)
            adversary.next_cycle = lambda *_: None  # every cycle is a decision
            self._engine = AsynchEngine(
                self.config, self.proto, self.cfg.params, adversary,
                self.cfg.rigidity,
                AsynchCaps(self.cfg.caps["maxEvents"], self.cfg.caps["maxTime"]),
                faulty=self.cfg.faulty, eps_vis=self.cfg.params.eps_vis)
            self._observer = AsynchObserver(self.suite, self.config)

    # -- outbox ------------------------------------------------------------

    def take_outbox(self) -> list[dict]:
        out, self._outbox = self._outbox, []
        return out

    def _send(self, msg: dict) -> None:
        self.seq += 1
        msg["seq"] = self.seq
        msg["session"] = self.session_id
        self._outbox.append(msg)

    def _send_state(self) -> None:
        state = _state_payload(self.config, self.cfg.params.eps_vis,
                               self.pending, self.alerts[-10:])
        state_json = canonical_json(state)
        self._send({
            "type": "stateUpdate",
            "stateJson": state_json,
            "stateHash": hashlib.sha256(state_json.encode()).hexdigest(),
        })

    def _request_decision(self) -> None:
        if self.finished is not None:
            return
        self.request_id += 1
        alive = [r.id for r in self.config.robots
                 if not r.terminated and r.id not in self.cfg.faulty]
        if self.round_based:
            self.pending = {
                "requestId": self.request_id,
                "mode": "round",
                "round": self.round_no,
                "alive": alive,
                "fairnessWindow": 2 * self.cfg.n,
                "mustActivate": [i for i in alive
                                 if self.idle[i] >= 2 * self.cfg.n - 1],
                "nonRigidDelta": (self.cfg.rigidity.delta
                                  if self.cfg.rigidity.kind == "nonRigid" else None),
            }
        else:
            robot = self._engine.awaiting_cycle[0]
            self.pending = {
                "requestId": self.request_id,
                "mode": "cycle",
                "robot": robot,
                "alive": alive,
            }
        self._send({"type": "decisionRequest", **self.pending})

    # -- lifecycle ----------------------------------------------------------

    def open(self) -> None:
        self._send({
            "type": "hello",
            "protocol": self.cfg.protocol,
            "scheduler": self.cfg.scheduler,
            "n": self.cfg.n,
            "palette": list(self.proto.palette),
        })
        self._send_state()
        self._request_decision()

    def handle(self, msg: dict) -> None:
        mtype = msg.get("type")
        if mtype == "decision":
            self._handle_decision(msg)
        elif mtype == "export":
            self._send({"type": "traceExport", "lines": self.export_trace()})
        else:
            self._send({"type": "error", "code": "UnknownMessage",
                        "message": f"unsupported message type {mtype!r}"})

    def _fail(self, code: str, message: str) -> None:
        self._send({"type": "error", "code": code, "message": message})

    def _handle_decision(self, msg: dict) -> None:
        if self.finished is not None:
            self._fail("SessionFinished", "the run has ended")
            return
        if self.pending is None or msg.get("requestId") != self.pending["requestId"]:
            self._fail("StaleDecision",
                       f"expected decision for request {self.pending['requestId'] if self.pending else None}")
            return
        try:
            if self.round_based:
                self._apply_round_decision(msg)
            else:
                self._apply_cycle_decision(msg)
        except SessionError as exc:
            self._fail(exc.code, str(exc))
            return

    # -- round-based --------------------------------------------------------

    def _apply_round_decision(self, msg: dict) -> None:
        activate = [int(i) for i in msg.get("activate", [])]
        if not activate:
            raise SessionError("IllegalDecision", "activation set must be non-empty")
        alive = {r.id for r in self.config.robots
                 if not r.terminated and r.id not in self.cfg.faulty}
        for i in activate:
            if i not in alive:
                raise SessionError("IllegalDecision",
                                   f"robot {i} cannot be activated")
        if self.cfg.scheduler == "sequential" and len(activate) != 1:
            raise SessionError("IllegalDecision",
                               "sequential scheduler activates exactly one robot")
        window = 2 * self.cfg.n
        for i in alive:
            if self.idle[i] >= window and i not in activate:
                raise SessionError("IllegalDecision",
                                   f"fairness: robot {i} idle for {self.idle[i]} rounds")

        frames: dict[int, LocalFrame] = {}
        frame_specs: dict[int, dict] = {}
        for key, spec in (msg.get("frames") or {}).items():
            rid = int(key)
            frames[rid] = LocalFrame(Point2(0.0, 0.0),
                                     rotation=float(spec.get("rotation", 0.0)),
                                     reflect=bool(spec.get("reflect", False)),
                                     scale=float(spec.get("scale", 1.0)))
            frame_specs[rid] = frames[rid].as_dict()
        truncation = {int(k): max(0.0, min(1.0, float(v)))
                      for k, v in (msg.get("truncation") or {}).items()}

        decision = RoundDecision(activate=sorted(activate), frames=frames,
                                 truncation=truncation)
        step = sequential_round if self.cfg.scheduler == "sequential" else ssynch_round
        before = self.config
        try:
            self.config, record = step(before, self.proto, self.cfg.params,
                                       decision, self.cfg.rigidity,
                                       self.cfg.params.eps_vis)
        except (SchedulerError, IllegalDecisionError) as exc:
            raise SessionError("IllegalDecision", str(exc)) from exc

        from .verify import _emit_round_events
        _emit_round_events(self.events, record, self.config)
        self.decision_log.append({
            "round": self.round_no,
            "activate": sorted(activate),
            "frames": frame_specs,
            "truncation": {str(k): v for k, v in truncation.items()},
        })
        for i in alive:
            self.idle[i] = 0 if i in activate else self.idle[i] + 1
        self.round_no += 1

        pos0 = {r.id: r.position for r in before.robots}
        pos1 = {r.id: r.position for r in self.config.robots}
        v = self.suite.observe_window(before.time, self.config.time, pos0, pos1)
        if v is None:
            v = self.suite.observe_checkpoint(
                self.config.time, self.config,
                tuple(m.robot for m in record.moves))
        realized = {str(m.robot): m.fraction for m in record.moves}
        self._send({"type": "stepResult",
                    "requestId": self.pending["requestId"],
                    "round": self.round_no - 1,
                    "activated": list(record.activated),
                    "realizedFraction": realized,
                    "terminated": list(record.terminated)})
        self.pending = None
        if v is not None:
            self.events.append({"kind": "violation", "t": v.time,
                                "vkind": v.kind, "robots": list(v.robots)})
            self.alerts.append(v.to_dict())
            self.finished = Verdict("InvariantViolation", v, self.round_no,
                                    self.round_no, self.suite.stats.to_dict(),
                                    self.suite.collision.warnings)
            self._send({"type": "violation", "violation": v.to_dict()})
        elif all(r.terminated for r in self.config.robots
                 if r.id not in self.cfg.faulty):
            self.finished = self._judged_verdict()
        self._send_state()
        if self.finished is None:
            self._request_decision()
        else:
            self._send({"type": "stepResult", "requestId": None,
                        "final": True, "verdict": self.finished.to_dict()})

    def _judged_verdict(self) -> Verdict:
        from .verify import _final_verdict
        state = {"ng_target": float(self.cfg.objective.get("tolFraction", 1e-3))
                 * max(self.cfg.initial_diameter(), 1e-12)}
        events = (self.round_no if self.round_based
                  else self._engine.events_processed)
        return _final_verdict(self.cfg, self.config, self.suite,
                              self.round_no, events, state)

    # -- asynch -------------------------------------------------------------

    def _apply_cycle_decision(self, msg: dict) -> None:
        robot = int(msg.get("robot", -1))
        if robot != self.pending["robot"]:
            raise SessionError("IllegalDecision",
                               f"expected a cycle for robot {self.pending['robot']}")
        frame = None
        if msg.get("frame"):
            f = msg["frame"]
            frame = LocalFrame(Point2(0.0, 0.0),
                               rotation=float(f.get("rotation", 0.0)),
                               reflect=bool(f.get("reflect", False)),
                               scale=float(f.get("scale", 1.0)))
        spec = CycleSpec(
            look_delay=max(0.0, float(msg.get("lookDelay", 0.5))),
            compute_duration=max(1e-9, float(msg.get("computeDuration", 0.5))),
            move_duration=max(1e-9, float(msg.get("moveDuration", 1.0))),
            truncation=max(0.0, min(1.0, float(msg.get("truncation", 1.0)))),
            frame=frame,
        )
        engine = self._engine
        engine.provide_cycle(robot, spec)
        self.decision_log.append({"robot": robot,
                                  "lookDelay": spec.look_delay,
                                  "computeDuration": spec.compute_duration,
                                  "moveDuration": spec.move_duration,
                                  "truncation": spec.truncation})
        processed = []
        violation = None
        while not engine.awaiting_cycle and not engine.done():
            rec = engine.step()
            if rec is None:
                break
            ev, violation = self._observer.observe(engine, rec)
            self.events.append(ev)
            processed.append({"kind": rec.kind, "t": rec.time, "robot": rec.robot})
            if violation is not None:
                self.events.append({"kind": "violation", "t": violation.time,
                                    "vkind": violation.kind,
                                    "robots": list(violation.robots)})
                break
        self.config = engine.configuration(engine.time)
        self._send({"type": "stepResult",
                    "requestId": self.pending["requestId"],
                    "events": processed})
        self.pending = None
        if violation is not None:
            self.alerts.append(violation.to_dict())
            self.finished = Verdict("InvariantViolation", violation, 0,
                                    engine.events_processed,
                                    self.suite.stats.to_dict(),
                                    self.suite.collision.warnings)
            self._send({"type": "violation", "violation": violation.to_dict()})
        elif engine.done():
            self.finished = self._judged_verdict()
        self._send_state()
        if self.finished is None:
            self._request_decision()
        else:
            self._send({"type": "stepResult", "requestId": None,
                        "final": True, "verdict": self.finished.to_dict()})

    # -- export -------------------------------------------------------------

    def scripted_config(self) -> dict:
        """The recorded decisions as a scripted-run config."""
        raw = json.loads(canonical_json(self.cfg.raw))  # deep copy
        raw.setdefault("adversary", {})
        if self.round_based:
            raw["adversary"]["activation"] = {
                "kind": "scripted",
                "rounds": [d["activate"] for d in self.decision_log],
            }
            frames = []
            fractions = []
            for d in self.decision_log:
                for rid, f in d["frames"].items():
                    frames.append({"round": d["round"], "robot": int(rid), **f})
                for rid, frac in d["truncation"].items():
                    fractions.append({"round": d["round"], "robot": int(rid),
                                      "fraction": frac})
            raw["adversary"]["frames"] = {"kind": "scripted", "frames": frames}
            raw["adversary"]["truncation"] = {"kind": "scripted",
                                              "fractions": fractions}
            caps = dict(raw.get("caps", {}))
            caps["maxRounds"] = self.round_no
            raw["caps"] = caps
        else:
            raw["adversary"]["activation"] = {"kind": "scripted",
                                              "cycles": self.decision_log}
            caps = dict(raw.get("caps", {}))
            caps["maxEvents"] = self._engine.events_processed
            raw["caps"] = caps
        return raw

    def export_trace(self) -> list[str]:
        cfg = parse_config(self.scripted_config())
        header = build_header(cfg, initial_configuration(cfg))
        verdict = self.finished or Verdict(
            "CapExceeded", None, self.round_no,
            self.round_no if self.round_based else self._engine.events_processed,
            self.suite.stats.to_dict(), self.suite.collision.warnings)
        footer = build_footer(header, self.events, verdict)
        return trace_lines(header, self.events, footer)


def create_app() -> FastAPI:
    """FastAPI app exposing /session as the bidirectional wire protocol."""
    app = FastAPI(title="lumiswarm playground")

    @app.websocket("/session")
    async def session_socket(ws: WebSocket) -> None:
        await ws.accept()
        session: PlaygroundSession | None = None
        try:
            first = await ws.receive_json()
            if first.get("type") != "open" or "config" not in first:
                await ws.send_json({"type": "error", "code": "ConfigInvalid",
                                    "message": "first message must be {type: open, config: ...}"})
                await ws.close()
                return
            try:
                session = PlaygroundSession(first["config"])
            except SessionError as exc:
                await ws.send_json({"type": "error", "code": exc.code,
                                    "message": str(exc)})
                await ws.close()
                return
            session.open()
            for msg in session.take_outbox():
                await ws.send_json(msg)
            while True:
                incoming = await ws.receive_json()
                session.handle(incoming)
                for msg in session.take_outbox():
                    await ws.send_json(msg)
        except WebSocketDisconnect:
            return

    return app
