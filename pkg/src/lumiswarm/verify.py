"""Run orchestration, invariant monitors and final-state judges.

Monitors turn the protocols' safety arguments into machine checks that run
inline with the engine: continuous collision distance, hull containment
round over round, persistence of hull-vertex status for moving robots, and
hull immutability while interior robots remain.  Judges decide whether a
finished run actually solved its task.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .config import ConfigError, RunConfig, build_adversary
from .geometry import (
    Circle,
    Hull,
    Point2,
    convex_hull,
    is_visible,
    min_trajectory_distance,
    smallest_enclosing_circle,
    turn,
)
from .model import (
    LIGHT_ADJUSTING,
    LIGHT_DONE,
    Configuration,
    RobotState,
    STATUS_TERMINATED,
)
from .protocols import get_protocol
from .scheduler import (
    AsynchAdversary,
    AsynchCaps,
    AsynchEngine,
    EmptyActivationError,
    FairnessViolationError,
    RoundDecision,
    ScriptedActivation,
    derive_seed,
    sequential_round,
    ssynch_round,
)


class VerifyError(ValueError):
    pass


class NotAllTerminatedError(VerifyError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    time: float
    robots: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "time": self.time, "robots": list(self.robots)}


@dataclass
class Verdict:
    outcome: str  # Solved | InvariantViolation | CapExceeded
    violation: Violation | None = None
    rounds: int = 0
    events: int = 0
    stats: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.outcome == "Solved"

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "violation": self.violation.to_dict() if self.violation else None,
            "rounds": self.rounds,
            "events": self.events,
            "stats": self.stats,
            "warnings": self.warnings,
        }


# ---------------------------------------------------------------------------
# judges


def judge_mutual_visibility(config: Configuration, eps_geom: float = 1e-9,
                            ignore: tuple[int, ...] = ()) -> bool:
    """All terminated, pairwise distinct, and no three robots collinear."""
    for r in config.robots:
        if r.id not in ignore and not r.terminated:
            raise NotAllTerminatedError(f"robot {r.id} has not terminated")
    pts = config.positions()
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            if pts[i] == pts[j]:
                return False
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if turn(pts[i], pts[j], pts[k], eps_geom) == 0:
                    return False
    return True


def judge_circle(config: Configuration, tol: float = 1e-6) -> bool:
    """Every robot within tol of one common circle."""
    pts = config.positions()
    sec = smallest_enclosing_circle(pts)
    return all(abs(p.dist(sec.center) - sec.radius) <= tol for p in pts)


def judge_near_gathering(config: Configuration, eps: float,
                         target: Point2 | None = None) -> bool:
    """Hull diameter shrank below eps; with a stuck robot, everyone ends
    within eps of its position."""
    pts = config.positions()
    diam = max((p.dist(q) for p in pts for q in pts), default=0.0)
    if diam >= eps:
        return False
    if target is not None:
        return all(p.dist(target) <= eps for p in pts)
    return True


def all_pairs_visible(config: Configuration, eps_vis: float = 1e-9) -> bool:
    pts = config.positions()
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            others = [p for k, p in enumerate(pts) if k not in (i, j)]
            if not is_visible(pts[i], pts[j], others, eps_vis):
                return False
    return True


# ---------------------------------------------------------------------------
# monitors


def _hull_or_none(config: Configuration, eps: float) -> Hull | None:
    try:
        return convex_hull(config.positions(), eps)
    except Exception:
        return None


class CollisionMonitor:
    """Closed-form minimum pairwise distance over each motion window."""

    def __init__(self, eps_coll: float) -> None:
        self.eps_coll = eps_coll
        self.warnings: list[dict] = []

    def observe_window(self, t0: float, t1: float,
                       pos0: dict[int, Point2],
                       pos1: dict[int, Point2]) -> Violation | None:
        moved = [i for i in pos0 if pos0[i] != pos1[i]]
        ids = sorted(pos0)
        for i in moved:
            for j in ids:
                if j == i or (j in moved and j < i):
                    continue
                d = min_trajectory_distance(pos0[i], pos1[i], pos0[j], pos1[j])
                if d <= self.eps_coll:
                    return Violation("Collision", t1, tuple(sorted((i, j))))
                if d <= 10.0 * self.eps_coll:
                    self.warnings.append({
                        "kind": "NearCollision", "time": t1,
                        "robots": sorted((i, j)), "distance": d,
                    })
        return None


class HullMonotoneMonitor:
    """H(t+1) contained in H(t), armed after the first non-collinear state."""

    def __init__(self, eps: float) -> None:
        self.eps = eps
        self._prev: Hull | None = None

    def observe(self, time: float, config: Configuration) -> Violation | None:
        hull = _hull_or_none(config, self.eps)
        if hull is None:
            return None
        if self._prev is not None and not self._prev.is_segment:
            for r in config.robots:
                if not self._prev.contains(r.position, 1e-7):
                    return Violation("HullGrew", time, (r.id,))
        self._prev = hull
        return None


class VertexPersistenceMonitor:
    """A moving robot at a non-degenerate hull corner stays one."""

    def __init__(self, eps: float) -> None:
        self.eps = eps
        self._prev: Configuration | None = None
        self._prev_hull: Hull | None = None

    def observe(self, time: float, config: Configuration,
                moved: tuple[int, ...]) -> Violation | None:
        prev, prev_hull = self._prev, self._prev_hull
        hull = _hull_or_none(config, self.eps)
        self._prev, self._prev_hull = config, hull
        if prev is None or prev_hull is None or hull is None:
            return None
        if prev_hull.is_segment or hull.is_segment:
            return None
        for rid in moved:
            if prev_hull.is_vertex(prev.robot(rid).position):
                if not hull.is_vertex(config.robot(rid).position):
                    return Violation("VertexLost", time, (rid,))
        return None


class DepletionHullFixedMonitor:
    """Global hull vertices immutable while interior robots remain."""

    def __init__(self, eps: float, armed: bool) -> None:
        self.eps = eps
        self.armed = armed
        self._prev_hull: Hull | None = None
        self._prev_had_internal = False

    @staticmethod
    def _has_internal(hull: Hull, config: Configuration) -> bool:
        return any(hull.strictly_inside(r.position) for r in config.robots)

    def observe(self, time: float, config: Configuration) -> Violation | None:
        if not self.armed:
            return None
        hull = _hull_or_none(config, self.eps)
        if hull is None:
            return None
        if (self._prev_hull is not None and self._prev_had_internal
                and not self._prev_hull.is_segment):
            prev_vs = self._prev_hull.vertices()
            cur_vs = hull.vertices()
            same = (len(prev_vs) == len(cur_vs)
                    and all(any(p.dist(q) <= 1e-9 for q in cur_vs) for p in prev_vs))
            if not same:
                return Violation("HullChangedDuringDepletion", time)
        self._prev_hull = hull
        self._prev_had_internal = self._has_internal(hull, config)
        return None


class SecDriftMonitor:
    """Smallest enclosing circle frozen during the circle phase."""

    def __init__(self, tol: float = 1e-9,
                 phase_lights: tuple[str, ...] = (LIGHT_ADJUSTING, LIGHT_DONE)) -> None:
        self.tol = tol
        self.phase_lights = phase_lights
        self._sec: Circle | None = None

    def observe(self, time: float, config: Configuration) -> Violation | None:
        in_phase = all(r.light in self.phase_lights for r in config.robots)
        if not in_phase:
            return None
        sec = smallest_enclosing_circle(config.positions())
        if self._sec is not None:
            drift = max(sec.center.dist(self._sec.center),
                        abs(sec.radius - self._sec.radius))
            if drift > self.tol:
                return Violation("SecDrift", time)
        self._sec = sec
        return None


class StatsCollector:
    def __init__(self, eps: float) -> None:
        self.eps = eps
        self.times: list[float] = []
        self.hull_area: list[float] = []
        self.hull_diameter: list[float] = []
        self.vertex_count: list[int] = []
        self.shortest_interior_edge: list[float | None] = []

    def observe(self, time: float, config: Configuration) -> None:
        hull = _hull_or_none(config, self.eps)
        if hull is None:
            return
        self.times.append(time)
        self.hull_area.append(hull.area())
        self.hull_diameter.append(hull.diameter())
        self.vertex_count.append(sum(hull.vertex_flags))
        interior = [r.position for r in config.robots
                    if hull.strictly_inside(r.position)]
        if len(interior) < 2:
            self.shortest_interior_edge.append(None)
        else:
            inner = convex_hull(interior, self.eps)
            edges = inner.side_edges()
            self.shortest_interior_edge.append(
                min(a.dist(b) for a, b in edges) if edges else None)

    def to_dict(self) -> dict:
        return {
            "times": self.times,
            "hullAreaSeries": self.hull_area,
            "hullDiameterSeries": self.hull_diameter,
            "vertexCountSeries": self.vertex_count,
            "shortestInteriorEdgeSeries": self.shortest_interior_edge,
        }


_SHRINK_FAMILY = ("shrink", "shrink-delta", "shrink-n-known",
                  "shrink-near-gathering", "shrink-near-gathering-2color")
_CONTAIN_FAMILY = ("contain", "contain-axis", "contain-n-known",
                   "circle-contain", "circle-contain-done")


class MonitorSuite:
    """The per-run bundle of monitors; shared by live runs and trace replay."""

    def __init__(self, protocol: str, eps_geom: float, eps_coll: float,
                 initial: Configuration, round_based: bool,
                 objective: str = "mutual-visibility") -> None:
        self.collision = CollisionMonitor(eps_coll)
        self.stats = StatsCollector(eps_geom)
        self.hull_monotone: HullMonotoneMonitor | None = None
        self.vertex_persistence: VertexPersistenceMonitor | None = None
        self.depletion: DepletionHullFixedMonitor | None = None
        self.sec_drift: SecDriftMonitor | None = None

        init_hull = _hull_or_none(initial, eps_geom)
        non_collinear_start = init_hull is not None and not init_hull.is_segment

        monotone_ok = (protocol in _SHRINK_FAMILY
                       or protocol in ("contain", "contain-axis", "contain-n-known"))
        # Convergence-type runs flatten the swarm to a needle, where the
        # tolerance-based collinearity predicate legitimately fires escape
        # moves and vertex classification loses meaning; hull containment and
        # vertex persistence are therefore checked only on runs that stop at
        # a strictly convex goal.
        if round_based and monotone_ok and objective == "mutual-visibility":
            self.hull_monotone = HullMonotoneMonitor(eps_geom)
        if (round_based and objective == "mutual-visibility"
                and protocol not in ("sequential", "sequential-2color",
                                     "sequential-n-known", "shrink-delta")):
            self.vertex_persistence = VertexPersistenceMonitor(eps_geom)
        if protocol in _CONTAIN_FAMILY:
            self.depletion = DepletionHullFixedMonitor(eps_geom, armed=non_collinear_start)
        if protocol in ("circle-contain", "circle-contain-done"):
            self.sec_drift = SecDriftMonitor()
        self.stats.observe(initial.time, initial)
        if self.hull_monotone:
            self.hull_monotone.observe(initial.time, initial)
        if self.vertex_persistence:
            self.vertex_persistence.observe(initial.time, initial, ())
        if self.depletion:
            self.depletion.observe(initial.time, initial)

    def observe_window(self, t0, t1, pos0, pos1) -> Violation | None:
        return self.collision.observe_window(t0, t1, pos0, pos1)

    def observe_checkpoint(self, time: float, config: Configuration,
                           moved: tuple[int, ...]) -> Violation | None:
        if config.first_collision() is not None:
            return Violation("Collision", time, config.first_collision())
        for check in (
            lambda: self.hull_monotone.observe(time, config) if self.hull_monotone else None,
            lambda: self.vertex_persistence.observe(time, config, moved) if self.vertex_persistence else None,
            lambda: self.depletion.observe(time, config) if self.depletion else None,
            lambda: self.sec_drift.observe(time, config) if self.sec_drift else None,
        ):
            v = check()
            if v is not None:
                return v
        self.stats.observe(time, config)
        return None


# ---------------------------------------------------------------------------
# experiment runner


def initial_configuration(cfg: RunConfig) -> Configuration:
    proto = get_protocol(cfg.protocol)
    robots = tuple(
        RobotState(i, p, proto.initial_light) for i, p in enumerate(cfg.initial)
    )
    return Configuration(robots, 0.0)


def _point(p: Point2) -> list[float]:
    return [p.x, p.y]


def run_experiment(cfg: RunConfig) -> tuple[list[dict], Verdict]:
    """Drive the configured run to termination, violation or cap.

    Returns the trace event list (header/footer handled by the trace module)
    and the final verdict.
    """
    proto = get_protocol(cfg.protocol)
    if "delta" in proto.needs and cfg.rigidity.kind != "nonRigid":
        raise ConfigError(f"{cfg.protocol} needs nonRigid rigidity (delta knowledge)")
    config = initial_configuration(cfg)
    if config.first_collision() is not None:
        raise ConfigError("initial positions must be pairwise distinct")

    if cfg.scheduler == "asynch":
        return _run_asynch(cfg, proto, config)
    return _run_rounds(cfg, proto, config)


def _objective_reached(cfg: RunConfig, config: Configuration,
                       state: dict) -> bool:
    kind = cfg.objective.get("kind", "mutual-visibility")
    alive = [r for r in config.robots
             if not r.terminated and r.id not in cfg.faulty]
    if kind in ("mutual-visibility", "circle"):
        return not alive
    if kind == "near-gathering":
        if not alive:
            return True
        pts = config.positions()
        diam = max((p.dist(q) for p in pts for q in pts), default=0.0)
        return diam < state["ng_target"]
    if kind == "sequential-visibility":
        if not alive:
            return True
        done_at = state.get("all_moved_round")
        extra = int(cfg.objective.get("extraRounds", 1000))
        return done_at is not None and config.time >= done_at + extra
    return not alive


def _final_verdict(cfg: RunConfig, config: Configuration, suite: MonitorSuite,
                   rounds: int, events: int, state: dict) -> Verdict:
    kind = cfg.objective.get("kind", "mutual-visibility")
    ok = False
    if kind == "mutual-visibility":
        ok = judge_mutual_visibility(config, cfg.params.eps_geom, ignore=cfg.faulty)
    elif kind == "circle":
        ok = judge_circle(config, tol=1e-6)
        for r in config.robots:
            if not r.terminated:
                ok = False
    elif kind == "near-gathering":
        target = None
        if cfg.faulty:
            target = config.robot(cfg.faulty[0]).position
        tol = state["ng_target"]
        alive = [r for r in config.robots
                 if not r.terminated and r.id not in cfg.faulty]
        if cfg.params.eps_ng is not None and not alive:
            # terminating variant: robots stop once packed within eps_ng,
            # which is the promise to judge them against
            tol = max(tol, cfg.params.eps_ng)
        ok = judge_near_gathering(config, tol, target)
    elif kind == "sequential-visibility":
        ok = state.get("all_moved_round") is not None and not state.get("visibility_lost", False)
    verdict = Verdict(
        outcome="Solved" if ok else "InvariantViolation",
        violation=None if ok else Violation("FinalStateRejected", config.time),
        rounds=rounds, events=events,
        stats=suite.stats.to_dict(), warnings=suite.collision.warnings,
    )
    return verdict


def _emit_round_events(events: list[dict], record, config_after: Configuration) -> None:
    t = float(record.round_no)
    events.append({"kind": "round", "t": t, "active": list(record.activated)})
    for rid in record.activated:
        frame = record.frames[rid]
        events.append({"kind": "look", "t": t, "robot": rid,
                       "frame": frame.as_dict()})
    for rid, light in record.lights.items():
        events.append({"kind": "light", "t": t, "robot": rid, "light": light})
    for mv in record.moves:
        events.append({"kind": "moveStart", "t": t, "robot": mv.robot,
                       "pos": _point(mv.requested)})
        events.append({"kind": "moveEnd", "t": t + 1.0, "robot": mv.robot,
                       "pos": _point(mv.realized),
                       "realizedFraction": mv.fraction})
    for rid in record.terminated:
        events.append({"kind": "terminate", "t": t, "robot": rid})


def _run_rounds(cfg: RunConfig, proto, config: Configuration,
                ) -> tuple[list[dict], Verdict]:
    adversary = build_adversary(cfg)
    suite = MonitorSuite(cfg.protocol, cfg.params.eps_geom,
                         cfg.effective_eps_coll(), config, round_based=True,
                         objective=cfg.objective.get("kind", "mutual-visibility"))
    events: list[dict] = []
    state: dict = {
        "ng_target": float(cfg.objective.get("tolFraction", 1e-3)) * max(cfg.initial_diameter(), 1e-12),
        "moved_once": set(cfg.faulty),
    }
    idle = {r.id: 0 for r in config.robots}
    scripted = isinstance(adversary.activation, ScriptedActivation)
    window = adversary.fairness_window
    rounds = 0
    sequential = cfg.scheduler == "sequential"

    for round_no in range(cfg.caps["maxRounds"]):
        if _objective_reached(cfg, config, state):
            return events, _final_verdict(cfg, config, suite, rounds, rounds, state)
        alive = [r.id for r in config.robots
                 if not r.terminated and r.id not in cfg.faulty]
        if not alive:
            break
        required = [i for i in alive if idle[i] >= window - 1]
        chosen = adversary.activation.choose(round_no, alive, required)
        if scripted:
            for i in alive:
                if idle[i] >= window and i not in chosen:
                    raise FairnessViolationError(
                        f"robot {i} starved beyond window {window}")
        if not chosen:
            # scripted set masked empty by terminations: a no-op round
            for i in alive:
                idle[i] += 1
            continue
        decision = RoundDecision(
            activate=chosen,
            frames={i: adversary.frames.frame_for(round_no, i, config.robot(i).position)
                    for i in chosen},
            truncation={i: adversary.truncation.fraction_for(round_no, i, 0.0)
                        for i in chosen},
        )
        step = sequential_round if sequential else ssynch_round
        before = config
        config, record = step(before, proto, cfg.params, decision, cfg.rigidity,
                              cfg.params.eps_vis)
        rounds += 1
        _emit_round_events(events, record, config)

        for i in alive:
            idle[i] = 0 if i in chosen else idle[i] + 1
        state["moved_once"].update(m.robot for m in record.moves)
        if (state.get("all_moved_round") is None
                and len(state["moved_once"]) >= len(config.robots)):
            state["all_moved_round"] = config.time
        if cfg.objective.get("kind") == "sequential-visibility":
            if state.get("all_moved_round") is not None:
                if not all_pairs_visible(config, cfg.params.eps_vis):
                    state["visibility_lost"] = True

        pos0 = {r.id: r.position for r in before.robots}
        pos1 = {r.id: r.position for r in config.robots}
        v = suite.observe_window(before.time, config.time, pos0, pos1)
        if v is None:
            v = suite.observe_checkpoint(config.time, config,
                                         tuple(m.robot for m in record.moves))
        if v is not None:
            events.append({"kind": "violation", "t": v.time,
                           "vkind": v.kind, "robots": list(v.robots)})
            return events, Verdict("InvariantViolation", v, rounds, rounds,
                                   suite.stats.to_dict(), suite.collision.warnings)

    if _objective_reached(cfg, config, state):
        return events, _final_verdict(cfg, config, suite, rounds, rounds, state)
    return events, Verdict("CapExceeded", None, rounds, rounds,
                           suite.stats.to_dict(), suite.collision.warnings)


class AsynchObserver:
    """Builds trace events from engine records and feeds the monitor suite.

    Shared by the batch runner and interactive sessions so both produce
    identical event streams and violation behavior.
    """

    def __init__(self, suite: MonitorSuite, initial: Configuration) -> None:
        self.suite = suite
        self.prev_t = initial.time
        self.prev_pos = {r.id: r.position for r in initial.robots}

    def observe(self, engine, rec) -> tuple[dict, Violation | None]:
        violation = None
        if rec.time > self.prev_t:
            now = engine.configuration(rec.time)
            pos_now = {r.id: r.position for r in now.robots}
            violation = self.suite.observe_window(self.prev_t, rec.time,
                                                  self.prev_pos, pos_now)
            self.prev_t, self.prev_pos = rec.time, pos_now

        ev: dict = {"kind": rec.kind, "t": rec.time, "robot": rec.robot}
        if rec.kind == "look":
            ev["frame"] = rec.frame.as_dict()
        elif rec.kind == "computeEnd":
            ev["light"] = rec.light
            if rec.terminated:
                ev["terminate"] = True
            if rec.requested is not None:
                ev["pos"] = _point(rec.requested)
                ev["landing"] = _point(rec.realized_target)
                ev["moveEnd"] = rec.move_end_time
                if rec.fraction is not None:
                    ev["realizedFraction"] = rec.fraction
        elif rec.kind == "moveEnd":
            ev["pos"] = _point(rec.position)

        if violation is None and (
                rec.kind == "moveEnd"
                or (rec.kind == "computeEnd" and rec.terminated)):
            cfg_now = engine.configuration(rec.time)
            moved = (rec.robot,) if rec.kind == "moveEnd" else ()
            violation = self.suite.observe_checkpoint(rec.time, cfg_now, moved)
        return ev, violation


def _scripted_asynch(cfg: RunConfig):
    from .scheduler import CycleSpec, ScriptedAsynchAdversary
    per_robot: dict[int, list[CycleSpec]] = {}
    for entry in cfg.activation.get("cycles", []):
        spec = CycleSpec(
            look_delay=float(entry.get("lookDelay", 0.5)),
            compute_duration=float(entry.get("computeDuration", 0.5)),
            move_duration=float(entry.get("moveDuration", 1.0)),
            truncation=float(entry.get("truncation", 1.0)),
        )
        per_robot.setdefault(int(entry["robot"]), []).append(spec)
    return ScriptedAsynchAdversary(per_robot, seed=derive_seed(cfg.seed, "asynch"))


def _run_asynch(cfg: RunConfig, proto, config: Configuration,
                ) -> tuple[list[dict], Verdict]:
    from .config import _frame_policy, _truncation_policy

    if cfg.activation.get("kind") == "scripted":
        adversary = _scripted_asynch(cfg)
    else:
        adversary = AsynchAdversary(
            derive_seed(cfg.seed, "asynch"),
            _frame_policy(cfg), _truncation_policy(cfg),
            max_gap=float(cfg.activation.get("maxGap", 4.0)),
            dur_cap=float(cfg.activation.get("durCap", 1.0)),
        )
    caps = AsynchCaps(max_events=cfg.caps["maxEvents"], max_time=cfg.caps["maxTime"])
    engine = AsynchEngine(config, proto, cfg.params, adversary, cfg.rigidity,
                          caps, faulty=cfg.faulty, eps_vis=cfg.params.eps_vis)
    suite = MonitorSuite(cfg.protocol, cfg.params.eps_geom,
                         cfg.effective_eps_coll(), config, round_based=False,
                         objective=cfg.objective.get("kind", "mutual-visibility"))
    events: list[dict] = []
    state = {"ng_target": float(cfg.objective.get("tolFraction", 1e-3))
             * max(cfg.initial_diameter(), 1e-12)}
    observer = AsynchObserver(suite, config)

    while not engine.done():
        if engine.capped():
            return events, Verdict("CapExceeded", None, 0, engine.events_processed,
                                   suite.stats.to_dict(), suite.collision.warnings)
        rec = engine.step()
        if rec is None:
            break
        ev, v = observer.observe(engine, rec)
        events.append(ev)
        if v is not None:
            events.append({"kind": "violation", "t": v.time,
                           "vkind": v.kind, "robots": list(v.robots)})
            return events, Verdict("InvariantViolation", v, 0,
                                   engine.events_processed,
                                   suite.stats.to_dict(),
                                   suite.collision.warnings)

    final = engine.configuration(engine.time)
    return events, _final_verdict(cfg, final, suite, 0, engine.events_processed, state)
