"""Adversary-parameterized activation and timing engines.

The adversary controls who acts (activation policy), how each robot sees the
world (frame policy) and where moves get cut short (truncation policy, under
non-rigid movement).  Policies are deterministic given their seeds, so whole
runs replay bit-identically.  The semi-synchronous engine advances one round
at a time; the asynchronous engine is an event queue over instantaneous
Looks, timed Computes and linearly interpolated Moves.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field, replace

from .geometry import Point2
from .model import (
    STATUS_IDLE,
    STATUS_MOVING,
    STATUS_TERMINATED,
    Configuration,
    Knowledge,
    LocalFrame,
    RobotState,
    Snapshot,
    take_snapshot,
)
from .protocols import Action, Protocol, ProtocolParams

WORLD_NORTH = Point2(0.0, 1.0)


class SchedulerError(ValueError):
    pass


class EmptyActivationError(SchedulerError):
    """A scripted policy activated nobody while robots remain."""


class FairnessViolationError(SchedulerError):
    """A scripted policy starved a robot beyond the fairness window."""


class IllegalDecisionError(SchedulerError):
    """A decision activates a terminated robot or is otherwise malformed."""


def derive_seed(master: int, label: str) -> int:
    """Stable sub-seed derivation (independent of hash randomization)."""
    digest = hashlib.sha256(f"{master}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class RigidityModel:
    kind: str = "rigid"  # "rigid" | "nonRigid"
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("rigid", "nonRigid"):
            raise SchedulerError(f"unknown rigidity {self.kind!r}")
        if self.kind == "nonRigid" and self.delta <= 0:
            raise SchedulerError("nonRigid requires delta > 0")

    def realize(self, requested: float, fraction: float) -> float:
        """Length actually travelled for a requested move length."""
        if self.kind == "rigid" or requested <= self.delta:
            return requested
        return min(requested, max(self.delta, fraction * requested))


# ---------------------------------------------------------------------------
# per-round decisions


@dataclass
class RoundDecision:
    """Everything the adversary decides for one semi-synchronous round."""

    activate: list[int]
    frames: dict[int, LocalFrame] = field(default_factory=dict)
    truncation: dict[int, float] = field(default_factory=dict)

    def frame_for(self, robot_id: int, position: Point2) -> LocalFrame:
        f = self.frames.get(robot_id)
        if f is None:
            return LocalFrame(position)
        return replace(f, origin=position)

    def fraction_for(self, robot_id: int) -> float:
        return self.truncation.get(robot_id, 1.0)


class ActivationPolicy:
    kind = "abstract"

    def choose(self, round_no: int, alive: list[int], required: list[int]) -> list[int]:
        raise NotImplementedError


class FullActivation(ActivationPolicy):
    kind = "full"

    def choose(self, round_no, alive, required):
        return list(alive)


class RoundRobinActivation(ActivationPolicy):
    kind = "roundRobin"

    def __init__(self) -> None:
        self._cursor = 0

    def choose(self, round_no, alive, required):
        if not alive:
            return []
        pick = alive[self._cursor % len(alive)]
        self._cursor += 1
        return [pick]


class RandomFairActivation(ActivationPolicy):
    """Random non-empty subsets; starving robots get force-included."""

    kind = "randomFair"

    def __init__(self, seed: int, singleton: bool = False) -> None:
        self._rng = random.Random(seed)
        self._singleton = singleton

    def choose(self, round_no, alive, required):
        if not alive:
            return []
        if self._singleton:
            if required:
                return [required[0]]
            return [self._rng.choice(alive)]
        chosen = [r for r in alive if self._rng.random() < 0.5]
        for r in required:
            if r not in chosen:
                chosen.append(r)
        if not chosen:
            chosen = [self._rng.choice(alive)]
        return sorted(chosen)


class ScriptedActivation(ActivationPolicy):
    """Plays back a fixed per-round activation list.

    Scripts are static while terminations are not, so scripted sets are
    masked to the currently alive robots; a round whose masked set is empty
    becomes a no-op round.  Fairness violations still surface through the
    runner's window bookkeeping.
    """

    kind = "scripted"

    def __init__(self, rounds: list[list[int]]) -> None:
        self._rounds = rounds

    def choose(self, round_no, alive, required):
        if round_no >= len(self._rounds):
            raise EmptyActivationError(f"script ended before round {round_no}")
        scripted = self._rounds[round_no]
        if not scripted and alive:
            raise EmptyActivationError(f"round {round_no}: empty activation set")
        return [r for r in scripted if r in alive]


class FramePolicy:
    kind = "identity"

    def frame_for(self, round_no: int, robot_id: int, position: Point2) -> LocalFrame:
        return LocalFrame(position)


class RandomFramePolicy(FramePolicy):
    """Fresh rotation/handedness/unit per activation."""

    kind = "randomPerActivation"

    def __init__(self, seed: int, scale_range: tuple[float, float] = (0.5, 2.0)) -> None:
        self._rng = random.Random(seed)
        self._scale_range = scale_range

    def frame_for(self, round_no, robot_id, position):
        return LocalFrame(
            position,
            rotation=self._rng.uniform(0.0, 2.0 * math.pi),
            reflect=self._rng.random() < 0.5,
            scale=self._rng.uniform(*self._scale_range),
        )


class ScriptedFramePolicy(FramePolicy):
    kind = "scripted"

    def __init__(self, frames: dict[tuple[int, int], LocalFrame]) -> None:
        self._frames = frames  # (round, robot) -> frame (origin ignored)

    def frame_for(self, round_no, robot_id, position):
        f = self._frames.get((round_no, robot_id))
        if f is None:
            return LocalFrame(position)
        return replace(f, origin=position)


class TruncationPolicy:
    kind = "none"

    def fraction_for(self, round_no: int, robot_id: int, requested: float) -> float:
        return 1.0


class RandomTruncation(TruncationPolicy):
    kind = "randomFair"

    def __init__(self, seed: int) -> None:
        self._rng = random.Random(seed)

    def fraction_for(self, round_no, robot_id, requested):
        return self._rng.random()


class WorstTruncation(TruncationPolicy):
    """Stop every truncatable move at the minimum guaranteed distance."""

    kind = "worst"

    def fraction_for(self, round_no, robot_id, requested):
        return 0.0


class ScriptedTruncation(TruncationPolicy):
    kind = "scripted"

    def __init__(self, fractions: dict[tuple[int, int], float]) -> None:
        self._fractions = fractions

    def fraction_for(self, round_no, robot_id, requested):
        return self._fractions.get((round_no, robot_id), 1.0)


@dataclass
class Adversary:
    activation: ActivationPolicy
    frames: FramePolicy
    truncation: TruncationPolicy
    fairness_window: int = 0  # 0: derived as 2n by the runner


# ---------------------------------------------------------------------------
# knowledge injection


def knowledge_for(protocol: Protocol, frame: LocalFrame, n: int,
                  rigidity: RigidityModel) -> Knowledge:
    """Per-variant a-priori information, expressed in the robot's own units."""
    kn = Knowledge()
    if "n" in protocol.needs:
        kn = replace(kn, n=n)
    if "delta" in protocol.needs:
        delta = rigidity.delta if rigidity.kind == "nonRigid" else 0.0
        kn = replace(kn, delta=delta / frame.scale if delta else None)
    if "north" in protocol.needs:
        kn = replace(kn, north=frame.direction_to_local(WORLD_NORTH).unit())
    return kn


def localize_params(params: ProtocolParams, frame: LocalFrame) -> ProtocolParams:
    """Rescale world-length parameters into the robot's unit distance."""
    if frame.scale == 1.0:
        return params
    changes = {}
    if params.eps_adjust is not None:
        changes["eps_adjust"] = params.eps_adjust / frame.scale
    if params.eps_ng is not None:
        changes["eps_ng"] = params.eps_ng / frame.scale
    return replace(params, **changes) if changes else params


# ---------------------------------------------------------------------------
# semi-synchronous rounds


@dataclass(frozen=True)
class MoveRecord:
    robot: int
    start: Point2
    requested: Point2
    realized: Point2
    fraction: float


@dataclass(frozen=True)
class RoundRecord:
    round_no: int
    activated: tuple[int, ...]
    frames: dict[int, LocalFrame]
    actions: dict[int, Action]
    moves: tuple[MoveRecord, ...]
    terminated: tuple[int, ...]
    lights: dict[int, str]


def ssynch_round(config: Configuration, protocol: Protocol, params: ProtocolParams,
                 decision: RoundDecision, rigidity: RigidityModel,
                 eps_vis: float = 1e-9) -> tuple[Configuration, RoundRecord]:
    """One atomic round: snapshots from the pre-round state, simultaneous
    light writes, moves resolved under the rigidity model, then terminations."""
    if not decision.activate:
        raise EmptyActivationError("round with empty activation set")
    for rid in decision.activate:
        if config.robot(rid).terminated:
            raise IllegalDecisionError(f"robot {rid} has terminated")

    n = len(config.robots)
    frames: dict[int, LocalFrame] = {}
    actions: dict[int, Action] = {}
    moves: list[MoveRecord] = []
    terminated: list[int] = []
    lights: dict[int, str] = {}

    for rid in sorted(decision.activate):
        me = config.robot(rid)
        frame = decision.frame_for(rid, me.position)
        frames[rid] = frame
        kn = knowledge_for(protocol, frame, n, rigidity)
        snap = take_snapshot(config, rid, frame, kn, eps_vis)
        action = protocol.step(snap, localize_params(params, frame))
        if action.new_light not in protocol.palette:
            raise SchedulerError(
                f"{protocol.name} produced light {action.new_light!r} outside palette")
        actions[rid] = action

    new_states: dict[int, RobotState] = {}
    for rid, action in actions.items():
        me = config.robot(rid)
        frame = frames[rid]
        light = action.new_light
        if light != me.light:
            lights[rid] = light
        if action.terminate:
            terminated.append(rid)
            new_states[rid] = replace(me, light=light, status=STATUS_TERMINATED)
            continue
        target = frame.to_global(action.destination)
        requested_len = target.dist(me.position)
        if requested_len == 0.0:
            new_states[rid] = replace(me, light=light)
            continue
        fraction = decision.fraction_for(rid)
        realized_len = rigidity.realize(requested_len, fraction)
        if realized_len >= requested_len:
            landing = target
        else:
            landing = me.position + (target - me.position) * (realized_len / requested_len)
        moves.append(MoveRecord(rid, me.position, target, landing,
                                realized_len / requested_len))
        new_states[rid] = replace(me, position=landing, light=light)

    new_config = Configuration(
        tuple(new_states.get(r.id, r) for r in config.robots),
        config.time + 1.0,
    )
    record = RoundRecord(
        round_no=int(config.time),
        activated=tuple(sorted(decision.activate)),
        frames=frames,
        actions=actions,
        moves=tuple(moves),
        terminated=tuple(terminated),
        lights=lights,
    )
    return new_config, record


def sequential_round(config: Configuration, protocol: Protocol,
                     params: ProtocolParams, decision: RoundDecision,
                     rigidity: RigidityModel,
                     eps_vis: float = 1e-9) -> tuple[Configuration, RoundRecord]:
    """ssynch_round restricted to exactly one activated robot."""
    if len(decision.activate) != 1:
        raise IllegalDecisionError("sequential scheduler activates exactly one robot")
    return ssynch_round(config, protocol, params, decision, rigidity, eps_vis)


# ---------------------------------------------------------------------------
# asynchronous event engine


LOOK, COMPUTE_END, MOVE_END = "look", "computeEnd", "moveEnd"
_KIND_ORDER = {MOVE_END: 0, COMPUTE_END: 1, LOOK: 2}


@dataclass(frozen=True)
class AsynchEvent:
    time: float
    robot: int
    kind: str


@dataclass
class AsynchCaps:
    max_events: int = 100_000
    max_time: float = math.inf


@dataclass
class CycleSpec:
    """Adversary choices for one robot activation cycle."""

    look_delay: float
    compute_duration: float
    move_duration: float
    truncation: float = 1.0
    frame: LocalFrame | None = None


class AsynchAdversary:
    """Supplies cycle timings; deterministic given its seed."""

    def __init__(self, seed: int, frames: FramePolicy,
                 truncation: TruncationPolicy,
                 max_gap: float = 4.0, dur_cap: float = 1.0) -> None:
        self._rng = random.Random(seed)
        self._frames = frames
        self._truncation = truncation
        self.max_gap = max_gap
        self.dur_cap = dur_cap

    def next_cycle(self, cycle_no: int, robot_id: int, position: Point2) -> CycleSpec:
        return CycleSpec(
            look_delay=self._rng.uniform(0.0, self.max_gap),
            compute_duration=self._rng.uniform(1e-3, self.dur_cap),
            move_duration=self._rng.uniform(1e-3, self.dur_cap),
            truncation=self._truncation.fraction_for(cycle_no, robot_id, 1.0),
            frame=self._frames.frame_for(cycle_no, robot_id, position),
        )


class ScriptedAsynchAdversary(AsynchAdversary):
    """Plays back explicit cycle specs per robot, then falls back to random."""

    def __init__(self, scripted: dict[int, list[CycleSpec]], seed: int = 0) -> None:
        super().__init__(seed, FramePolicy(), TruncationPolicy())
        self._scripted = {r: list(specs) for r, specs in scripted.items()}

    def next_cycle(self, cycle_no, robot_id, position):
        queue = self._scripted.get(robot_id)
        if queue:
            spec = queue.pop(0)
            if spec.frame is not None:
                spec = replace(spec, frame=replace(spec.frame, origin=position))
            return spec
        return super().next_cycle(cycle_no, robot_id, position)


@dataclass
class _RobotRuntime:
    state: RobotState
    phase: str = STATUS_IDLE        # idle | computing | moving | terminated
    move_start_time: float = 0.0
    move_end_time: float = 0.0
    move_from: Point2 | None = None
    move_to: Point2 | None = None   # realized endpoint
    pending_action: Action | None = None
    pending_frame: LocalFrame | None = None
    cycle_no: int = 0

    def position_at(self, t: float) -> Point2:
        if self.phase != STATUS_MOVING or self.move_from is None:
            return self.state.position
        if t >= self.move_end_time:
            return self.move_to
        span = self.move_end_time - self.move_start_time
        if span <= 0.0:
            return self.move_to
        frac = (t - self.move_start_time) / span
        return self.move_from + (self.move_to - self.move_from) * frac


@dataclass(frozen=True)
class AsynchEventRecord:
    time: float
    robot: int
    kind: str
    frame: LocalFrame | None = None
    light: str | None = None
    requested: Point2 | None = None
    realized_target: Point2 | None = None
    move_end_time: float | None = None
    position: Point2 | None = None
    fraction: float | None = None
    terminated: bool = False


@dataclass(frozen=True)
class MotionSegment:
    robot: int
    t0: float
    t1: float
    p0: Point2
    p1: Point2


class AsynchEngine:
    """Continuous-time simulation of Look / Compute / Move cycles.

    Looks are instantaneous; Compute and Move take adversary-chosen positive
    durations; a moving robot travels linearly at constant speed toward the
    (possibly truncated) landing point and is seen mid-flight by anyone who
    Looks.  Lights become visible at the end of the Compute.
    """

    def __init__(self, config: Configuration, protocol: Protocol,
                 params: ProtocolParams, adversary: AsynchAdversary,
                 rigidity: RigidityModel, caps: AsynchCaps,
                 faulty: tuple[int, ...] = (), eps_vis: float = 1e-9) -> None:
        self.protocol = protocol
        self.params = params
        self.adversary = adversary
        self.rigidity = rigidity
        self.caps = caps
        self.eps_vis = eps_vis
        self.time = config.time
        self.events_processed = 0
        self.records: list[AsynchEventRecord] = []
        self.segments: list[MotionSegment] = []
        self._runtime = {r.id: _RobotRuntime(state=r) for r in config.robots}
        self._queue: list[tuple[float, int, int, str]] = []
        self._faulty = set(faulty)
        self._n = len(config.robots)
        self.awaiting_cycle: list[int] = []  # robots parked for a cycle spec
        for r in config.robots:
            if r.terminated or r.id in self._faulty:
                continue
            spec = adversary.next_cycle(0, r.id, r.position)
            if spec is None:
                self.awaiting_cycle.append(r.id)
                continue
            self._push(self.time + spec.look_delay, r.id, LOOK)
            self._runtime[r.id].pending_frame = spec.frame
            self._runtime[r.id]._spec = spec  # type: ignore[attr-defined]

    def provide_cycle(self, robot_id: int, spec: CycleSpec) -> None:
        """Schedule the next Look of a robot parked in ``awaiting_cycle``."""
        if robot_id not in self.awaiting_cycle:
            raise SchedulerError(f"robot {robot_id} is not awaiting a cycle")
        self.awaiting_cycle.remove(robot_id)
        rt = self._runtime[robot_id]
        if spec.frame is not None:
            spec = replace(spec, frame=replace(spec.frame, origin=rt.state.position))
        rt._spec = spec  # type: ignore[attr-defined]
        self._push(self.time + spec.look_delay, robot_id, LOOK)

    def _push(self, t: float, robot: int, kind: str) -> None:
        import heapq
        heapq.heappush(self._queue, (t, _KIND_ORDER[kind], robot, kind))

    def _pop(self) -> tuple[float, int, str] | None:
        import heapq
        if not self._queue:
            return None
        t, _, robot, kind = heapq.heappop(self._queue)
        return t, robot, kind

    def configuration(self, t: float | None = None) -> Configuration:
        t = self.time if t is None else t
        states = []
        for rid in sorted(self._runtime):
            rt = self._runtime[rid]
            states.append(replace(rt.state, position=rt.position_at(t)))
        return Configuration(tuple(states), t)

    def done(self) -> bool:
        return all(rt.phase == STATUS_TERMINATED or rid in self._faulty
                   for rid, rt in self._runtime.items())

    def capped(self) -> bool:
        return (self.events_processed >= self.caps.max_events
                or self.time >= self.caps.max_time)

    def step(self) -> AsynchEventRecord | None:
        """Process one event; None when the queue is exhausted."""
        nxt = self._pop()
        if nxt is None:
            return None
        t, rid, kind = nxt
        self.time = max(self.time, t)
        self.events_processed += 1
        rt = self._runtime[rid]

        if kind == LOOK:
            return self._do_look(t, rt)
        if kind == COMPUTE_END:
            return self._do_compute_end(t, rt)
        return self._do_move_end(t, rt)

    def _do_look(self, t: float, rt: _RobotRuntime) -> AsynchEventRecord:
        rid = rt.state.id
        spec: CycleSpec = rt._spec  # type: ignore[attr-defined]
        frame = spec.frame or LocalFrame(rt.state.position)
        frame = replace(frame, origin=rt.state.position)
        snap_config = self.configuration(t)
        kn = knowledge_for(self.protocol, frame, self._n, self.rigidity)
        snapshot = take_snapshot(snap_config, rid, frame, kn, self.eps_vis)
        action = self.protocol.step(snapshot, localize_params(self.params, frame))
        rt.pending_action = action
        rt.pending_frame = frame
        rt.phase = "computing"
        self._push(t + spec.compute_duration, rid, COMPUTE_END)
        rec = AsynchEventRecord(time=t, robot=rid, kind=LOOK, frame=frame)
        self.records.append(rec)
        return rec

    def _do_compute_end(self, t: float, rt: _RobotRuntime) -> AsynchEventRecord:
        rid = rt.state.id
        spec: CycleSpec = rt._spec  # type: ignore[attr-defined]
        action = rt.pending_action
        rt.state = replace(rt.state, light=action.new_light)

        if action.terminate:
            rt.phase = STATUS_TERMINATED
            rt.state = replace(rt.state, status=STATUS_TERMINATED)
            rec = AsynchEventRecord(time=t, robot=rid, kind=COMPUTE_END,
                                    light=action.new_light, terminated=True)
            self.records.append(rec)
            return rec

        target = rt.pending_frame.to_global(action.destination)
        requested_len = target.dist(rt.state.position)
        if requested_len == 0.0:
            # zero-length move: the Move phase degenerates to a point in time
            rt.phase = STATUS_IDLE
            self._schedule_next_look(t, rt)
            rec = AsynchEventRecord(time=t, robot=rid, kind=COMPUTE_END,
                                    light=action.new_light, requested=target,
                                    realized_target=target, move_end_time=t)
            self.records.append(rec)
            return rec

        realized_len = self.rigidity.realize(requested_len, spec.truncation)
        landing = (target if realized_len >= requested_len else
                   rt.state.position + (target - rt.state.position) * (realized_len / requested_len))
        rt.phase = STATUS_MOVING
        rt.move_start_time = t
        rt.move_end_time = t + spec.move_duration
        rt.move_from = rt.state.position
        rt.move_to = landing
        self.segments.append(MotionSegment(rid, t, rt.move_end_time,
                                           rt.move_from, landing))
        self._push(rt.move_end_time, rid, MOVE_END)
        rec = AsynchEventRecord(time=t, robot=rid, kind=COMPUTE_END,
                                light=action.new_light, requested=target,
                                realized_target=landing,
                                move_end_time=rt.move_end_time,
                                fraction=realized_len / requested_len)
        self.records.append(rec)
        return rec

    def _do_move_end(self, t: float, rt: _RobotRuntime) -> AsynchEventRecord:
        rid = rt.state.id
        rt.state = replace(rt.state, position=rt.move_to)
        rt.phase = STATUS_IDLE
        rt.move_from = rt.move_to = None
        self._schedule_next_look(t, rt)
        rec = AsynchEventRecord(time=t, robot=rid, kind=MOVE_END,
                                position=rt.state.position)
        self.records.append(rec)
        return rec

    def _schedule_next_look(self, t: float, rt: _RobotRuntime) -> None:
        rid = rt.state.id
        rt.cycle_no += 1
        spec = self.adversary.next_cycle(rt.cycle_no, rid, rt.state.position)
        if spec is None:
            self.awaiting_cycle.append(rid)
            return
        rt._spec = spec  # type: ignore[attr-defined]
        self._push(t + spec.look_delay, rid, LOOK)

    def run(self) -> str:
        """Drive to completion; returns "done" or "capped"."""
        while not self.done():
            if self.capped():
                return "capped"
            if self.step() is None:
                return "done" if self.done() else "capped"
        return "done"
