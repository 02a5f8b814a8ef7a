"""Robot and world state, adversarial local frames, egocentric snapshots.

A :class:`Configuration` is an immutable value describing every robot at one
instant.  Snapshots are what protocols actually see: the obstruction-filtered
set of visible robots, expressed in the observing robot's local coordinate
frame, with no identities and no global coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geometry import EPS_VIS_DEFAULT, Point2, is_visible

# Light colors.  Each protocol declares its own palette; LIGHT_NONE is the
# singleton color of lightless variants so the engine path stays uniform.
LIGHT_OFF = "Off"
LIGHT_VERTEX = "Vertex"
LIGHT_EXTERNAL = "External"
LIGHT_ADJUSTING = "Adjusting"
LIGHT_DONE = "Done"
LIGHT_MOVED = "Moved"
LIGHT_NONE = "None"

STATUS_IDLE = "idle"
STATUS_MOVING = "moving"
STATUS_TERMINATED = "terminated"


class ModelError(ValueError):
    pass


class RobotTerminatedError(ModelError):
    """The observing robot has terminated and can no longer be activated."""


class CollisionPresentError(ModelError):
    """Two robots occupy the same position; snapshots are ill-defined."""


@dataclass(frozen=True)
class LocalFrame:
    """Adversary-chosen local coordinate system of one robot.

    local -> global:  g = origin + scale * R(rotation) * F(reflect) * l
    where F flips the local x axis when ``reflect`` is set.  scale > 0.
    """

    origin: Point2
    rotation: float = 0.0
    reflect: bool = False
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ModelError("frame scale must be positive and finite")

    def to_local(self, p: Point2) -> Point2:
        d = p - self.origin
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        x = (c * d.x + s * d.y) / self.scale
        y = (-s * d.x + c * d.y) / self.scale
        if self.reflect:
            x = -x
        return Point2(x, y)

    def to_global(self, l: Point2) -> Point2:
        x = -l.x if self.reflect else l.x
        y = l.y
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return Point2(
            self.origin.x + self.scale * (c * x - s * y),
            self.origin.y + self.scale * (s * x + c * y),
        )

    def direction_to_local(self, d: Point2) -> Point2:
        """Map a global direction into the frame (ignores origin/scale)."""
        at_origin = LocalFrame(Point2(0.0, 0.0), self.rotation, self.reflect, 1.0)
        return at_origin.to_local(d)

    def as_dict(self) -> dict:
        return {"rotation": self.rotation, "reflect": self.reflect, "scale": self.scale}


IDENTITY_FRAME_SPEC = {"rotation": 0.0, "reflect": False, "scale": 1.0}


def apply_frame_inverse(frame: LocalFrame, local_point: Point2) -> Point2:
    """Map a protocol's local destination back to world coordinates."""
    return frame.to_global(local_point)


@dataclass(frozen=True)
class RobotState:
    id: int
    position: Point2
    light: str
    status: str = STATUS_IDLE
    destination: Point2 | None = None  # set while status == moving
    phase_start: float = 0.0

    @property
    def terminated(self) -> bool:
        return self.status == STATUS_TERMINATED


@dataclass(frozen=True)
class Configuration:
    """Global state of the swarm at one instant."""

    robots: tuple[RobotState, ...]
    time: float = 0.0

    def robot(self, robot_id: int) -> RobotState:
        for r in self.robots:
            if r.id == robot_id:
                return r
        raise ModelError(f"no robot with id {robot_id}")

    def positions(self) -> list[Point2]:
        return [r.position for r in self.robots]

    def alive(self) -> list[RobotState]:
        return [r for r in self.robots if not r.terminated]

    def all_terminated(self) -> bool:
        return all(r.terminated for r in self.robots)

    def with_robot(self, state: RobotState) -> "Configuration":
        return Configuration(
            tuple(state if r.id == state.id else r for r in self.robots),
            self.time,
        )

    def first_collision(self) -> tuple[int, int] | None:
        rs = self.robots
        for i in range(len(rs)):
            for j in range(i + 1, len(rs)):
                if rs[i].position == rs[j].position:
                    return rs[i].id, rs[j].id
        return None


@dataclass(frozen=True)
class Knowledge:
    """A-priori information injected per variant; never inferred."""

    n: int | None = None
    delta: float | None = None
    north: Point2 | None = None  # local unit vector


@dataclass(frozen=True)
class Snapshot:
    """One robot's egocentric view: (local position, light) pairs.

    The first entry is always the observer itself at the exact origin.  No
    ids and no global coordinates are exposed.
    """

    self_light: str
    visible: tuple[tuple[Point2, str], ...]
    knowledge: Knowledge = field(default_factory=Knowledge)

    def positions(self) -> list[Point2]:
        return [p for p, _ in self.visible]

    def others(self) -> list[tuple[Point2, str]]:
        return list(self.visible[1:])

    def lights(self) -> list[str]:
        return [l for _, l in self.visible]


def take_snapshot(config: Configuration, robot_id: int, frame: LocalFrame,
                  knowledge: Knowledge | None = None,
                  eps_vis: float = EPS_VIS_DEFAULT) -> Snapshot:
    """Egocentric, obstruction-filtered view of ``config`` for one robot.

    Raises RobotTerminatedError for terminated observers and
    CollisionPresentError when two robots coincide (the run is already lost
    at that point and a snapshot would be ill-defined).
    """
    me = config.robot(robot_id)
    if me.terminated:
        raise RobotTerminatedError(f"robot {robot_id} has terminated")
    if config.first_collision() is not None:
        raise CollisionPresentError("coincident robots present")

    # is_visible ignores entries coinciding with either endpoint, so the full
    # position list doubles as the blocker list for every pair.
    all_pos = [r.position for r in config.robots]
    entries: list[tuple[Point2, str]] = [(Point2(0.0, 0.0), me.light)]
    others = sorted((r for r in config.robots if r.id != robot_id),
                    key=lambda r: (r.position.x, r.position.y))
    for r in others:
        if is_visible(me.position, r.position, all_pos, eps_vis):
            entries.append((frame.to_local(r.position), r.light))
    # deterministic order: self first, others by local coordinates
    rest = sorted(entries[1:], key=lambda e: (e[0].x, e[0].y))
    return Snapshot(me.light, (entries[0], *rest), knowledge or Knowledge())
