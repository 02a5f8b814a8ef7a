"""Mutual visibility under a one-robot-per-turn scheduler.

The active robot steps into the widest angular gap between all lines through
pairs of visible robots (itself included), by an amount small enough to stop
well short of every line it is not already on.  One such move makes the
mover visible to the whole swarm, so after every robot has moved once all
obstructions are gone.  Termination needs extra power: flip a light on the
first move and stop at the next activation, or stop upon seeing n robots.
"""

from __future__ import annotations

import math

from ..geometry import Point2, collinear, point_segment_distance
from ..model import LIGHT_MOVED, LIGHT_OFF, Snapshot
from .base import ORIGIN, Action, MissingKnowledgeError, ProtocolParams, stay

_ANGLE_MERGE = 1e-12


def _forbidden_geometry(pts: list[Point2], eps_geom: float,
                        ) -> tuple[list[float], float]:
    """Directions of lines through the origin and the distance to the
    nearest line that misses it.  ``pts`` excludes the origin itself."""
    directions: list[float] = []
    barrier_dist = math.inf

    def add_direction(v: Point2) -> None:
        ang = math.atan2(v.y, v.x) % math.pi
        for a in (ang, ang + math.pi):
            a %= 2.0 * math.pi
            if not any(abs(a - e) <= _ANGLE_MERGE for e in directions):
                directions.append(a)

    for p in pts:
        add_direction(p)  # line through me and p
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            p, q = pts[i], pts[j]
            if collinear(p, q, ORIGIN, eps_geom):
                add_direction(q - p)
            else:
                d = q - p
                dist = abs(d.cross(ORIGIN - p)) / d.norm()
                barrier_dist = min(barrier_dist, dist)
    if math.isinf(barrier_dist):
        barrier_dist = min(p.norm() for p in pts)
    return sorted(directions), barrier_dist


def _gap_bisectors(angles: list[float]) -> list[tuple[float, float]]:
    """(width, bisector) of every angular gap between forbidden directions."""
    out = []
    for i, a in enumerate(angles):
        b = angles[(i + 1) % len(angles)]
        width = (b - a) % (2.0 * math.pi)
        if width == 0.0:
            width = 2.0 * math.pi
        out.append((width, (a + width / 2.0) % (2.0 * math.pi)))
    return out


def _clearance(dest: Point2, pts: list[Point2]) -> float:
    """Distance from dest to the nearest line through two visible robots."""
    best = math.inf
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = pts[j] - pts[i]
            n = d.norm()
            if n == 0.0:
                continue
            best = min(best, abs(d.cross(dest - pts[i])) / n)
    return best


def sequential_step(snap: Snapshot, params: ProtocolParams,
                    termination: str = "none") -> Action:
    """One activation under the sequential scheduler.

    ``termination`` selects the stop rule: "none" never stops, "two-color"
    flips the light on the first move and stops next time, "n-known" stops
    upon seeing n robots.
    """
    light = snap.self_light
    if termination == "two-color" and light == LIGHT_MOVED:
        return Action(LIGHT_MOVED, terminate=True)
    if termination == "n-known":
        if snap.knowledge.n is None:
            raise MissingKnowledgeError("n knowledge required")
        if len(snap.positions()) >= snap.knowledge.n:
            return Action(light, terminate=True)

    others = [p for p, _ in snap.others()]
    if not others:
        return stay(light)

    angles, barrier = _forbidden_geometry(others, params.eps_geom)
    step = params.sigma_step * barrier
    # Any gap bisector is admissible (the whole step stays inside the
    # barrier-distance disk); picking the one that lands farthest from every
    # robot-pair line keeps clearances from decaying over long runs.
    best_dest = None
    best_score = (-math.inf, -math.inf)
    for width, bisector in _gap_bisectors(angles):
        dest = Point2(math.cos(bisector), math.sin(bisector)) * step
        score = (_clearance(dest, others), width)
        if score > best_score:
            best_score = score
            best_dest = dest
    new_light = LIGHT_MOVED if (termination == "two-color" and light == LIGHT_OFF) else light
    return Action(new_light, best_dest)
