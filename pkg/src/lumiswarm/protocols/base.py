"""Shared protocol types and snapshot-level geometry helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from ..geometry import EPS_GEOM_DEFAULT, EPS_VIS_DEFAULT, Hull, Point2, convex_hull, turn
from ..model import Snapshot

ORIGIN = Point2(0.0, 0.0)


class ProtocolError(ValueError):
    pass


class MissingKnowledgeError(ProtocolError):
    """Snapshot lacks a-priori knowledge the variant depends on."""


class PreconditionNotMetError(ProtocolError):
    pass


@dataclass(frozen=True)
class Action:
    """Outcome of one Compute: new light, local destination, terminate flag."""

    new_light: str
    destination: Point2 = ORIGIN
    terminate: bool = False

    def __post_init__(self) -> None:
        if self.terminate and self.destination != ORIGIN:
            raise ProtocolError("terminating actions must stay put")

    @property
    def moves(self) -> bool:
        return self.destination != ORIGIN


@dataclass(frozen=True)
class ProtocolParams:
    """Tunables shared by the step functions.

    h_positive scales every "move by any positive amount" to a fraction of the
    visible hull length.  eps_adjust switches vertex adjustments to short
    moves that keep the final polygon within a narrow band of the original
    hull.  eps_ng is the near-gathering termination radius.  sigma_step
    bounds the sequential protocol's step as a fraction of the distance to
    the nearest forbidden line.
    """

    h_positive: float = 0.25
    eps_adjust: float | None = None
    eps_ng: float | None = None
    sigma_step: float = 1.0 / 3.0
    eps_geom: float = EPS_GEOM_DEFAULT
    eps_vis: float = EPS_VIS_DEFAULT

    def __post_init__(self) -> None:
        for name in ("h_positive", "sigma_step", "eps_geom", "eps_vis"):
            if getattr(self, name) <= 0:
                raise ProtocolError(f"{name} must be positive")
        for name in ("eps_adjust", "eps_ng"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ProtocolError(f"{name} must be positive when set")


@dataclass(frozen=True)
class Protocol:
    """A named step rule plus its light palette and knowledge needs."""

    name: str
    palette: tuple[str, ...]
    initial_light: str
    step: Callable[[Snapshot, ProtocolParams], Action]
    needs: frozenset[str] = frozenset()  # subset of {"n", "delta", "north"}

    def color_count(self) -> int:
        return len(self.palette)


def stay(light: str) -> Action:
    return Action(light)


def snapshot_hull(snap: Snapshot, params: ProtocolParams) -> Hull:
    return convex_hull(snap.positions(), params.eps_geom)


def light_at(snap: Snapshot, pos: Point2) -> str:
    for p, l in snap.visible:
        if p == pos:
            return l
    raise ProtocolError(f"no visible robot at {pos}")


def orthogonal_direction(points: list[Point2], prefer: Point2 | None = None,
                         eps: float = 1e-12) -> Point2:
    """Unit normal of the line through collinear ``points``.

    Prefers the side of ``prefer`` when given, else positive local y
    (positive x when the line is vertical in local coordinates).
    """
    ref = points[0]
    direction = None
    for p in points[1:]:
        if p.dist(ref) > 0:
            direction = (p - ref).unit()
            break
    if direction is None:
        raise ProtocolError("all points coincide")
    n = direction.perp()
    if prefer is not None and abs(n.dot(prefer)) > eps:
        return n if n.dot(prefer) > 0 else -n
    if abs(n.y) > eps:
        return n if n.y > 0 else -n
    return n if n.x > 0 else -n


def nearest_subedge_midpoint(hull: Hull, origin: Point2 = ORIGIN) -> Point2:
    """Closest midpoint of a boundary piece between consecutive robots."""
    mids = [(a + b) * 0.5 for a, b in hull.edges()]
    if not mids:
        raise ProtocolError("hull has no edges")
    return min(mids, key=lambda m: (origin.dist(m), m.x, m.y))


def edge_fully_visible(origin: Point2, a: Point2, b: Point2,
                       positions: list[Point2], eps: float) -> bool:
    """True iff no visible robot hides any part of segment ab from origin.

    Equivalent test: nothing (other than a, b and the observer) may sit
    strictly inside triangle(origin, a, b).
    """
    if turn(a, b, origin, eps) == 0:
        return False  # edge seen edge-on
    for p in positions:
        if p == origin or p == a or p == b:
            continue
        if (turn(origin, a, p, eps) != 0 and turn(a, b, p, eps) != 0
                and turn(b, origin, p, eps) != 0):
            s1 = turn(origin, a, p, eps)
            if s1 == turn(a, b, p, eps) == turn(b, origin, p, eps):
                return False
        else:
            # On a triangle side: only blocking if between origin and the edge,
            # i.e. on segment origin-a or origin-b interior.
            for corner in (a, b):
                d = corner - origin
                t = (p - origin).dot(d) / d.dot(d)
                if turn(origin, corner, p, eps) == 0 and 0.0 < t < 1.0:
                    return False
    return True


def rotate(v: Point2, angle: float) -> Point2:
    c, s = math.cos(angle), math.sin(angle)
    return Point2(c * v.x - s * v.y, s * v.x + c * v.y)
