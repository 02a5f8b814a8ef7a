"""Hull-shrinking mutual-visibility protocol (2 colors) and its variants.

The basic rule: only robots sitting at non-degenerate vertices of their
visible convex hull move.  A vertex robot heads halfway toward the midpoint
of its two boundary neighbors, but never crosses a line parallel to the
neighbor chord through another visible robot: it lands exactly on the
closest such line, which turns the robot on that line into a new hull
vertex.  Lights announce vertex status; a robot that sees only lit robots
knows it sees everyone and terminates.
"""

from __future__ import annotations

import math

from ..geometry import (
    DegenerateBasisError,
    Hull,
    Point2,
    coeffs_along,
    convex_hull,
    hull_neighbors,
)
from ..model import LIGHT_NONE, LIGHT_OFF, LIGHT_VERTEX, Snapshot
from .base import (
    ORIGIN,
    Action,
    MissingKnowledgeError,
    ProtocolParams,
    light_at,
    nearest_subedge_midpoint,
    orthogonal_direction,
    snapshot_hull,
    stay,
)

_COEFF_TIE = 1e-12


def _constrained_move(snap: Snapshot, hull: Hull,
                      params: ProtocolParams) -> Point2 | None:
    """Destination of a vertex robot: head for the neighbor-chord midpoint,
    stopping on the nearest parallel line through another robot.

    None when the corner is numerically flat (the neighbor directions fail
    the basis test even though the vertex flag passed): such a robot treats
    itself as degenerate and waits.
    """
    a, b = hull_neighbors(hull, ORIGIN)
    u = a * 0.5
    gamma = 0.5
    try:
        for r, _light in snap.others():
            alpha, beta = coeffs_along(a, b, r, params.eps_geom)
            s = alpha + beta
            if s < gamma - _COEFF_TIE:
                u, gamma = r, s
            elif abs(s - gamma) <= _COEFF_TIE:
                du, dr = u.dist(b), r.dist(b)
                if dr < du - _COEFF_TIE or (abs(dr - du) <= _COEFF_TIE
                                            and (r.x, r.y) < (u.x, u.y)):
                    u = r
    except DegenerateBasisError:
        return None
    v = b * gamma
    return (u + v) * 0.5


def _orthogonal_escape(snap: Snapshot, hull: Hull, params: ProtocolParams,
                       length: float | None = None) -> Point2:
    d = orthogonal_direction(snap.positions())
    return d * (length if length is not None else params.h_positive * hull.length())


def shrink_step(snap: Snapshot, params: ProtocolParams) -> Action:
    """One activation of the 2-color hull-shrinking rule."""
    pts = snap.positions()
    if len(pts) == 1:
        return stay(snap.self_light)
    hull = snapshot_hull(snap, params)

    if len(pts) == 3 and hull.is_segment:
        # Sandwiched between two collinear robots: step off the line.
        return Action(snap.self_light, _orthogonal_escape(snap, hull, params))

    if hull.is_vertex(ORIGIN):
        if all(l == LIGHT_VERTEX for _, l in snap.others()):
            return Action(LIGHT_VERTEX, terminate=True)
        if len(pts) > 2:
            dest = _constrained_move(snap, hull, params)
            if dest is not None:
                return Action(LIGHT_VERTEX, dest)
        return Action(LIGHT_VERTEX)

    if (all(l == LIGHT_VERTEX for _, l in snap.others())
            and hull.strictly_inside(ORIGIN)):
        # Sole hidden robot: join the boundary at the nearest edge midpoint.
        return Action(snap.self_light, nearest_subedge_midpoint(hull))
    return stay(snap.self_light)


def shrink_near_gathering(snap: Snapshot, params: ProtocolParams) -> Action:
    """Keep shrinking forever: convergence to a point without collisions.

    Lightless mode (palette {None}) drops all light writes, the termination
    rule and the boundary-joining move of the sole interior robot.  With the
    2-color palette and ``eps_ng`` set, robots do terminate once everyone
    they see is lit and packed within eps_ng.
    """
    lightless = snap.self_light == LIGHT_NONE
    if not lightless and params.eps_ng is None:
        raise MissingKnowledgeError("2-color near-gathering requires eps_ng")

    pts = snap.positions()
    if len(pts) == 1:
        return stay(snap.self_light)
    hull = snapshot_hull(snap, params)

    if len(pts) == 3 and hull.is_segment:
        return Action(snap.self_light, _orthogonal_escape(snap, hull, params))

    if hull.is_vertex(ORIGIN):
        if lightless:
            if len(pts) > 2:
                dest = _constrained_move(snap, hull, params)
                if dest is not None:
                    return Action(LIGHT_NONE, dest)
            return stay(LIGHT_NONE)
        if all(l == LIGHT_VERTEX for _, l in snap.others()):
            diam = max((p.dist(q) for p in pts for q in pts), default=0.0)
            if diam < params.eps_ng:
                return Action(LIGHT_VERTEX, terminate=True)
        if len(pts) > 2:
            dest = _constrained_move(snap, hull, params)
            if dest is not None:
                return Action(LIGHT_VERTEX, dest)
        return Action(LIGHT_VERTEX)

    if (not lightless
            and all(l == LIGHT_VERTEX for _, l in snap.others())
            and hull.strictly_inside(ORIGIN)):
        return Action(snap.self_light, nearest_subedge_midpoint(hull))
    return stay(snap.self_light)


def _post_move_is_vertex(snap: Snapshot, dest: Point2, eps: float) -> bool:
    pts = [dest] + [p for p, _ in snap.others()]
    return convex_hull(pts, eps).is_vertex(dest)


def shrink_delta_known(snap: Snapshot, params: ProtocolParams) -> Action:
    """2-color shrinking that stays safe under adversarial truncation.

    Knowing the guaranteed minimum travel ``delta`` allows two fixes: a
    vertex robot whose chord-midpoint path is blocked by an unlit robot
    closer than delta slides next to that robot on its parallel line (the
    move is shorter than delta, so it cannot be cut short and the blocker
    joins the hull); the last interior robot waits until the visible hull is
    smaller than delta before darting to an edge midpoint.
    """
    delta = snap.knowledge.delta
    if delta is None:
        raise MissingKnowledgeError("delta knowledge required")

    pts = snap.positions()
    if len(pts) == 1:
        return stay(snap.self_light)
    hull = snapshot_hull(snap, params)

    if len(pts) == 3 and hull.is_segment:
        return Action(snap.self_light, _orthogonal_escape(snap, hull, params))

    if hull.is_vertex(ORIGIN):
        if all(l == LIGHT_VERTEX for _, l in snap.others()):
            return Action(LIGHT_VERTEX, terminate=True)
        if len(pts) <= 2:
            return Action(LIGHT_VERTEX)

        a, b = hull_neighbors(hull, ORIGIN)
        mid = (a + b) * 0.5
        eps_nudge = 1e-6 * hull.length()
        blocker = None
        for r, light in snap.others():
            if light != LIGHT_OFF or r.norm() >= delta:
                continue
            t = r.dot(mid) / mid.dot(mid)
            if 0.0 < t < 1.0 and (mid * t).dist(r) <= params.eps_vis * max(1.0, mid.norm()):
                if blocker is None or r.norm() < blocker.norm():
                    blocker = r
        if blocker is not None:
            try:
                alpha, beta = coeffs_along(a, b, blocker, params.eps_geom)
            except DegenerateBasisError:
                return Action(LIGHT_VERTEX)  # numerically flat corner: wait
            toward_b = b * (alpha + beta) - blocker
            if toward_b.norm() == 0.0:
                toward_b = b - a
            dest = blocker + toward_b.unit() * eps_nudge
            new_light = LIGHT_VERTEX if _post_move_is_vertex(snap, dest, params.eps_geom) else LIGHT_OFF
            return Action(new_light, dest)
        dest = _constrained_move(snap, hull, params)
        if dest is not None:
            return Action(LIGHT_VERTEX, dest)
        return Action(LIGHT_VERTEX)

    if (all(l == LIGHT_VERTEX for _, l in snap.others())
            and hull.strictly_inside(ORIGIN)):
        if hull.diameter() < delta:
            # Short enough to be untruncatable: join the boundary reliably.
            return Action(snap.self_light, nearest_subedge_midpoint(hull))
        return stay(snap.self_light)
    return stay(snap.self_light)


def shrink_n_known(snap: Snapshot, params: ProtocolParams) -> Action:
    """Lightless shrinking for robots that know the swarm size.

    Counting non-degenerate vertices of the visible hull replaces the light
    channel: n vertices means everyone is mutually visible, n-1 plus an
    interior view means the observer is the only robot left inside.
    """
    n = snap.knowledge.n
    if n is None:
        raise MissingKnowledgeError("n knowledge required")

    pts = snap.positions()
    if len(pts) == 1:
        return Action(snap.self_light, terminate=(n == 1))
    hull = snapshot_hull(snap, params)
    vertex_count = sum(hull.vertex_flags)

    if vertex_count == n and len(pts) == n:
        return Action(snap.self_light, terminate=True)

    if len(pts) == 3 and hull.is_segment:
        return Action(snap.self_light, _orthogonal_escape(snap, hull, params))

    if hull.is_vertex(ORIGIN):
        if len(pts) > 2:
            dest = _constrained_move(snap, hull, params)
            if dest is not None:
                return Action(snap.self_light, dest)
        return stay(snap.self_light)

    if hull.strictly_inside(ORIGIN) and vertex_count == n - 1:
        return Action(snap.self_light, nearest_subedge_midpoint(hull))
    return stay(snap.self_light)
