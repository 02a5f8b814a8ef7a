"""Circle formation: drive a strictly convex swarm onto its smallest
enclosing circle.

Robots already on the circle hold still; a robot inside it slides outward
along the extension of one of its incident hull edges, choosing the edge
away from an on-circle neighbor, so the circle itself never changes.  Entry
into this phase is synchronized by light: every visible robot must have
finished adjusting (Adjusting in the semi-synchronous variant, the extra
Done state under full asynchrony).
"""

from __future__ import annotations

import math

from ..geometry import Point2, hull_neighbors, smallest_enclosing_circle
from ..model import (
    LIGHT_ADJUSTING,
    LIGHT_DONE,
    LIGHT_EXTERNAL,
    LIGHT_OFF,
    Snapshot,
)
from .base import (
    ORIGIN,
    Action,
    PreconditionNotMetError,
    ProtocolParams,
    light_at,
    orthogonal_direction,
    snapshot_hull,
    stay,
)
from .contain import _adjust_destination, _interior_depletion, _is_acute_at_origin


def circle_formation_step(snap: Snapshot, params: ProtocolParams,
                          accept: tuple[str, ...] = (LIGHT_ADJUSTING, LIGHT_DONE),
                          ) -> Action:
    """One activation of the pure circle phase.

    Requires every visible light (self included) in ``accept`` and a strictly
    convex configuration; raises PreconditionNotMetError otherwise.
    """
    light = snap.self_light
    if not all(l in accept for l in snap.lights()):
        raise PreconditionNotMetError("circle phase needs every visible robot synchronized")
    pts = snap.positions()
    if len(pts) == 1:
        return Action(light, terminate=True)

    sec = smallest_enclosing_circle(pts)
    eps_on = max(params.eps_geom * sec.radius, 1e-12)

    def on_circle(p: Point2) -> bool:
        return abs(p.dist(sec.center) - sec.radius) <= eps_on

    if on_circle(ORIGIN):
        if all(on_circle(p) for p in pts):
            return Action(light, terminate=True)
        return stay(light)

    hull = snapshot_hull(snap, params)
    if not hull.is_vertex(ORIGIN):
        raise PreconditionNotMetError("circle phase needs a strictly convex swarm")
    ccw, cw = hull_neighbors(hull, ORIGIN)
    on_ccw, on_cw = on_circle(ccw), on_circle(cw)
    if on_ccw and on_cw:
        direction = -ccw  # both settled: extend the ccw incident edge
    elif on_ccw:
        direction = -cw   # slide away from the settled neighbor
    elif on_cw:
        direction = -ccw
    else:
        return stay(light)

    u = direction.unit()
    # exit of the ray through the circle (origin is strictly inside it)
    uc = u.dot(sec.center)
    disc = uc * uc - (sec.center.dot(sec.center) - sec.radius * sec.radius)
    if disc < 0.0:
        return stay(light)
    t = uc + math.sqrt(disc)
    if t <= 0.0:
        return stay(light)
    # Land a hair inside the circle rather than on it: an arrival a few ulps
    # outside would hand the enclosing-circle support to the newcomer and let
    # rounding noise shift the center by many orders of magnitude.  The
    # margin is far below the on-circle tolerance above.
    dest = sec.center + (u * t - sec.center) * (1.0 - 1e-10)
    return Action(light, dest)


def circle_contain_step(snap: Snapshot, params: ProtocolParams) -> Action:
    """Hull-preserving protocol rewired to end on a circle (semi-synchronous).

    Vertex robots keep the Adjusting light after their inward nudge instead
    of terminating; once a robot sees only Adjusting lights everyone is a
    hull vertex with full visibility, and the circle phase takes over.
    Adjusting counts as settled in every earlier guard.
    """
    settled = (LIGHT_EXTERNAL, LIGHT_ADJUSTING)
    pts = snap.positions()
    light = snap.self_light
    lights = snap.lights()

    if len(pts) == 1:
        return Action(light, terminate=True)

    if len(pts) == 2:
        # two-robot endgame: any pair is concircular, so the plain terminate
        # path stays in force
        if light == LIGHT_ADJUSTING:
            return Action(LIGHT_EXTERNAL, terminate=True)
        d = orthogonal_direction(pts)
        hull2 = snapshot_hull(snap, params)
        return Action(LIGHT_ADJUSTING, d * hull2.length())

    if light == LIGHT_ADJUSTING:
        if all(l == LIGHT_ADJUSTING for l in lights):
            return circle_formation_step(snap, params, accept=(LIGHT_ADJUSTING,))
        return stay(light)

    hull = snapshot_hull(snap, params)

    if hull.is_segment:
        # segment breaking is untouched by the circle rewiring: middles wait
        # for lit External ends, not for gliding Adjusting ones
        if all(l == LIGHT_EXTERNAL for _, l in snap.others()):
            d = orthogonal_direction(pts)
            return Action(LIGHT_ADJUSTING, d * params.h_positive * hull.length())
        return stay(light)

    if hull.contains_on_boundary(ORIGIN):
        if (hull.is_vertex(ORIGIN) and light == LIGHT_EXTERNAL
                and all(l in settled for l in lights)):
            a, b = hull_neighbors(hull, ORIGIN)
            return Action(LIGHT_ADJUSTING, _adjust_destination(a, b, params))
        if light == LIGHT_OFF:
            return Action(LIGHT_EXTERNAL)
        return stay(light)

    return _interior_depletion(snap, hull, params, external_like=settled)


def circle_contain_done_step(snap: Snapshot, params: ProtocolParams) -> Action:
    """Circle formation under full asynchrony (fourth light: Done).

    The base hull-preserving rules run unchanged, except that a robot which
    would have terminated after its inward nudge lights Done instead, then
    waits until everyone it sees is Done before starting the circle phase.
    Done robots count as External everywhere else.
    """
    settled = (LIGHT_EXTERNAL, LIGHT_DONE)
    pts = snap.positions()
    light = snap.self_light
    lights = snap.lights()

    if len(pts) == 1:
        return Action(light, terminate=True)

    if light == LIGHT_DONE:
        if all(l == LIGHT_DONE for l in lights):
            return circle_formation_step(snap, params, accept=(LIGHT_DONE,))
        return stay(light)

    hull = snapshot_hull(snap, params)

    if len(pts) == 2:
        if light == LIGHT_ADJUSTING:
            return Action(LIGHT_DONE)
        d = orthogonal_direction(pts)
        return Action(LIGHT_ADJUSTING, d * hull.length())

    if hull.is_segment:
        if all(l == LIGHT_EXTERNAL or l == LIGHT_DONE for _, l in snap.others()):
            d = orthogonal_direction(pts)
            return Action(LIGHT_ADJUSTING, d * params.h_positive * hull.length())
        return stay(light)

    if hull.contains_on_boundary(ORIGIN):
        a, b = hull_neighbors(hull, ORIGIN)
        if light == LIGHT_ADJUSTING:
            if (all(l != LIGHT_OFF for l in lights)
                    or any(l in settled for l in lights)):
                if (light_at(snap, a) != LIGHT_OFF and light_at(snap, b) != LIGHT_OFF
                        and not any(hull.strictly_inside(p) for p in pts)):
                    return Action(LIGHT_DONE)
                return Action(LIGHT_EXTERNAL)
            return stay(light)
        if hull.is_vertex(ORIGIN) and all(l in settled for l in lights):
            return Action(LIGHT_ADJUSTING, _adjust_destination(a, b, params))
        adjusting = sum(1 for l in lights if l == LIGHT_ADJUSTING)
        if ((len(pts) == 3 and _is_acute_at_origin(snap))
                or (adjusting > 1 and hull.is_vertex(ORIGIN))
                or adjusting == 0):
            return Action(LIGHT_EXTERNAL)
        return stay(light)

    if all(l != LIGHT_ADJUSTING for l in lights):
        return _interior_depletion(snap, hull, params, external_like=settled)
    return stay(light)
