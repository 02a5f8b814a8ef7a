"""Hull-preserving mutual-visibility protocol (3 colors) and its variants.

Three phases run back to back, all driven by the same snapshot rule.
Segment breaking pulls the endpoints of an all-collinear swarm off the line.
Interior depletion migrates inside robots onto the hull boundary while the
lit boundary holds still, so the global hull never changes.  Vertex
adjustments then nudge each boundary robot inward once, which turns every
edge-interior robot into a corner and yields a strictly convex final shape.
The third color is a self-reminder that the inward nudge already happened.
"""

from __future__ import annotations

import math

from ..geometry import (
    AngularSector,
    EmptyIntersectionError,
    Hull,
    Point2,
    convex_hull,
    hull_neighbors,
    ray_boundary_exit,
    sector_boundary_targets,
)
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
    MissingKnowledgeError,
    ProtocolParams,
    edge_fully_visible,
    light_at,
    nearest_subedge_midpoint,
    orthogonal_direction,
    rotate,
    snapshot_hull,
    stay,
)

_ACUTE_TIE = 1e-12

# Below this corner angle the unlit hull is treated as collinear.  A nearly
# flat corner would otherwise produce a needle-thin exit sector whose whole
# boundary intersection can sit inside the keep-away radius of another
# robot, freezing the swarm; the wide right-angle rule of the collinear case
# stays safe (its moves still point away from every unlit robot).
_FLAT_ANGLE = 1e-3


def _is_acute_at_origin(snap: Snapshot) -> bool:
    others = [p for p, _ in snap.others()]
    if len(others) != 2:
        return False
    u, v = others
    return u.dot(v) > _ACUTE_TIE * u.norm() * v.norm()


def _adjust_destination(a: Point2, b: Point2, params: ProtocolParams) -> Point2:
    if params.eps_adjust is not None:
        return (a + b).unit() * params.eps_adjust
    return (a + b) * 0.25


def _lit(light: str, external_like: tuple[str, ...]) -> bool:
    return light in external_like


def _admissible_edges(snap: Snapshot, hull: Hull, params: ProtocolParams,
                      external_like: tuple[str, ...]) -> list[tuple[Point2, Point2]]:
    """Hull edges safe to walk to: endpoints lit and the edge fully in view."""
    pts = snap.positions()
    out = []
    for a, b in hull.edges():
        if not (_lit(light_at(snap, a), external_like)
                and _lit(light_at(snap, b), external_like)):
            continue
        if edge_fully_visible(ORIGIN, a, b, pts, params.eps_geom):
            out.append((a, b))
    return out


def _interior_depletion(snap: Snapshot, hull: Hull, params: ProtocolParams,
                        external_like: tuple[str, ...] = (LIGHT_EXTERNAL,)) -> Action:
    """Moves of robots strictly inside the visible hull (lines of the
    depletion phase): singletons head for the nearest boundary gap midpoint,
    collinear groups peel off at the ends inside an away-facing right angle,
    and corner robots of the unlit hull exit through their vertex sector."""
    pts = snap.positions()
    offs = [p for p, l in snap.visible if l == LIGHT_OFF]
    light = snap.self_light
    if not offs:
        return stay(light)

    if len(offs) == 1:
        return Action(light, nearest_subedge_midpoint(hull))

    inner = convex_hull(offs, params.eps_geom)
    eps_nudge = 1e-6 * hull.length()

    def escape_along(axis: Point2) -> Action:
        sector = AngularSector(ORIGIN, axis, math.pi / 4.0)
        try:
            targets = sector_boundary_targets(sector, hull, pts, eps_nudge)
        except EmptyIntersectionError:
            return stay(light)
        return Action(light, targets[0])

    if inner.is_segment:
        if not inner.is_vertex(ORIGIN):
            return stay(light)
        far_end = inner.boundary[-1] if inner.boundary[0] == ORIGIN else inner.boundary[0]
        return escape_along((-far_end).unit())

    if not inner.is_vertex(ORIGIN):
        return stay(light)

    a, b = hull_neighbors(inner, ORIGIN)
    e1, e2 = a.unit(), b.unit()
    bis = e1 + e2
    alpha = math.acos(max(-1.0, min(1.0, e1.dot(e2))))
    if alpha > math.pi - _FLAT_ANGLE or bis.norm() < 1e-12:
        return stay(light)  # effectively a middle point of a collinear group
    if alpha < _FLAT_ANGLE:
        return escape_along(-bis.unit())  # effectively an end of a collinear group
    alpha_eff = alpha if alpha <= math.pi / 2.0 + 1e-12 else math.pi - alpha
    sector = AngularSector(ORIGIN, -bis.unit(), alpha_eff / 2.0)

    edges = _admissible_edges(snap, hull, params, external_like)
    if not edges:
        return stay(light)
    try:
        targets = sector_boundary_targets(sector, edges, pts, eps_nudge)
    except EmptyIntersectionError:
        return stay(light)
    return Action(light, targets[0])


def _boundary_rules(snap: Snapshot, hull: Hull, params: ProtocolParams,
                    external_like: tuple[str, ...] = (LIGHT_EXTERNAL,)) -> Action:
    """Rules for robots on the visible hull boundary (non-collinear view)."""
    pts = snap.positions()
    lights = snap.lights()
    light = snap.self_light
    a, b = hull_neighbors(hull, ORIGIN)

    if light == LIGHT_ADJUSTING:
        if (all(l != LIGHT_OFF for l in lights)
                or any(_lit(l, external_like) for l in lights)):
            if (light_at(snap, a) != LIGHT_OFF and light_at(snap, b) != LIGHT_OFF
                    and not any(hull.strictly_inside(p) for p in pts)):
                return Action(LIGHT_EXTERNAL, terminate=True)
            return Action(LIGHT_EXTERNAL)
        return stay(LIGHT_ADJUSTING)

    if hull.is_vertex(ORIGIN) and all(_lit(l, external_like) for l in lights):
        return Action(LIGHT_ADJUSTING, _adjust_destination(a, b, params))

    adjusting = sum(1 for l in lights if l == LIGHT_ADJUSTING)
    if ((len(pts) == 3 and _is_acute_at_origin(snap))
            or (adjusting > 1 and hull.is_vertex(ORIGIN))
            or adjusting == 0):
        return Action(LIGHT_EXTERNAL)
    return stay(light)


def contain_step(snap: Snapshot, params: ProtocolParams) -> Action:
    """One activation of the 3-color hull-preserving rule."""
    pts = snap.positions()
    light = snap.self_light

    if len(pts) == 1:
        return Action(light, terminate=True)

    hull = snapshot_hull(snap, params)

    if len(pts) == 2:
        if light == LIGHT_ADJUSTING:
            return Action(LIGHT_EXTERNAL, terminate=True)
        d = orthogonal_direction(pts)
        return Action(LIGHT_ADJUSTING, d * hull.length())

    if hull.is_segment:
        if all(l == LIGHT_EXTERNAL for _, l in snap.others()):
            d = orthogonal_direction(pts)
            length = params.h_positive * hull.length()
            if params.eps_adjust is not None:
                length = min(length, params.eps_adjust)
            return Action(LIGHT_ADJUSTING, d * length)
        return stay(light)

    if hull.contains_on_boundary(ORIGIN):
        return _boundary_rules(snap, hull, params)

    if all(l != LIGHT_ADJUSTING for l in snap.lights()):
        return _interior_depletion(snap, hull, params)
    return stay(light)


# ---------------------------------------------------------------------------
# axis-agreement variant (survives adversarial truncation under full asynchrony)


def _north_frame(snap: Snapshot) -> tuple[Point2, Point2]:
    north = snap.knowledge.north
    if north is None:
        raise MissingKnowledgeError("north direction knowledge required")
    north = north.unit()
    return north, north.perp()


def _clear_path(snap: Snapshot, dest: Point2, clearance: float) -> bool:
    from ..geometry import point_segment_distance

    for p, _ in snap.others():
        if point_segment_distance(p, ORIGIN, dest) <= clearance:
            return False
    return True


def _directional_exit(snap: Snapshot, hull: Hull, base_dir: Point2,
                      max_tilt: float, clearance: float) -> Point2 | None:
    """Boundary exit along base_dir, tilting in small steps when robots block."""
    step = 0.03
    k_max = max(1, int(max_tilt / step))
    for k in range(k_max + 1):
        for sign in ((1.0,) if k == 0 else (1.0, -1.0)):
            d = rotate(base_dir, sign * k * step)
            q = ray_boundary_exit(hull, ORIGIN, d)
            if q is None:
                continue
            if _clear_path(snap, q, clearance):
                return q
    return None


def _interior_axis(snap: Snapshot, hull: Hull, params: ProtocolParams) -> Action:
    """North-ordered interior depletion: a robot may move only when every
    visible robot strictly to its North is already lit External; a full row
    at the same height releases only its two ends, which climb into the
    upper quadrant facing away from the row."""
    north, east = _north_frame(snap)
    light = snap.self_light
    scale = hull.length()
    tol = 1e-9 * scale
    eps_nudge = 1e-6 * scale

    for p, l in snap.others():
        if p.dot(north) > tol and l != LIGHT_EXTERNAL:
            return stay(light)
    if light != LIGHT_OFF:
        return stay(light)

    row = [p for p, l in snap.others()
           if l == LIGHT_OFF and abs(p.dot(north)) <= tol]
    if row:
        easts = [p.dot(east) for p in row]
        if min(easts) < -tol and max(easts) > tol:
            return stay(light)  # middle of the row waits
        away = -east if max(easts) > tol else east
        base = (north + away).unit()
        dest = _directional_exit(snap, hull, base, math.pi / 4.0 - 0.05, eps_nudge)
    else:
        dest = _directional_exit(snap, hull, north, math.pi / 3.0, eps_nudge)
    if dest is None:
        return stay(light)
    return Action(light, dest)


def contain_asynch_variant(snap: Snapshot, params: ProtocolParams) -> Action:
    """Hull-preserving rule for robots that agree on the North direction.

    Interior depletion and segment breaking are re-ordered by height so that
    truncated moves under full asynchrony cannot interleave dangerously; the
    vertex adjustment phase is unchanged.
    """
    north, _ = _north_frame(snap)
    pts = snap.positions()
    light = snap.self_light

    if len(pts) == 1:
        return Action(light, terminate=True)

    hull = snapshot_hull(snap, params)

    if len(pts) == 2:
        if light == LIGHT_ADJUSTING:
            return Action(LIGHT_EXTERNAL, terminate=True)
        other, other_light = snap.others()[0]
        tol = 1e-9 * hull.length()
        # Only the top endpoint of a collinear swarm may move; with the other
        # end already settled External (two-robot endgame) the guard is moot.
        if other.dot(north) > tol and other_light != LIGHT_EXTERNAL:
            return stay(light)
        d = orthogonal_direction(pts, prefer=north)
        return Action(LIGHT_ADJUSTING, d * hull.length())

    if hull.is_segment:
        if all(l == LIGHT_EXTERNAL for _, l in snap.others()):
            d = orthogonal_direction(pts, prefer=north)
            length = params.h_positive * hull.length()
            if params.eps_adjust is not None:
                length = min(length, params.eps_adjust)
            return Action(LIGHT_ADJUSTING, d * length)
        return stay(light)

    if hull.contains_on_boundary(ORIGIN):
        return _boundary_rules(snap, hull, params)

    return _interior_axis(snap, hull, params)


# ---------------------------------------------------------------------------
# knowledge-of-n variant (2 colors, no adjusting state)


def contain_n_known(snap: Snapshot, params: ProtocolParams) -> Action:
    """Hull-preserving rule without the third color.

    Knowing n replaces the adjust-once bookkeeping: a corner robot keeps
    making default moves while lit External and terminates as soon as it
    sees the whole swarm.
    """
    n = snap.knowledge.n
    if n is None:
        raise MissingKnowledgeError("n knowledge required")

    pts = snap.positions()
    light = snap.self_light

    if len(pts) == 1:
        return Action(LIGHT_EXTERNAL, terminate=(n == 1))

    hull = snapshot_hull(snap, params)

    def sees_whole_external_swarm() -> bool:
        # Seeing n robots with none strictly inside means everyone is on the
        # hull; stopping earlier could strand a late boundary joiner between
        # two terminated corners forever.
        return (len(pts) == n
                and not any(hull.strictly_inside(p) for p in pts))

    if hull.is_segment:
        if hull.is_vertex(ORIGIN) and len(pts) == n:
            return Action(LIGHT_EXTERNAL, terminate=True)
        if len(pts) == 2:
            # Endpoint of the line.  For n == 3 the ends hold still and the
            # center robot breaks the segment instead.
            if n == 3:
                return stay(light)
            d = orthogonal_direction(pts)
            return Action(light, d * params.h_positive * hull.length())
        if len(pts) == 3 and not hull.is_vertex(ORIGIN):
            if n == 3:
                d = orthogonal_direction(pts)
                return Action(light, d * params.h_positive * hull.length())
            return stay(light)
        return stay(light)

    if hull.contains_on_boundary(ORIGIN):
        if hull.is_vertex(ORIGIN) and sees_whole_external_swarm():
            return Action(LIGHT_EXTERNAL, terminate=True)
        if light == LIGHT_OFF:
            return Action(LIGHT_EXTERNAL)
        a, b = hull_neighbors(hull, ORIGIN)
        if hull.is_vertex(ORIGIN) and all(l == LIGHT_EXTERNAL for l in snap.lights()):
            return Action(LIGHT_EXTERNAL, _adjust_destination(a, b, params))
        return stay(light)

    return _interior_depletion(snap, hull, params)
