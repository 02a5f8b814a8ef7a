"""Robust planar geometry primitives for the swarm engine.

Everything here is pure and operates on immutable values: convex hulls that
keep track of degenerate (edge-interior) vertices, obstructed-visibility
predicates, angular sectors, smallest enclosing circles, and closed-form
proximity of simultaneously moving points.

Predicates are tolerance-based.  ``eps_geom`` controls collinearity and
vertex-degeneracy decisions and is always applied in relative form, so hulls
are invariant under scaling of the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

EPS_GEOM_DEFAULT = 1e-9
EPS_VIS_DEFAULT = 1e-9


class GeometryError(ValueError):
    """Base class for geometry contract violations."""


class DuplicatePointsError(GeometryError):
    """Two input points coincide within the active tolerance."""


class NotOnBoundaryError(GeometryError):
    """Queried point does not lie on the hull boundary."""


class DegenerateBasisError(GeometryError):
    """Basis vectors are (numerically) linearly dependent."""


class EmptyIntersectionError(GeometryError):
    """A sector/boundary intersection is empty."""


class Point2(NamedTuple):
    """A point of the plane, also used as a 2D vector."""

    x: float
    y: float

    def __add__(self, other: "Point2") -> "Point2":  # type: ignore[override]
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> "Point2":  # type: ignore[override]
        return Point2(self.x * k, self.y * k)

    def __rmul__(self, k: float) -> "Point2":  # type: ignore[override]
        return Point2(self.x * k, self.y * k)

    def __neg__(self) -> "Point2":
        return Point2(-self.x, -self.y)

    def dot(self, other: "Point2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Point2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def unit(self) -> "Point2":
        n = self.norm()
        if n == 0.0:
            raise GeometryError("cannot normalize the zero vector")
        return Point2(self.x / n, self.y / n)

    def perp(self) -> "Point2":
        """Counterclockwise perpendicular."""
        return Point2(-self.y, self.x)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


ORIGIN = Point2(0.0, 0.0)


def cross3(a: Point2, b: Point2, c: Point2) -> float:
    """Signed area (x2) of triangle abc; >0 when abc turns left."""
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def turn(a: Point2, b: Point2, c: Point2, eps: float = EPS_GEOM_DEFAULT) -> int:
    """-1/0/+1 for right/straight/left turn of abc, with relative tolerance."""
    area = cross3(a, b, c)
    thresh = eps * a.dist(b) * a.dist(c)
    if area > thresh:
        return 1
    if area < -thresh:
        return -1
    return 0


def collinear(a: Point2, b: Point2, c: Point2, eps: float = EPS_GEOM_DEFAULT) -> bool:
    return turn(a, b, c, eps) == 0


def point_segment_distance(p: Point2, a: Point2, b: Point2) -> float:
    """Distance from p to the closed segment ab."""
    ab = b - a
    denom = ab.dot(ab)
    if denom == 0.0:
        return p.dist(a)
    t = (p - a).dot(ab) / denom
    t = min(1.0, max(0.0, t))
    return p.dist(a + ab * t)


@dataclass(frozen=True)
class Hull:
    """Convex hull of a point set, keeping every boundary point.

    ``boundary`` lists all input points that lie on the hull boundary in
    counterclockwise order; ``vertex_flags[i]`` is True when ``boundary[i]``
    is a non-degenerate (corner) vertex.  Degenerate boundary points lie in
    the relative interior of an edge between the adjacent corners.  For
    collinear input ``is_segment`` is set and ``boundary`` runs from one
    extreme point to the other.  ``boundary_indices`` maps boundary entries
    back to positions in the input list; ``interior_indices`` collects the
    strictly interior inputs.
    """

    boundary: tuple[Point2, ...]
    vertex_flags: tuple[bool, ...]
    is_segment: bool
    boundary_indices: tuple[int, ...]
    interior_indices: tuple[int, ...]
    eps: float = EPS_GEOM_DEFAULT

    def vertices(self) -> tuple[Point2, ...]:
        """Non-degenerate vertices only, in boundary order."""
        return tuple(p for p, f in zip(self.boundary, self.vertex_flags) if f)

    def edges(self) -> list[tuple[Point2, Point2]]:
        """Consecutive boundary-point segments (cyclic unless a segment)."""
        b = self.boundary
        if len(b) == 1:
            return []
        if self.is_segment:
            return [(b[i], b[i + 1]) for i in range(len(b) - 1)]
        return [(b[i], b[(i + 1) % len(b)]) for i in range(len(b))]

    def side_edges(self) -> list[tuple[Point2, Point2]]:
        """Edges between consecutive non-degenerate vertices."""
        vs = self.vertices()
        if len(vs) == 1:
            return []
        if self.is_segment:
            return [(vs[0], vs[1])]
        return [(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]

    def boundary_position(self, p: Point2) -> int:
        """Index of p in boundary, or -1 (exact coordinate match)."""
        for i, q in enumerate(self.boundary):
            if q.x == p.x and q.y == p.y:
                return i
        return -1

    def contains_on_boundary(self, p: Point2) -> bool:
        return self.boundary_position(p) >= 0

    def is_vertex(self, p: Point2) -> bool:
        """True iff p is a non-degenerate vertex of this hull."""
        i = self.boundary_position(p)
        return i >= 0 and self.vertex_flags[i]

    def area(self) -> float:
        if self.is_segment or len(self.boundary) < 3:
            return 0.0
        vs = self.vertices()
        s = 0.0
        for i in range(len(vs)):
            s += vs[i].cross(vs[(i + 1) % len(vs)])
        return 0.5 * s

    def diameter(self) -> float:
        b = self.boundary
        best = 0.0
        for i in range(len(b)):
            for j in range(i + 1, len(b)):
                best = max(best, b[i].dist(b[j]))
        return best

    def length(self) -> float:
        """Diameter; for segment hulls this is the segment length."""
        return self.diameter()

    def contains(self, p: Point2, eps: float | None = None) -> bool:
        """Closed-region membership test (boundary counts as inside)."""
        e = self.eps if eps is None else eps
        b = self.boundary
        if len(b) == 1:
            return p.dist(b[0]) <= e * max(1.0, p.norm())
        if self.is_segment:
            scale = max(b[0].dist(b[-1]), 1.0)
            return point_segment_distance(p, b[0], b[-1]) <= e * scale
        vs = self.vertices()
        for i in range(len(vs)):
            if turn(vs[i], vs[(i + 1) % len(vs)], p, e) < 0:
                return False
        return True

    def strictly_inside(self, p: Point2, eps: float | None = None) -> bool:
        e = self.eps if eps is None else eps
        if self.is_segment or len(self.vertices()) < 3:
            return False
        vs = self.vertices()
        return all(turn(vs[i], vs[(i + 1) % len(vs)], p, e) > 0 for i in range(len(vs)))


def convex_hull(points: list[Point2], eps_geom: float = EPS_GEOM_DEFAULT) -> Hull:
    """Convex hull with degenerate-vertex reporting.

    Raises DuplicatePointsError when two inputs coincide within ``eps_geom``
    (relative to the point-set diameter).
    """
    if not points:
        raise GeometryError("need at least one point")
    for p in points:
        if not p.is_finite():
            raise GeometryError(f"non-finite point {p}")

    n = len(points)
    diam = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            diam = max(diam, points[i].dist(points[j]))
    dup_tol = eps_geom * max(diam, 1e-300)
    for i in range(n):
        for j in range(i + 1, n):
            if points[i].dist(points[j]) <= dup_tol:
                raise DuplicatePointsError(f"points {i} and {j} coincide")

    if n == 1:
        return Hull((points[0],), (True,), True, (0,), (), eps_geom)

    order = sorted(range(n), key=lambda i: (points[i].x, points[i].y))

    def chain(idx_order: list[int]) -> list[int]:
        out: list[int] = []
        for i in idx_order:
            while len(out) >= 2 and turn(points[out[-2]], points[out[-1]], points[i], eps_geom) <= 0:
                out.pop()
            out.append(i)
        return out

    lower = chain(order)
    upper = chain(order[::-1])
    vertex_idx = lower[:-1] + upper[:-1]

    if len(vertex_idx) <= 2:
        # All points collinear: boundary runs between the two extremes.
        e0, e1 = points[order[0]], points[order[-1]]
        d = e1 - e0
        line_order = sorted(range(n), key=lambda i: (points[i] - e0).dot(d))
        flags = tuple(k == 0 or k == n - 1 for k in range(n))
        return Hull(
            tuple(points[i] for i in line_order),
            flags,
            True,
            tuple(line_order),
            (),
            eps_geom,
        )

    vertex_set = set(vertex_idx)
    boundary_idx: list[int] = []
    flags_list: list[bool] = []
    interior: list[int] = []
    on_edge: dict[int, list[tuple[float, int]]] = {k: [] for k in range(len(vertex_idx))}

    for i in range(n):
        if i in vertex_set:
            continue
        placed = False
        for k in range(len(vertex_idx)):
            a = points[vertex_idx[k]]
            b = points[vertex_idx[(k + 1) % len(vertex_idx)]]
            if turn(a, b, points[i], eps_geom) == 0:
                t = (points[i] - a).dot(b - a) / (b - a).dot(b - a)
                if 0.0 < t < 1.0:
                    on_edge[k].append((t, i))
                    placed = True
                    break
        if not placed:
            interior.append(i)

    for k, vi in enumerate(vertex_idx):
        boundary_idx.append(vi)
        flags_list.append(True)
        for _, i in sorted(on_edge[k]):
            boundary_idx.append(i)
            flags_list.append(False)

    return Hull(
        tuple(points[i] for i in boundary_idx),
        tuple(flags_list),
        False,
        tuple(boundary_idx),
        tuple(interior),
        eps_geom,
    )


def hull_neighbors(hull: Hull, p: Point2) -> tuple[Point2, Point2]:
    """Adjacent boundary robots of p: (ccw, cw) in the hull's own handedness.

    Degenerate boundary points count as neighbors.  On a segment hull the
    middle points have their two line neighbors; an endpoint sees its single
    neighbor on both sides.
    """
    i = hull.boundary_position(p)
    if i < 0:
        raise NotOnBoundaryError(f"{p} is not on the hull boundary")
    b = hull.boundary
    if len(b) == 1:
        raise GeometryError("single-point hull has no neighbors")
    if hull.is_segment:
        ccw = b[i + 1] if i + 1 < len(b) else b[i - 1]
        cw = b[i - 1] if i - 1 >= 0 else b[i + 1]
        return ccw, cw
    return b[(i + 1) % len(b)], b[(i - 1) % len(b)]


def coeffs_along(a: Point2, b: Point2, r: Point2,
                 eps_geom: float = EPS_GEOM_DEFAULT) -> tuple[float, float]:
    """Coefficients (alpha, beta) with r = alpha*a + beta*b.

    a and b are understood as vectors from the executing robot's position.
    Raises DegenerateBasisError when a and b are numerically parallel.
    """
    det = a.cross(b)
    if abs(det) <= eps_geom * a.norm() * b.norm():
        raise DegenerateBasisError("basis vectors are parallel")
    alpha = r.cross(b) / det
    beta = a.cross(r) / det
    # One step of residual refinement keeps the reconstruction error at the
    # 1e-12 * max(|a|,|b|) contract even for skewed bases.
    res = r - (a * alpha + b * beta)
    alpha += res.cross(b) / det
    beta += a.cross(res) / det
    return alpha, beta


def is_visible(p: Point2, q: Point2, others: list[Point2],
               eps_vis: float = EPS_VIS_DEFAULT) -> bool:
    """True iff nothing in ``others`` blocks the open segment pq.

    A point blocks when it lies within ``eps_vis`` of the segment; the
    predicate is symmetric in p and q.  Entries coinciding with p or q are
    ignored.
    """
    if p.x == q.x and p.y == q.y:
        raise GeometryError("visibility between coincident points is undefined")
    for o in others:
        if (o.x == p.x and o.y == p.y) or (o.x == q.x and o.y == q.y):
            continue
        if point_segment_distance(o, p, q) <= eps_vis:
            return False
    return True


class Circle(NamedTuple):
    center: Point2
    radius: float

    def contains(self, p: Point2, slack: float = 1e-9) -> bool:
        return self.center.dist(p) <= self.radius + slack


def _circle_from_two(a: Point2, b: Point2) -> Circle:
    c = Point2((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)
    return Circle(c, max(c.dist(a), c.dist(b)))


def _circle_from_three(a: Point2, b: Point2, c: Point2) -> Circle | None:
    d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y))
    if d == 0.0:
        return None
    ax2, bx2, cx2 = a.dot(a), b.dot(b), c.dot(c)
    ux = (ax2 * (b.y - c.y) + bx2 * (c.y - a.y) + cx2 * (a.y - b.y)) / d
    uy = (ax2 * (c.x - b.x) + bx2 * (a.x - c.x) + cx2 * (b.x - a.x)) / d
    center = Point2(ux, uy)
    return Circle(center, max(center.dist(a), center.dist(b), center.dist(c)))


def _slack(c: Circle) -> float:
    return 1e-12 * max(1.0, c.radius)


def _sec_two_fixed(pts: list[Point2], p: Point2, q: Point2) -> Circle:
    """Smallest circle through p and q containing pts[:len(pts)].

    Keeps separate best circumcircles on each side of the chord pq; the
    naive replace-on-escape walk is wrong on near-cocircular inputs.
    """
    circ = _circle_from_two(p, q)
    pq = q - p
    left: Circle | None = None
    right: Circle | None = None
    for r in pts:
        if circ.contains(r, _slack(circ)):
            continue
        side = pq.cross(r - p)
        c3 = _circle_from_three(p, q, r)
        if c3 is None:
            continue
        d = pq.cross(c3.center - p)
        if side > 0.0 and (left is None or d > pq.cross(left.center - p)):
            left = c3
        elif side < 0.0 and (right is None or d < pq.cross(right.center - p)):
            right = c3
    if left is None and right is None:
        return circ
    if left is None:
        return right
    if right is None:
        return left
    return left if left.radius <= right.radius else right


def _sec_one_fixed(pts: list[Point2], p: Point2) -> Circle:
    """Smallest circle through p containing pts."""
    c = Circle(p, 0.0)
    for j, q in enumerate(pts):
        if not c.contains(q, _slack(c)):
            if c.radius == 0.0:
                c = _circle_from_two(p, q)
            else:
                c = _sec_two_fixed(pts[: j + 1], p, q)
    return c


def smallest_enclosing_circle(points: list[Point2]) -> Circle:
    """Smallest circle containing all points.

    Deterministic incremental construction: points are processed in the
    given order, rebuilding through each newly escaping point.
    """
    if not points:
        raise GeometryError("need at least one point")
    pts = list(points)
    c: Circle | None = None
    for i, p in enumerate(pts):
        if c is None or not c.contains(p, _slack(c)):
            c = _sec_one_fixed(pts[: i + 1], p)
    return c


def min_trajectory_distance(p0: Point2, p1: Point2, q0: Point2, q1: Point2) -> float:
    """Minimum distance of two points moving linearly over the same unit time.

    Closed form: the relative motion is linear, so the squared distance is a
    quadratic in t and the minimum lies at the clamped stationary point.
    """
    d0 = p0 - q0
    v = (p1 - p0) - (q1 - q0)
    vv = v.dot(v)
    if vv == 0.0:
        return d0.norm()
    t = -d0.dot(v) / vv
    t = min(1.0, max(0.0, t))
    return (d0 + v * t).norm()


@dataclass(frozen=True)
class AngularSector:
    """Closed angular sector: apex, unit axis, half-angle in (0, pi]."""

    apex: Point2
    axis: Point2
    half_angle: float

    def __post_init__(self) -> None:
        if not (0.0 < self.half_angle <= math.pi):
            raise GeometryError("half_angle must be in (0, pi]")
        n = self.axis.norm()
        if abs(n - 1.0) > 1e-9:
            object.__setattr__(self, "axis", self.axis.unit())

    def contains(self, p: Point2, eps_ang: float = 1e-12) -> bool:
        d = p - self.apex
        n = d.norm()
        if n == 0.0:
            return True
        cos_val = d.dot(self.axis) / n
        return cos_val >= math.cos(self.half_angle) - eps_ang

    def angle_to_axis(self, p: Point2) -> float:
        d = p - self.apex
        if d.norm() == 0.0:
            return 0.0
        c = max(-1.0, min(1.0, d.unit().dot(self.axis)))
        return math.acos(c)


def _ray_segment_intersection(apex: Point2, direction: Point2,
                              a: Point2, b: Point2) -> tuple[float, float] | None:
    """(s, t) with apex + s*direction = a + t*(b-a), s > 0, t in [0, 1]."""
    e = b - a
    denom = direction.cross(e)
    if denom == 0.0:
        return None
    w = a - apex
    s = w.cross(e) / denom
    t = w.cross(direction) / denom
    if s <= 1e-15 or t < -1e-12 or t > 1.0 + 1e-12:
        return None
    return s, min(1.0, max(0.0, t))


def ray_boundary_exit(boundary: "Hull | list[tuple[Point2, Point2]]",
                      apex: Point2, direction: Point2) -> Point2 | None:
    """First crossing of the ray apex + s*direction (s>0) with the boundary."""
    edges = boundary.edges() if isinstance(boundary, Hull) else list(boundary)
    best_s = math.inf
    hit: Point2 | None = None
    for a, b in edges:
        res = _ray_segment_intersection(apex, direction, a, b)
        if res is not None and res[0] < best_s:
            best_s = res[0]
            hit = apex + direction * res[0]
    return hit


def sector_boundary_targets(sector: AngularSector,
                            boundary: "Hull | list[tuple[Point2, Point2]]",
                            forbidden: list[Point2],
                            eps_nudge: float) -> list[Point2]:
    """Candidate destinations on (sector ∩ hull boundary) avoiding ``forbidden``.

    Candidates are nudged ``eps_nudge`` away from forbidden points along the
    boundary.  The bisector/boundary intersection comes first when it is
    admissible; the remaining candidates are ordered by angular distance from
    the sector axis, then lexicographically.  Raises EmptyIntersectionError
    when nothing remains.
    """
    apex = sector.apex
    edges = boundary.edges() if isinstance(boundary, Hull) else list(boundary)
    if not edges:
        raise EmptyIntersectionError("boundary has no edges")

    def admissible(p: Point2) -> bool:
        return all(p.dist(f) > eps_nudge * (1.0 - 1e-9) for f in forbidden)

    # Clip every boundary edge against the sector by splitting at the two
    # sector rays and keeping subintervals whose midpoint is inside.
    ray_dirs = []
    for sign in (1.0, -1.0):
        ang = sign * sector.half_angle
        c, s = math.cos(ang), math.sin(ang)
        ray_dirs.append(Point2(
            sector.axis.x * c - sector.axis.y * s,
            sector.axis.x * s + sector.axis.y * c,
        ))

    pieces: list[tuple[Point2, Point2, float, float]] = []  # (a, b, t0, t1)
    for a, b in edges:
        cuts = {0.0, 1.0}
        for d in ray_dirs:
            hit = _ray_segment_intersection(apex, d, a, b)
            if hit is not None:
                cuts.add(hit[1])
        ts = sorted(cuts)
        for t0, t1 in zip(ts, ts[1:]):
            if t1 - t0 < 1e-15:
                continue
            mid = a + (b - a) * ((t0 + t1) / 2.0)
            if sector.contains(mid):
                pieces.append((a, b, t0, t1))
    if not pieces:
        raise EmptyIntersectionError("sector does not meet the boundary")

    candidates: list[Point2] = []

    def add(p: Point2) -> None:
        if not sector.contains(p, 1e-9):
            return
        if not admissible(p):
            return
        for q in candidates:
            if q.dist(p) <= 1e-12 * max(1.0, q.norm()):
                return
        candidates.append(p)

    # Bisector hit: first exit of the axis ray through the clipped pieces.
    bis: Point2 | None = None
    best_s = math.inf
    for a, b, t0, t1 in pieces:
        hit = _ray_segment_intersection(apex, sector.axis, a, b)
        if hit is None:
            continue
        s, t = hit
        if t0 - 1e-9 <= t <= t1 + 1e-9 and s < best_s:
            best_s = s
            bis = apex + sector.axis * s

    bisector_first: list[Point2] = []
    if bis is not None:
        if admissible(bis):
            bisector_first.append(bis)
        else:
            # Slide along the boundary past the forbidden point, both ways.
            for a, b, t0, t1 in pieces:
                e = b - a
                elen = e.norm()
                if elen == 0.0 or point_segment_distance(bis, a, b) > 1e-9 * max(1.0, elen):
                    continue
                t_hit = (bis - a).dot(e) / (elen * elen)
                for dt in (eps_nudge / elen, -eps_nudge / elen):
                    t = t_hit + dt
                    if t0 <= t <= t1:
                        p = a + e * t
                        if sector.contains(p, 1e-9) and admissible(p):
                            bisector_first.append(p)

    for a, b, t0, t1 in pieces:
        e = b - a
        elen = e.norm()
        if elen == 0.0:
            continue
        dt = eps_nudge / elen
        add(a + e * ((t0 + t1) / 2.0))
        if t1 - t0 > 2.0 * dt:
            add(a + e * (t0 + dt))
            add(a + e * (t1 - dt))

    rest = [p for p in candidates
            if not any(p.dist(q) <= 1e-12 * max(1.0, p.norm()) for q in bisector_first)]
    rest.sort(key=lambda p: (sector.angle_to_axis(p), p.x, p.y))
    result = bisector_first + rest
    if not result:
        raise EmptyIntersectionError("sector/boundary intersection is fully forbidden")
    return result
