"""Frames, configurations and snapshot construction."""

import math
import random

import pytest

from lumiswarm.geometry import Point2
from lumiswarm.model import (
    LIGHT_OFF,
    LIGHT_VERTEX,
    CollisionPresentError,
    Configuration,
    Knowledge,
    LocalFrame,
    RobotState,
    RobotTerminatedError,
    apply_frame_inverse,
    take_snapshot,
)


def make_config(points, lights=None, statuses=None):
    lights = lights or [LIGHT_OFF] * len(points)
    statuses = statuses or ["idle"] * len(points)
    return Configuration(tuple(
        RobotState(i, p, lights[i], statuses[i]) for i, p in enumerate(points)
    ))


def test_collinear_middle_sees_two():
    cfg = make_config([Point2(0, 0), Point2(1, 0), Point2(2, 0), Point2(3, 0)])
    snap = take_snapshot(cfg, 1, LocalFrame(Point2(1, 0)))
    assert len(snap.visible) == 3  # self + two neighbors


def test_identity_frame_preserves_offsets():
    pts = [Point2(0, 0), Point2(1, 0), Point2(0, 1), Point2(1, 1)]
    cfg = make_config(pts)
    snap = take_snapshot(cfg, 0, LocalFrame(Point2(0, 0)))
    assert len(snap.visible) == 4
    seen = {p for p, _ in snap.visible}
    assert seen == set(pts)


def test_frame_roundtrip():
    rng = random.Random(5)
    for _ in range(10_000):
        frame = LocalFrame(
            Point2(rng.uniform(-10, 10), rng.uniform(-10, 10)),
            rng.uniform(0, 2 * math.pi),
            rng.random() < 0.5,
            rng.uniform(0.1, 10.0),
        )
        p = Point2(rng.uniform(-10, 10), rng.uniform(-10, 10))
        back = apply_frame_inverse(frame, frame.to_local(p))
        assert back.dist(p) <= 1e-12 * max(1.0, p.norm())


def test_frame_scale_semantics():
    frame = LocalFrame(Point2(3, 4), rotation=0.0, reflect=False, scale=2.0)
    assert apply_frame_inverse(frame, Point2(2, 0)).dist(Point2(7, 4)) < 1e-12
    assert apply_frame_inverse(frame, Point2(1, 2)) == Point2(5, 8)


def test_snapshot_excludes_blocked_and_keeps_lights():
    cfg = make_config(
        [Point2(0, 0), Point2(2, 0), Point2(4, 0), Point2(0, 3)],
        lights=[LIGHT_OFF, LIGHT_VERTEX, LIGHT_OFF, LIGHT_VERTEX],
    )
    snap = take_snapshot(cfg, 0, LocalFrame(Point2(0, 0)))
    pts = {p for p, _ in snap.visible}
    assert Point2(4, 0) not in pts     # blocked by the robot at (2,0)
    assert (Point2(2, 0), LIGHT_VERTEX) in snap.visible
    assert snap.self_light == LIGHT_OFF
    assert snap.visible[0] == (Point2(0, 0), LIGHT_OFF)


def test_terminated_robots_visible_but_not_observers():
    cfg = make_config([Point2(0, 0), Point2(1, 1)],
                      statuses=["terminated", "idle"])
    snap = take_snapshot(cfg, 1, LocalFrame(Point2(1, 1)))
    assert len(snap.visible) == 2
    with pytest.raises(RobotTerminatedError):
        take_snapshot(cfg, 0, LocalFrame(Point2(0, 0)))


def test_coincident_positions_rejected():
    cfg = make_config([Point2(0, 0), Point2(0, 0), Point2(1, 1)])
    with pytest.raises(CollisionPresentError):
        take_snapshot(cfg, 2, LocalFrame(Point2(1, 1)))


def test_reflected_rotated_scaled_snapshot_roundtrip():
    pts = [Point2(0, 0), Point2(2, 1), Point2(-1, 3), Point2(4, -2)]
    cfg = make_config(pts)
    frame = LocalFrame(Point2(0, 0), rotation=math.pi / 2, reflect=True, scale=2.0)
    snap = take_snapshot(cfg, 0, frame)
    back = {apply_frame_inverse(frame, p) for p, _ in snap.visible}
    for orig in pts:
        assert any(b.dist(orig) <= 1e-12 for b in back)


def test_knowledge_passthrough():
    cfg = make_config([Point2(0, 0), Point2(1, 0)])
    k = Knowledge(n=2, delta=0.5, north=Point2(0, 1))
    snap = take_snapshot(cfg, 0, LocalFrame(Point2(0, 0)), knowledge=k)
    assert snap.knowledge.n == 2
    assert snap.knowledge.delta == 0.5
    assert snap.knowledge.north == Point2(0, 1)
