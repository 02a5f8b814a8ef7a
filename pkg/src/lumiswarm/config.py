"""Run configuration: JSON schema, validation and initial-placement generators.

A run config pins everything a run depends on: protocol and parameters,
scheduler kind, adversary policies, rigidity, initial placement (explicit or
generated), tolerances, caps and the master seed.  Identical configs produce
byte-identical traces.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from typing import Any

from .geometry import Point2, convex_hull
from .model import LocalFrame
from .protocols import ProtocolParams, get_protocol
from .scheduler import (
    ActivationPolicy,
    Adversary,
    FramePolicy,
    FullActivation,
    RandomFairActivation,
    RandomFramePolicy,
    RandomTruncation,
    RigidityModel,
    RoundRobinActivation,
    ScriptedActivation,
    ScriptedFramePolicy,
    ScriptedTruncation,
    TruncationPolicy,
    WorstTruncation,
    derive_seed,
)


class ConfigError(ValueError):
    pass


SCHEDULERS = ("fsynch", "ssynch", "sequential", "asynch")
GENERATORS = ("uniform", "collinear", "convex", "symmetricWithCenter")
OBJECTIVES = ("mutual-visibility", "near-gathering", "circle", "sequential-visibility")


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(raw: dict) -> str:
    return hashlib.sha256(canonical_json(raw).encode()).hexdigest()


# ---------------------------------------------------------------------------
# initial placements


def _min_gap_ok(pts: list[Point2], gap: float) -> bool:
    return all(pts[i].dist(pts[j]) > gap
               for i in range(len(pts)) for j in range(i + 1, len(pts)))


def generate_initial(kind: str, n: int, seed: int, angle: float | None = None,
                     ) -> list[Point2]:
    """Pairwise-distinct starting positions.

    symmetricWithCenter builds a centrally symmetric swarm with one robot at
    the center (odd n only): the placement that forces interior robots to
    take part.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = random.Random(derive_seed(seed, f"initial:{kind}"))
    if kind == "uniform":
        while True:
            pts = [Point2(rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0))
                   for _ in range(n)]
            if _min_gap_ok(pts, 0.05):
                return pts
    if kind == "collinear":
        theta = rng.uniform(0.0, math.pi) if angle is None else angle
        d = Point2(math.cos(theta), math.sin(theta))
        base = Point2(rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0))
        while True:
            ts = sorted(rng.uniform(0.0, 10.0) for _ in range(n))
            if all(b - a > 0.05 for a, b in zip(ts, ts[1:])):
                return [base + d * t for t in ts]
    if kind == "convex":
        while True:
            angles = sorted(rng.uniform(0.0, 2.0 * math.pi) for _ in range(n))
            gaps = [(b - a) for a, b in zip(angles, angles[1:])]
            gaps.append(2.0 * math.pi - (angles[-1] - angles[0]))
            if n > 1 and min(gaps) < 0.02:
                continue
            c = Point2(5.0, 5.0)
            return [c + Point2(4.0 * math.cos(a), 4.0 * math.sin(a)) for a in angles]
    if kind == "symmetricWithCenter":
        if n % 2 == 0:
            raise ConfigError("symmetricWithCenter needs odd n")
        center = Point2(5.0, 5.0)
        while True:
            offsets = [Point2(rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0))
                       for _ in range((n - 1) // 2)]
            pts = [center]
            for off in offsets:
                pts.append(center + off)
                pts.append(center - off)
            if _min_gap_ok(pts, 0.05):
                return pts
    raise ConfigError(f"unknown generator {kind!r}; expected one of {GENERATORS}")


# ---------------------------------------------------------------------------
# run config


@dataclass
class RunConfig:
    protocol: str
    params: ProtocolParams
    scheduler: str
    activation: dict
    frames: dict
    truncation: dict
    rigidity: RigidityModel
    initial: list[Point2]
    objective: dict
    caps: dict
    seed: int
    faulty: tuple[int, ...] = ()
    eps_coll: float | None = None
    raw: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.initial)

    def hash(self) -> str:
        return config_hash(self.raw)

    def initial_diameter(self) -> float:
        if self.n < 2:
            return 0.0
        return convex_hull(self.initial, 1e-12).diameter()

    def effective_eps_coll(self) -> float:
        if self.eps_coll is not None:
            return self.eps_coll
        return 1e-9 * max(self.initial_diameter(), 1.0)


def _parse_frame_spec(d: dict) -> LocalFrame:
    return LocalFrame(Point2(0.0, 0.0),
                      rotation=float(d.get("rotation", 0.0)),
                      reflect=bool(d.get("reflect", False)),
                      scale=float(d.get("scale", 1.0)))


def parse_config(raw: dict) -> RunConfig:
    """Validate a JSON run config.  Raises ConfigError with a diagnostic."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    try:
        protocol = raw["protocol"]
    except KeyError:
        raise ConfigError("missing 'protocol'") from None
    try:
        get_protocol(protocol)
    except Exception as exc:
        raise ConfigError(str(exc)) from exc

    scheduler = raw.get("scheduler", "ssynch")
    if scheduler not in SCHEDULERS:
        raise ConfigError(f"unknown scheduler {scheduler!r}; expected one of {SCHEDULERS}")

    seed = int(raw.get("seed", 0))

    p = raw.get("params", {})
    tol = raw.get("tolerances", {})
    try:
        params = ProtocolParams(
            h_positive=float(p.get("hPositive", 0.25)),
            eps_adjust=(float(p["epsAdjust"]) if "epsAdjust" in p and p["epsAdjust"] is not None else None),
            eps_ng=(float(p["epsNG"]) if "epsNG" in p and p["epsNG"] is not None else None),
            sigma_step=float(p.get("sigmaStep", 1.0 / 3.0)),
            eps_geom=float(tol.get("epsGeom", 1e-9)),
            eps_vis=float(tol.get("epsVis", 1e-9)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad params: {exc}") from exc

    rig_raw = raw.get("rigidity", {"kind": "rigid"})
    try:
        rigidity = RigidityModel(kind=rig_raw.get("kind", "rigid"),
                                 delta=float(rig_raw.get("delta", 0.0)))
    except Exception as exc:
        raise ConfigError(f"bad rigidity: {exc}") from exc

    init_raw = raw.get("initial")
    if init_raw is None:
        raise ConfigError("missing 'initial'")
    if "points" in init_raw:
        try:
            initial = [Point2(float(x), float(y)) for x, y in init_raw["points"]]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad initial points: {exc}") from exc
    elif "generator" in init_raw:
        n = int(init_raw.get("n", raw.get("n", 0)))
        if n < 1:
            raise ConfigError("generator initial needs n >= 1")
        gen_seed = int(init_raw.get("seed", seed))
        initial = generate_initial(init_raw["generator"], n, gen_seed,
                                   angle=init_raw.get("angle"))
    else:
        raise ConfigError("'initial' needs 'points' or 'generator'")
    if len(initial) != len({(p.x, p.y) for p in initial}):
        raise ConfigError("initial positions must be pairwise distinct")
    if "n" in raw and int(raw["n"]) != len(initial):
        raise ConfigError(f"n={raw['n']} does not match {len(initial)} initial points")

    objective = dict(raw.get("objective", {"kind": "mutual-visibility"}))
    if objective.get("kind") not in OBJECTIVES:
        raise ConfigError(f"unknown objective {objective.get('kind')!r}")

    caps = {
        "maxRounds": int(raw.get("caps", {}).get("maxRounds", 100_000)),
        "maxEvents": int(raw.get("caps", {}).get("maxEvents", 2_000_000)),
        "maxTime": float(raw.get("caps", {}).get("maxTime", math.inf)),
    }

    adv = raw.get("adversary", {})
    activation = dict(adv.get("activation", {"kind": "randomFair"}))
    frames = dict(adv.get("frames", {"kind": "identity"}))
    truncation = dict(adv.get("truncation", {"kind": "none"}))

    faulty = tuple(sorted(int(i) for i in raw.get("faulty", [])))
    for i in faulty:
        if not (0 <= i < len(initial)):
            raise ConfigError(f"faulty id {i} out of range")

    eps_coll = tol.get("epsColl")
    cfg = RunConfig(
        protocol=protocol, params=params, scheduler=scheduler,
        activation=activation, frames=frames, truncation=truncation,
        rigidity=rigidity, initial=initial, objective=objective, caps=caps,
        seed=seed, faulty=faulty,
        eps_coll=(float(eps_coll) if eps_coll is not None else None),
        raw=raw,
    )
    build_adversary(cfg)  # fail fast on bad policy specs
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw)


# ---------------------------------------------------------------------------
# adversary construction


def _activation_policy(cfg: RunConfig) -> ActivationPolicy:
    spec = cfg.activation
    kind = spec.get("kind", "randomFair")
    if cfg.scheduler == "fsynch" or kind == "full":
        return FullActivation()
    if kind == "roundRobin":
        return RoundRobinActivation()
    if kind == "randomFair":
        return RandomFairActivation(derive_seed(cfg.seed, "activation"),
                                    singleton=(cfg.scheduler == "sequential"))
    if kind == "scripted":
        return ScriptedActivation([list(r) for r in spec.get("rounds", [])])
    raise ConfigError(f"unknown activation policy {kind!r}")


def _frame_policy(cfg: RunConfig) -> FramePolicy:
    spec = cfg.frames
    kind = spec.get("kind", "identity")
    if kind == "identity":
        return FramePolicy()
    if kind == "randomPerActivation":
        lo, hi = spec.get("scaleRange", (0.5, 2.0))
        return RandomFramePolicy(derive_seed(cfg.seed, "frames"),
                                 scale_range=(float(lo), float(hi)))
    if kind == "scripted":
        frames = {}
        for entry in spec.get("frames", []):
            frames[(int(entry["round"]), int(entry["robot"]))] = _parse_frame_spec(entry)
        return ScriptedFramePolicy(frames)
    raise ConfigError(f"unknown frame policy {kind!r}")


def _truncation_policy(cfg: RunConfig) -> TruncationPolicy:
    spec = cfg.truncation
    kind = spec.get("kind", "none")
    if kind == "none":
        return TruncationPolicy()
    if kind == "randomFair":
        return RandomTruncation(derive_seed(cfg.seed, "truncation"))
    if kind == "worst":
        return WorstTruncation()
    if kind == "scripted":
        fr = {(int(e["round"]), int(e["robot"])): float(e["fraction"])
              for e in spec.get("fractions", [])}
        return ScriptedTruncation(fr)
    raise ConfigError(f"unknown truncation policy {kind!r}")


def build_adversary(cfg: RunConfig) -> Adversary:
    window = int(cfg.activation.get("window", 0)) or 2 * max(cfg.n, 1)
    return Adversary(
        activation=_activation_policy(cfg),
        frames=_frame_policy(cfg),
        truncation=_truncation_policy(cfg),
        fairness_window=window,
    )
