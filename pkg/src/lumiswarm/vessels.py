"""Asynchronous averaging on a cycle of water vessels.

n vessels sit in a ring; valve i connects vessels i and i+1 (mod n).  When a
valve is open for one step, a quarter of the level surplus flows from the
fuller vessel to the emptier one.  With every valve open this is one step of
the circulant Markov matrix with diagonal 1/2 and off-diagonals 1/4.  The sum
of levels is conserved and the squared Euclidean norm acts as a decreasing
energy, which is what makes the process a convergence oracle for the
hull-shrinking default moves of the robot protocols.
"""

from __future__ import annotations

import random
from typing import Callable, Sequence

import numpy as np


class LengthMismatchError(ValueError):
    pass


def _as_levels(w: Sequence[float]) -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("need a 1-D vector of at least two levels")
    return arr


def vessels_step(w: Sequence[float], valves: Sequence[bool]) -> np.ndarray:
    """One synchronous step: open valves exchange a quarter of the surplus.

    valves[i] connects vessels i and i+1 (mod n).
    """
    arr = _as_levels(w)
    v = np.asarray(valves, dtype=bool)
    if v.shape != arr.shape:
        raise LengthMismatchError(f"expected {arr.size} valves, got {v.size}")
    nxt = np.roll(arr, -1)
    flow = np.where(v, (nxt - arr) / 4.0, 0.0)  # inflow from the right neighbor
    return arr + flow - np.roll(flow, 1)


def transition_matrix(n: int) -> np.ndarray:
    """All-valves-open step as the circulant matrix (1/2 diag, 1/4 off)."""
    p = np.zeros((n, n))
    idx = np.arange(n)
    p[idx, idx] = 0.5
    # += so that n == 2, where both ring neighbors coincide, stays stochastic
    np.add.at(p, (idx, (idx + 1) % n), 0.25)
    np.add.at(p, (idx, (idx - 1) % n), 0.25)
    return p


def energy(w: Sequence[float]) -> float:
    """Squared Euclidean norm of the level vector."""
    arr = _as_levels(w)
    return float(arr @ arr)


def check_energy_inequality(w: Sequence[float],
                            valves: Sequence[bool]) -> tuple[float, float, bool]:
    """Energy drop vs. a quarter of the open-valve level gaps, squared.

    Returns (lhs, rhs, holds) for
        lhs = |w_t|^2 - |w_{t+1}|^2,   rhs = (1/4) * sum_i v_i * (w_{i+1}-w_i)^2
    The inequality lhs >= rhs holds for every level vector and valve pattern.
    """
    arr = _as_levels(w)
    nxt_levels = vessels_step(arr, valves)
    lhs = energy(arr) - energy(nxt_levels)
    q = np.roll(arr, -1) - arr
    v = np.asarray(valves, dtype=bool)
    rhs = float(0.25 * np.sum(np.where(v, q * q, 0.0)))
    return lhs, rhs, lhs >= rhs - 1e-12


SchedulePolicy = Callable[[int, int], Sequence[bool]]


def all_open_schedule(n: int, t: int) -> Sequence[bool]:
    return np.ones(n, dtype=bool)


def random_fair_schedule(seed: int) -> SchedulePolicy:
    """Each valve opens with probability 1/2 per step, independently."""
    rng = random.Random(seed)

    def policy(n: int, t: int) -> Sequence[bool]:
        return np.array([rng.random() < 0.5 for _ in range(n)], dtype=bool)

    return policy


def faulty_valve_schedule(closed: int, seed: int | None = None) -> SchedulePolicy:
    """One valve permanently closed; the rest open (optionally at random)."""
    rng = random.Random(seed) if seed is not None else None

    def policy(n: int, t: int) -> Sequence[bool]:
        if rng is None:
            v = np.ones(n, dtype=bool)
        else:
            v = np.array([rng.random() < 0.5 for _ in range(n)], dtype=bool)
        v[closed % n] = False
        return v

    return policy


def run_to_convergence(w0: Sequence[float], schedule: SchedulePolicy,
                       tol: float = 1e-9,
                       max_steps: int = 1_000_000) -> tuple[np.ndarray, int, bool]:
    """Iterate until every level is within ``tol`` of the initial mean.

    Non-convergence within ``max_steps`` is reported, not raised.
    """
    w = _as_levels(w0).copy()
    n = w.size
    target = float(np.mean(w))
    for step in range(max_steps + 1):
        if float(np.max(np.abs(w - target))) < tol:
            return w, step, True
        if step == max_steps:
            break
        w = vessels_step(w, schedule(n, step))
    return w, max_steps, False
