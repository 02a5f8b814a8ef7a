"""Diffusion step, energy certificates and convergence of the vessel ring."""

import random

import numpy as np
import pytest

from lumiswarm.vessels import (
    LengthMismatchError,
    all_open_schedule,
    check_energy_inequality,
    energy,
    faulty_valve_schedule,
    random_fair_schedule,
    run_to_convergence,
    transition_matrix,
    vessels_step,
)


def test_step_all_open_n3():
    out = vessels_step([1.0, 0.0, 0.0], [True, True, True])
    assert np.allclose(out, [0.5, 0.25, 0.25])


def test_step_matches_matrix():
    rng = random.Random(1)
    for n in (2, 3, 5, 8, 17):
        w = np.array([rng.uniform(-3, 3) for _ in range(n)])
        out = vessels_step(w, [True] * n)
        assert np.allclose(out, transition_matrix(n) @ w, atol=1e-12)


def test_step_all_closed_identity():
    w = [2.0, -1.0, 0.5, 3.0]
    assert np.allclose(vessels_step(w, [False] * 4), w)


def test_step_constant_fixed_point():
    w = [0.7] * 6
    out = vessels_step(w, [True, False, True, True, False, True])
    assert np.allclose(out, w)


def test_step_length_mismatch():
    with pytest.raises(LengthMismatchError):
        vessels_step([1.0, 2.0, 3.0], [True, True])


def test_energy_values():
    assert energy([1.0, 0.0, 0.0]) == pytest.approx(1.0)
    assert energy([0.5, 0.25, 0.25]) == pytest.approx(0.375)
    assert energy([2.0] * 5) == pytest.approx(20.0)


def test_energy_inequality_example():
    lhs, rhs, holds = check_energy_inequality([1.0, 0.0, 0.0], [True, True, True])
    assert lhs == pytest.approx(0.625)
    assert rhs == pytest.approx(0.5)
    assert holds


def test_energy_inequality_trivial_cases():
    lhs, rhs, holds = check_energy_inequality([1.0, 2.0, 3.0], [False] * 3)
    assert lhs == rhs == 0.0 and holds
    lhs, rhs, holds = check_energy_inequality([4.0] * 5, [True] * 5)
    assert lhs == pytest.approx(0.0, abs=1e-12)
    assert rhs == pytest.approx(0.0, abs=1e-12)
    assert holds


def test_random_steps_conserve_and_dissipate():
    rng = random.Random(99)
    for _ in range(2000):
        n = rng.randint(2, 32)
        w = np.array([rng.uniform(-10, 10) for _ in range(n)])
        valves = [rng.random() < 0.5 for _ in range(n)]
        out = vessels_step(w, valves)
        assert abs(out.sum() - w.sum()) <= 1e-12 * n * max(1.0, np.abs(w).max())
        assert energy(out) <= energy(w) + 1e-12
        assert out.max() <= w.max() + 1e-12
        assert out.min() >= w.min() - 1e-12
        lhs, rhs, holds = check_energy_inequality(w, valves)
        assert holds


def test_convergence_all_open():
    rng = random.Random(4)
    w0 = [rng.uniform(-5, 5) for _ in range(8)]
    w, steps, ok = run_to_convergence(w0, all_open_schedule, tol=1e-9)
    assert ok
    assert np.allclose(w, np.mean(w0), atol=1e-8)


def test_convergence_with_one_faulty_valve():
    rng = random.Random(5)
    w0 = [rng.uniform(-5, 5) for _ in range(8)]
    for closed in range(8):
        w, steps, ok = run_to_convergence(
            w0, faulty_valve_schedule(closed, seed=closed), tol=1e-9,
            max_steps=200_000)
        assert ok, f"valve {closed} closed should still converge"


def test_no_convergence_with_two_cuts():
    # Two permanently closed valves split the ring into two arcs with
    # different means: the levels cannot mix.
    w0 = [1.0, 1.0, 1.0, 5.0, 5.0, 5.0]

    def schedule(n, t):
        v = [True] * n
        v[2] = False  # cuts between arc {0,1,2} and {3,4,5}
        v[5] = False
        return v

    w, steps, ok = run_to_convergence(w0, schedule, tol=1e-9, max_steps=20_000)
    assert not ok
    assert np.allclose(np.mean(w[:3]), 1.0)
    assert np.allclose(np.mean(w[3:]), 5.0)


def test_convergence_fair_random():
    rng = random.Random(6)
    for trial in range(5):
        n = rng.randint(2, 16)
        w0 = [rng.uniform(-10, 10) for _ in range(n)]
        w, steps, ok = run_to_convergence(
            w0, random_fair_schedule(seed=trial), tol=1e-9, max_steps=500_000)
        assert ok
