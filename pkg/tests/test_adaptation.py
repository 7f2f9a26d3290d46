import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drem_mrac.adaptation import (GainSchedule, MemoryState, adapt_step, baseline_adapt_step, gain,
                                  memory_step)


def test_memory_constant_input_closed_form():
    # v = e^{-sigma t} int_0^t f: constant f gives f t e^{-sigma t}
    sig = 0.5
    D = 2.0
    Y = np.array([[1.0, -2.0], [0.5, 3.0], [0.0, 1.0]])
    s = MemoryState.zeros(2, 1, sig)
    s = MemoryState(s.Omega, np.zeros((3, 2)), sig)
    dt = 1e-2
    for _ in range(500):
        s = memory_step(s, D, Y, dt=dt)
    assert s.t == pytest.approx(5.0)
    w = 5.0 * np.exp(-sig * 5.0)
    assert s.Omega == pytest.approx(D * D * w, rel=1e-9)
    assert np.allclose(s.Upsilon, D * Y * w, rtol=1e-9)


def test_memory_validation():
    with pytest.raises(ValueError):
        MemoryState.zeros(2, 1, sigma=0.0)
    with pytest.raises(TypeError):
        memory_step(MemoryState.zeros(2, 1), 1.0, np.zeros((3, 1)))


def test_gain_examples():
    sch = GainSchedule(1.0, 10.0)
    assert gain(sch, 2.0, [3.0, 4.0]) == pytest.approx(8.75)
    assert gain(sch, 1.0, [0.0, 0.0]) == pytest.approx(10.0)
    assert gain(sch, 0.0, [1.0]) == 0.0
    assert gain(GainSchedule(1.0, 10.0, omega_epsilon=0.5), 0.4, [1.0]) == 0.0


def test_schedule_validation():
    with pytest.raises(ValueError):
        GainSchedule(gamma0=0.5)
    with pytest.raises(ValueError):
        GainSchedule(gamma1=-1.0)


def test_main_law_exponential_rate():
    # Upsilon = Omega theta: theta_tilde' = -(gamma0 |w|^2 + gamma1) theta_tilde
    theta = np.array([[1.0, 2.0], [-1.0, 0.5], [0.3, 0.0]])
    Om = 3.7
    s = MemoryState(Om, Om * theta)
    sch = GainSchedule(1.0, 2.0)
    w = np.array([1.0, 0.5])
    th = np.zeros_like(theta)
    dt = 1e-3
    for _ in range(1000):
        th = adapt_step(th, s, sch, w, dt)
    rate = 1.0 * (w @ w) + 2.0
    assert np.allclose(th - theta, -theta * np.exp(-rate), rtol=1e-9)


def test_main_law_frozen_before_excitation():
    th = np.ones((3, 1))
    assert np.array_equal(adapt_step(th, MemoryState.zeros(2, 1), GainSchedule(), [1.0, 1.0], 1e-3), th)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(1e-30, 1e30), st.floats(0.0, 100.0))
def test_main_law_monotone_decay_any_omega(seed, Om, g1):
    rng = np.random.default_rng(seed)
    theta = rng.normal(size=(4, 2))
    s = MemoryState(Om, Om * theta)
    sch = GainSchedule(1.0 + rng.uniform(0, 2), g1)
    th = rng.normal(size=(4, 2))
    prev = np.linalg.norm(th - theta)
    for _ in range(20):
        th = adapt_step(th, s, sch, rng.normal(size=3), 1e-2)
        cur = np.linalg.norm(th - theta)
        assert cur <= prev * (1 + 1e-12) + 1e-12
        prev = cur


def test_baseline_signs_scalar():
    # Delta = 1, y = Delta theta with theta = 1, gamma = 1, from theta_hat = 0
    c = np.zeros((1, 1))
    ne = np.zeros((1, 1))
    dt = 1e-2
    for _ in range(500):
        c = baseline_adapt_step(c, 1.0, [[1.0]], 1.0, dt, "corrected")
        ne = baseline_adapt_step(ne, 1.0, [[1.0]], 1.0, dt, "printed")
    assert abs(c[0, 0] - 1.0) == pytest.approx(np.exp(-5.0), rel=1e-8)
    assert abs(ne[0, 0] - 1.0) == pytest.approx(np.exp(5.0), rel=1e-8)


def test_baseline_sign_validation():
    with pytest.raises(ValueError):
        baseline_adapt_step(np.zeros((1, 1)), 1.0, [[1.0]], 1.0, 1e-2, "flipped")
