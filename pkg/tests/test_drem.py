import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drem_mrac import matrix_core as mc
from drem_mrac.drem import (DremState, controller_regression, drem_step, extract, mix, mix_kernel,
                            snapshot)
from conftest import random_matched_pair


def test_scalar_extension_closed_form():
    # phi_bar = 1, z_bar = 2, k = 1 from rest: F(1) = 1 - e^-1, G(1) = 2 (1 - e^-1)
    s = DremState.zeros(1, 1, k=1.0)
    for _ in range(1000):
        s = drem_step(s, [1.0], [2.0], 1e-3)
    assert s.F[0, 0] == pytest.approx(1 - np.exp(-1), rel=1e-12)
    assert s.G[0, 0] == pytest.approx(2 * (1 - np.exp(-1)), rel=1e-12)
    z, phi = mix(s)
    assert z[0, 0] == pytest.approx(2 * (1 - np.exp(-1)), rel=1e-12)
    assert z[0, 0] / phi == pytest.approx(2.0, rel=1e-14)


def test_extension_constant_regressor_closed_form():
    rng = np.random.default_rng(0)
    pb = rng.normal(size=4)
    zb = rng.normal(size=3)
    k, T = 10.0, 0.5
    s = DremState.zeros(4, 3, k)
    for _ in range(500):
        s = drem_step(s, pb, zb, 1e-3)
    c = (1 - np.exp(-k * T)) / k
    assert np.allclose(s.F, c * np.outer(pb, pb), rtol=1e-10)
    assert np.allclose(s.G, c * np.outer(pb, zb), rtol=1e-10)
    assert np.array_equal(s.F, s.F.T)


def test_state_validation():
    with pytest.raises(ValueError):
        DremState.zeros(3, 2, k=0.0)
    with pytest.raises(mc.DimensionError):
        drem_step(DremState.zeros(3, 2), np.ones(4), np.ones(2), 1e-3)


def test_mixing_zero_state():
    z, phi = mix(DremState.zeros(3, 2))
    assert phi == 0.0
    assert np.array_equal(z, np.zeros((3, 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(1, 7))
def test_mixing_identity_on_consistent_data(seed, q):
    # F built from samples, G = F theta: then adj(F) G = det(F) theta
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(q + 3, q))
    F = V.T @ V
    theta = rng.normal(size=(q, 2))
    z, phi = mix_kernel(F, F @ theta)
    assert phi == pytest.approx(np.linalg.det(F), rel=1e-9)
    assert np.allclose(z, phi * theta, rtol=1e-7, atol=1e-9 * abs(phi) * (1 + np.abs(theta).max()))


def test_extract_shapes():
    z = np.arange(24.0).reshape(6, 4)
    zA, zB = extract(z, 1.0, 4, 2)
    assert np.array_equal(zA, z[:4].T)
    assert np.array_equal(zB, z[4:6].T)
    # extra x0 row is ignored
    zA2, zB2 = extract(np.vstack([z, np.ones((1, 4))]), 1.0, 4, 2)
    assert np.array_equal(zB2, zB)
    with pytest.raises(mc.DimensionError):
        extract(z[:5], 1.0, 4, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 5), st.integers(1, 3), st.floats(0.1, 3.0))
def test_controller_regression_matched_pair(seed, n, m, phi):
    m = min(m, n)
    p, r, K_x, K_r = random_matched_pair(np.random.default_rng(seed), n, m)
    Delta, y = controller_regression(phi * p.A, phi * p.B, phi, r)
    assert Delta == pytest.approx(phi ** (2 * m) * np.linalg.det(p.B.T @ p.B), rel=1e-9)
    theta = np.vstack([K_x.T, K_r.T])
    assert y.shape == (n + m, m)
    assert np.allclose(y, Delta * theta, rtol=1e-7, atol=1e-9 * abs(Delta) * (1 + np.abs(theta).max()))


def test_controller_regression_shape_errors(ref):
    with pytest.raises(mc.DimensionError):
        controller_regression(np.eye(3), np.ones((3, 2)), 1.0, ref)


def test_snapshot_from_consistent_filters(plant, ref):
    # feed samples of an exact regression z_bar = theta_AB^T phi_bar
    rng = np.random.default_rng(1)
    theta_ab = plant.theta_ab
    s = DremState.zeros(7, 4)
    for _ in range(200):
        pb = rng.normal(size=7)
        s = drem_step(s, pb, theta_ab.T @ pb, 1e-2)
    snap = snapshot(s, ref)
    assert np.allclose(snap.z, snap.phi * theta_ab, rtol=1e-8, atol=1e-10 * abs(snap.phi))
    Delta, y = controller_regression(snap.z_A, snap.z_B, snap.phi, ref)
    assert snap.Delta == Delta
    assert np.array_equal(snap.y_theta, y)
