"""Dynamic regressor extension and mixing for the controller parameters.

Extension: F' = -k F + phi_bar phi_bar^T, G' = -k G + phi_bar z_bar^T.
Mixing:    z = adj(F) G, phi = det F, so that z = phi theta_AB.
Then z_A = phi A and z_B = phi B give the scalar regression
y_theta = Delta theta with Delta = det(z_B^T z_B).
"""
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import matrix_core as mc
from ._rk4 import rk4_step


@dataclass(frozen=True)
class DremState:
    F: np.ndarray
    G: np.ndarray
    k: float = 10.0

    @classmethod
    def zeros(cls, q, n, k=10.0):
        if not k > 0:
            raise ValueError(f"k must be positive, got {k}")
        return cls(np.zeros((q, q)), np.zeros((q, n)), k)

    @property
    def q(self):
        return self.F.shape[0]


@dataclass(frozen=True)
class DremSnapshot:
    z: np.ndarray
    phi: float
    z_A: np.ndarray
    z_B: np.ndarray
    Delta: float
    y_theta: np.ndarray


@njit(cache=True)
def mix_kernel(F, G):
    return mc.adj_mul(F, G)


@njit(cache=True)
def regression_kernel(z, phi, A_ref, B_ref):
    """Return (Delta, y_theta) from z = adj(F) G and phi = det F."""
    n = A_ref.shape[0]
    m = B_ref.shape[1]
    p = n + m
    zB = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            zB[i, j] = z[n + j, i]
    # ybar^T = [phi A_ref - z_A, phi B_ref], n x (n+m)
    ybT = np.empty((n, p))
    for i in range(n):
        for j in range(n):
            ybT[i, j] = phi * A_ref[i, j] - z[j, i]
        for j in range(m):
            ybT[i, n + j] = phi * B_ref[i, j]
    M = zB.T @ zB
    yT, Delta = mc.adj_mul(M, zB.T @ ybT)
    return Delta, yT.T.copy()


def drem_step(state, phi_bar, z_bar, dt):
    """RK4 step of the extension filters with phi_bar, z_bar held over the step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    pb = np.asarray(phi_bar, dtype=float)
    zb = np.asarray(z_bar, dtype=float)
    if pb.shape[0] != state.q or zb.shape[0] != state.G.shape[1]:
        raise mc.DimensionError(f"phi_bar/z_bar sizes {pb.shape[0]}/{zb.shape[0]} do not match state {state.q}/{state.G.shape[1]}")
    k = state.k
    PP = np.outer(pb, pb)
    PZ = np.outer(pb, zb)
    F = rk4_step(lambda t, y: -k * y + PP, 0.0, state.F, dt)
    G = rk4_step(lambda t, y: -k * y + PZ, 0.0, state.G, dt)
    return DremState(0.5 * (F + F.T), G, k)


def mix(state):
    z, phi = mc.adjugate_product(state.F, state.G)
    return z, phi


def extract(z, phi, n, m):
    """(z_A, z_B) = (first n rows of z, next m rows of z), transposed."""
    z = np.asarray(z, dtype=float)
    if z.shape[1] != n or z.shape[0] < n + m:
        raise mc.DimensionError(f"z has shape {z.shape}, need at least ({n + m}, {n})")
    return z[:n].T.copy(), z[n:n + m].T.copy()


def controller_regression(z_A, z_B, phi, ref):
    z_A = np.asarray(z_A, dtype=float)
    z_B = np.asarray(z_B, dtype=float)
    n, m = z_B.shape
    if z_A.shape != (n, n) or ref.n != n or ref.m != m:
        raise mc.DimensionError("z_A, z_B and the reference model disagree on (n, m)")
    z = np.vstack([z_A.T, z_B.T])
    Delta, y = regression_kernel(z, float(phi), ref.A_ref, ref.B_ref)
    return float(Delta), y


def snapshot(state, ref):
    n, m = ref.n, ref.m
    z, phi = mix(state)
    z_A, z_B = extract(z, phi, n, m)
    Delta, y = controller_regression(z_A, z_B, phi, ref)
    return DremSnapshot(z, phi, z_A, z_B, Delta, y)
