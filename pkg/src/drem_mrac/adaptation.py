"""Forgetting-integral memory, gain schedule and adaptive laws.

Memory:   v' = -sigma v + e^{-sigma t} f, i.e. v = e^{-sigma t} int_0^t f,
          for f = Delta^2 (Omega) and f = Delta y_theta (Upsilon).
Main law: theta_hat' = -gamma Omega (Omega theta_hat - Upsilon), with
          gamma = (gamma0 |omega|^2 + gamma1) / Omega^2 once Omega > 0.
Baseline: theta_hat' = -gamma Delta (y_theta - Delta theta_hat) as written,
          or with the sign flipped so that theta_tilde' = -gamma Delta^2 theta_tilde.
"""
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._rk4 import rk4_step

BASELINE_SIGNS = ("corrected", "printed")


@dataclass(frozen=True)
class MemoryState:
    Omega: float
    Upsilon: np.ndarray
    sigma: float = 0.5
    t: float = 0.0

    @classmethod
    def zeros(cls, n, m, sigma=0.5):
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        return cls(0.0, np.zeros((n + m, m)), sigma, 0.0)


@dataclass(frozen=True)
class GainSchedule:
    gamma0: float = 1.0
    gamma1: float = 10.0
    omega_epsilon: float = 0.0

    def __post_init__(self):
        if not self.gamma0 >= 1.0:
            raise ValueError(f"gamma0 must be >= 1, got {self.gamma0}")
        if not self.gamma1 >= 0.0:
            raise ValueError(f"gamma1 must be >= 0, got {self.gamma1}")
        if not self.omega_epsilon >= 0.0:
            raise ValueError(f"omega_epsilon must be >= 0, got {self.omega_epsilon}")


@njit(cache=True)
def contraction_rate(gamma0, gamma1, w):
    # lambda_max(w w^T) = w^T w for a rank-one matrix
    return gamma0 * (w @ w) + gamma1


@njit(cache=True)
def adapt_rhs(theta_hat, Omega, Upsilon, rate, out):
    """out = -gamma Omega (Omega theta_hat - Upsilon) with gamma = rate / Omega^2.

    gamma Omega is formed as rate / Omega so that Omega^2 never has to be
    representable.
    """
    g = rate / Omega
    for i in range(theta_hat.shape[0]):
        for j in range(theta_hat.shape[1]):
            out[i, j] = -g * (Omega * theta_hat[i, j] - Upsilon[i, j])


@njit(cache=True)
def baseline_rhs(theta_hat, Delta, y_theta, gamma, printed, out):
    s = -1.0 if printed else 1.0
    for i in range(theta_hat.shape[0]):
        for j in range(theta_hat.shape[1]):
            out[i, j] = s * gamma * Delta * (y_theta[i, j] - Delta * theta_hat[i, j])


def memory_step(state, Delta, y_theta, t=None, dt=None):
    """RK4 step of the memory ODEs with Delta, y_theta held over the step."""
    if dt is None:
        raise TypeError("dt is required")
    if not dt > 0:
        raise ValueError("dt must be positive")
    t0 = state.t if t is None else float(t)
    sig = state.sigma
    D = float(Delta)
    Y = np.asarray(y_theta, dtype=float)
    Om = rk4_step(lambda t, v: -sig * v + np.exp(-sig * t) * D * D, t0, state.Omega, dt)
    Up = rk4_step(lambda t, v: -sig * v + np.exp(-sig * t) * D * Y, t0, state.Upsilon, dt)
    return MemoryState(float(Om), Up, sig, t0 + dt)


def gain(schedule, Omega, omega_vec):
    if not Omega > schedule.omega_epsilon:
        return 0.0
    w = np.asarray(omega_vec, dtype=float)
    return float((schedule.gamma0 * (w @ w) + schedule.gamma1) / (Omega * Omega))


def adapt_step(theta_hat, state, schedule, omega_vec, dt, gamma=None):
    """RK4 step of the main law with Omega, Upsilon and omega held over the step.

    gamma defaults to the scheduled gain; pass it explicitly to drive the law
    with a fixed gain.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    th = np.asarray(theta_hat, dtype=float)
    Om = float(state.Omega)
    Up = np.asarray(state.Upsilon, dtype=float)
    g = gain(schedule, Om, omega_vec) if gamma is None else float(gamma)
    if g == 0.0 or Om == 0.0:
        return th.copy()
    return rk4_step(lambda t, y: -g * Om * (Om * y - Up), 0.0, th, dt)


def baseline_adapt_step(theta_hat, Delta, y_theta, gamma, dt, sign="corrected"):
    if sign not in BASELINE_SIGNS:
        raise ValueError(f"sign must be one of {BASELINE_SIGNS}, got {sign!r}")
    if not dt > 0:
        raise ValueError("dt must be positive")
    th = np.asarray(theta_hat, dtype=float)
    D = float(Delta)
    Y = np.asarray(y_theta, dtype=float)
    s = -1.0 if sign == "printed" else 1.0
    return rk4_step(lambda t, y: s * gamma * D * (Y - D * y), 0.0, th, dt)
