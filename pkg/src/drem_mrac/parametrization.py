"""Stable filters of [x; u] and the extended regression z_bar = theta_AB^T phi_bar.

Unknown-x0 mode: phi_bar = [Phi_bar; e^{-lt}], theta_AB = [A B x0]^T.
Known-x0 mode:   phi_bar = Phi_bar,            theta_AB = [A B]^T, and the
known e^{-lt} x0 term is subtracted from z_bar.
"""
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._rk4 import rk4_step


@dataclass(frozen=True)
class FilterConfig:
    l: float = 1.0
    x0_known: bool = False

    def __post_init__(self):
        if not self.l > 0:
            raise ValueError(f"filter constant l must be positive, got {self.l}")


@dataclass(frozen=True)
class FilterState:
    phi_bar: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, n, m):
        return cls(np.zeros(n + m), 0.0)


@dataclass(frozen=True)
class ExtendedRegression:
    z_bar: np.ndarray
    phi_bar_ext: np.ndarray


def regressor_dim(n, m, x0_known):
    return n + m if x0_known else n + m + 1


@njit(cache=True)
def regressor_kernel(t, x, Pb, l, scale, x0_known, x0, phib, zb):
    """Write scale*phi_bar into phib and scale*z_bar into zb."""
    n = x.shape[0]
    p = Pb.shape[0]
    el = np.exp(-l * max(t, 0.0))
    for i in range(p):
        phib[i] = scale * Pb[i]
    if not x0_known:
        phib[p] = scale * el
    for i in range(n):
        v = x[i] - l * Pb[i]
        if x0_known:
            v -= el * x0[i]
        zb[i] = scale * v


def filter_step(state, Phi, dt, cfg=FilterConfig()):
    """RK4 step of Phi_bar' = -l Phi_bar + Phi with Phi held over the step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    Phi = np.asarray(Phi, dtype=float)
    l = cfg.l
    pb = rk4_step(lambda t, y: -l * y + Phi, state.t, state.phi_bar, dt)
    return FilterState(pb, state.t + dt)


def z_bar(state, x, cfg=FilterConfig(), x0=None):
    """x - l x_bar; in known-x0 mode also subtracts e^{-lt} x0."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    z = x - cfg.l * state.phi_bar[:n]
    if cfg.x0_known:
        if x0 is None:
            raise ValueError("known-x0 mode needs x0")
        z = z - np.exp(-cfg.l * max(state.t, 0.0)) * np.asarray(x0, dtype=float)
    return z


def extended_regressor(state, cfg=FilterConfig()):
    if cfg.x0_known:
        return state.phi_bar.copy()
    return np.append(state.phi_bar, np.exp(-cfg.l * max(state.t, 0.0)))


def extended_regression(state, x, cfg=FilterConfig(), x0=None):
    return ExtendedRegression(z_bar(state, x, cfg, x0), extended_regressor(state, cfg))
