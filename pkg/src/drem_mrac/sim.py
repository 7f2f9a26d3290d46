"""Closed-loop simulation: plant, reference model, filters, DREM, memory and
adaptive law advanced together by one fixed-step RK4 vector field.

Switching. The gain is held at zero until the excitation monitor certifies
that its designated signal is finitely exciting, i.e. the running Gramian
int_0^t v v^T reaches alpha I. The Gramian is part of the RK4 state and the
crossing instant is located inside the step by bisection on the step length,
so the switch does not snap to the grid and the scheme keeps its order.

Round-off. Filter states, Gramians and the forgetting integrals are summed
with compensated (Kahan) updates. DREM divides nothing but multiplies a
nearly singular q x q Gramian through its adjugate, which amplifies the
summation error of F and G; compensation keeps that error near one ulp.
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numba import njit

from . import matrix_core as mc
from .adaptation import BASELINE_SIGNS, GainSchedule, adapt_rhs, baseline_rhs, contraction_rate
from .drem import mix_kernel, regression_kernel
from .parametrization import FilterConfig, regressor_dim, regressor_kernel
from .plant import default_theta_hat, ideal_gains

MONITOR_SIGNALS = ("delta", "plant_regressor", "extended_regressor")
REFERENCE_KINDS = ("constant", "exp_rise", "table")
BISECTION_ITERS = 60


class DivergenceError(RuntimeError):
    def __init__(self, signal, t):
        self.signal = signal
        self.t = float(t)
        super().__init__(f"non-finite value in {signal} at t = {t:.6g} s")


@dataclass(frozen=True)
class ReferenceChannel:
    """One reference channel: constant c, c (1 - e^{-a t}), or a linear table."""
    kind: str = "constant"
    value: float = 0.0
    rate: float = 0.0
    t: Optional[tuple] = None
    values: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValueError(f"reference kind must be one of {REFERENCE_KINDS}, got {self.kind!r}")
        if self.kind == "exp_rise" and not self.rate > 0:
            raise ValueError("exp_rise reference needs a positive rate")
        if self.kind == "table":
            if self.t is None or self.values is None or len(self.t) != len(self.values) or len(self.t) < 1:
                raise ValueError("table reference needs equal-length, non-empty t and values")
            if np.any(np.diff(np.asarray(self.t, dtype=float)) <= 0):
                raise ValueError("table reference times must be strictly increasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.value)
        if self.kind == "exp_rise":
            return self.value * (1.0 - np.exp(-self.rate * t))
        return np.interp(t, self.t, self.values)


@dataclass(frozen=True)
class MonitorConfig:
    signal: str = "delta"
    alpha: float = 1e-12
    relative: bool = False

    def __post_init__(self):
        if self.signal not in MONITOR_SIGNALS:
            raise ValueError(f"monitor signal must be one of {MONITOR_SIGNALS}, got {self.signal!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class BaselineConfig:
    enabled: bool = False
    gamma: object = "auto"
    sign: str = "corrected"

    def __post_init__(self):
        if self.sign not in BASELINE_SIGNS:
            raise ValueError(f"baseline sign must be one of {BASELINE_SIGNS}, got {self.sign!r}")
        if self.gamma != "auto" and not (isinstance(self.gamma, (int, float)) and self.gamma > 0):
            raise ValueError(f"baseline gamma must be 'auto' or a positive number, got {self.gamma!r}")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-4
    T: float = 20.0
    reference: tuple = (ReferenceChannel("constant", 1.0), ReferenceChannel("exp_rise", 0.5, 10.0))
    filter: FilterConfig = FilterConfig()
    k: float = 10.0
    scale: float = 1.0
    sigma: float = 0.5
    schedule: GainSchedule = GainSchedule()
    monitor: MonitorConfig = MonitorConfig()
    baseline: BaselineConfig = BaselineConfig()
    theta_hat0: Optional[np.ndarray] = None
    log_every: int = 1
    compensated: bool = True
    record_internals: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T > self.dt:
            raise ValueError(f"T must exceed dt, got T={self.T}, dt={self.dt}")
        if not self.k > 0 or not self.sigma > 0 or not self.scale > 0:
            raise ValueError("k, sigma and scale must be positive")
        if int(self.log_every) < 1:
            raise ValueError("log_every must be >= 1")

    @property
    def steps(self):
        return int(round(self.T / self.dt))


@dataclass
class SimTrace:
    t: np.ndarray
    x: np.ndarray
    x_ref: np.ndarray
    u: np.ndarray
    Delta: np.ndarray
    phi: np.ndarray
    Omega: np.ndarray
    gamma: np.ndarray
    theta_hat: np.ndarray
    gate: np.ndarray
    switch_flag: np.ndarray
    fe_measure: np.ndarray
    t_e: Optional[float]
    theta_true: Optional[np.ndarray] = None
    internals: Optional[dict] = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.x.shape[1]

    @property
    def m(self):
        return self.u.shape[1]

    @property
    def e_ref(self):
        return self.x - self.x_ref

    @property
    def eref_norm(self):
        return np.linalg.norm(self.e_ref, axis=1)

    @property
    def theta_tilde(self):
        if self.theta_true is None:
            return None
        return self.theta_hat - self.theta_true[None]

    @property
    def thetatilde_norm(self):
        tt = self.theta_tilde
        return None if tt is None else np.sqrt((tt ** 2).sum(axis=(1, 2)))

    @property
    def xi_norm(self):
        tn = self.thetatilde_norm
        return None if tn is None else np.sqrt(self.eref_norm ** 2 + tn ** 2)

    @property
    def switch_count(self):
        g = self.gate.astype(int)
        return int(np.sum(np.diff(g) != 0) + (g[0] != 0))


# --- excitation monitor (standalone, trapezoid rule) -------------------------

@dataclass(frozen=True)
class FeMonitor:
    alpha: float
    gramian: Optional[np.ndarray] = None
    t: float = 0.0
    t_e_detected: Optional[float] = None
    last: Optional[np.ndarray] = None


def fe_check(monitor, signal_sample, dt):
    """Trapezoid update of int v v^T; records the first time lambda_min >= alpha.

    The first sample has no predecessor and is paired with itself.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = np.atleast_1d(np.asarray(signal_sample, dtype=float))
    prev = v if monitor.last is None else monitor.last
    G0 = np.zeros((v.size, v.size)) if monitor.gramian is None else monitor.gramian
    G = G0 + 0.5 * dt * (np.outer(prev, prev) + np.outer(v, v))
    t = monitor.t + dt
    t_e = monitor.t_e_detected
    if t_e is None:
        lam = G[0, 0] if v.size == 1 else mc.min_eig_sym(0.5 * (G + G.T))
        if lam >= monitor.alpha:
            t_e = t
    return FeMonitor(monitor.alpha, G, t, t_e, v)


def fe_detection_time(t, samples, alpha):
    """Run fe_check over a sampled signal (rows of ``samples``); returns t_e or None."""
    samples = np.asarray(samples, dtype=float)
    mon = FeMonitor(alpha, t=float(t[0]))
    for i in range(1, len(t)):
        if i == 1:
            mon = replace(mon, last=np.atleast_1d(samples[0]))
        mon = fe_check(mon, samples[i], t[i] - t[i - 1])
        if mon.t_e_detected is not None:
            return mon.t_e_detected
    return None


# --- jitted closed loop ------------------------------------------------------

# par: l, k, sigma, gamma0, gamma1, scale, omega_eps, baseline_gamma, alpha
# flg: x0_known, baseline_on, baseline_printed, monitor_kind, relative, compensated, internals
# off: x, x_ref, Phi_bar, F, G, Omega, Upsilon, theta_hat, gramian, theta_hat_baseline, end

@njit(cache=True)
def _reference(t, rkind, rpar, tab_t, tab_v, tab_off, r):
    for j in range(rkind.shape[0]):
        if rkind[j] == 0:
            r[j] = rpar[j, 0]
        elif rkind[j] == 1:
            r[j] = rpar[j, 0] * (1.0 - np.exp(-rpar[j, 1] * t))
        else:
            a = tab_off[j]
            b = tab_off[j + 1]
            r[j] = np.interp(t, tab_t[a:b], tab_v[a:b])


@njit(cache=True)
def _field(t, s, gate, want, out, info, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off):
    n = A.shape[0]
    m = B.shape[1]
    p = n + m
    known = flg[0] != 0
    q = p if known else p + 1
    l = par[0]
    k = par[1]
    sig = par[2]

    x = s[off[0]:off[0] + n]
    xr = s[off[1]:off[1] + n]
    Pb = s[off[2]:off[2] + p]
    F = s[off[3]:off[3] + q * q].reshape((q, q))
    G = s[off[4]:off[4] + q * n].reshape((q, n))
    Om = s[off[5]]
    Up = s[off[6]:off[6] + p * m].reshape((p, m))
    th = s[off[7]:off[7] + p * m].reshape((p, m))

    r = np.empty(m)
    _reference(t, rkind, rpar, tab_t, tab_v, tab_off, r)
    w = np.empty(p)
    w[:n] = x
    w[n:] = r
    u = th.T @ w

    out[off[0]:off[0] + n] = A @ x + B @ u
    out[off[1]:off[1] + n] = Ar @ xr + Br @ r
    Phi = np.empty(p)
    Phi[:n] = x
    Phi[n:] = u
    out[off[2]:off[2] + p] = -l * Pb + Phi

    phib = np.empty(q)
    zb = np.empty(n)
    regressor_kernel(t, x, Pb, l, par[5], known, x0, phib, zb)
    dF = out[off[3]:off[3] + q * q].reshape((q, q))
    dG = out[off[4]:off[4] + q * n].reshape((q, n))
    for i in range(q):
        for j in range(q):
            dF[i, j] = -k * F[i, j] + phib[i] * phib[j]
        for j in range(n):
            dG[i, j] = -k * G[i, j] + phib[i] * zb[j]

    z, phi = mix_kernel(F, G)
    Delta, y = regression_kernel(z, phi, Ar, Br)

    ex = np.exp(-sig * t)
    out[off[5]] = -sig * Om + ex * Delta * Delta
    dUp = out[off[6]:off[6] + p * m].reshape((p, m))
    for i in range(p):
        for j in range(m):
            dUp[i, j] = -sig * Up[i, j] + ex * Delta * y[i, j]

    dth = out[off[7]:off[7] + p * m].reshape((p, m))
    gamma = 0.0
    if gate and Om > par[6]:
        rate = contraction_rate(par[3], par[4], w)
        adapt_rhs(th, Om, Up, rate, dth)
        gamma = rate / (Om * Om)
    else:
        dth[:, :] = 0.0

    # excitation monitor integrand
    mk = flg[3]
    if mk == 0:
        v = np.empty(1)
        v[0] = Delta
    elif mk == 1:
        v = Phi
    else:
        v = phib
    pm = v.shape[0]
    dW = out[off[8]:off[8] + pm * pm].reshape((pm, pm))
    for i in range(pm):
        for j in range(pm):
            dW[i, j] = v[i] * v[j]

    if flg[1] != 0:
        thb = s[off[9]:off[9] + p * m].reshape((p, m))
        dthb = out[off[9]:off[9] + p * m].reshape((p, m))
        baseline_rhs(thb, Delta, y, par[7], flg[2] != 0, dthb)

    if want > 0:
        info[:m] = u
        info[m] = Delta
        info[m + 1] = phi
        info[m + 2] = gamma
        info[m + 3] = v @ v
        if want > 1:
            fn = np.sqrt((F * F).sum())
            info[m + 4] = mc.jacobi_min_eig(F)
            info[m + 5] = fn
        b = m + 6
        info[b:b + q * n] = z.ravel()
        info[b + q * n:b + q * n + p * m] = y.ravel()


@njit(cache=True)
def _increment(t, s, h, k1, gate, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off, dummy):
    ns = s.shape[0]
    k2 = np.empty(ns)
    k3 = np.empty(ns)
    k4 = np.empty(ns)
    _field(t + 0.5 * h, s + 0.5 * h * k1, gate, 0, k2, dummy, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off)
    _field(t + 0.5 * h, s + 0.5 * h * k2, gate, 0, k3, dummy, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off)
    _field(t + h, s + h * k3, gate, 0, k4, dummy, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off)
    return h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def _add(s, inc, comp, compensated):
    if compensated:
        for i in range(s.shape[0]):
            yv = inc[i] - comp[i]
            tt = s[i] + yv
            comp[i] = (tt - s[i]) - yv
            s[i] = tt
    else:
        for i in range(s.shape[0]):
            s[i] += inc[i]


@njit(cache=True)
def _symmetrize(s, o, d):
    for i in range(d):
        for j in range(i + 1, d):
            a = 0.5 * (s[o + i * d + j] + s[o + j * d + i])
            s[o + i * d + j] = a
            s[o + j * d + i] = a


@njit(cache=True)
def _measure(s, o, d):
    if d == 1:
        return s[o]
    return mc.jacobi_min_eig(s[o:o + d * d].reshape((d, d)).copy())


@njit(cache=True)
def _record(rec, row, t, s, info, gate, switch, meas, n, m, q, off, flg):
    p = n + m
    c = 0
    rec[row, c] = t
    c += 1
    rec[row, c:c + n] = s[off[0]:off[0] + n]
    c += n
    rec[row, c:c + n] = s[off[1]:off[1] + n]
    c += n
    rec[row, c:c + m] = info[:m]
    c += m
    rec[row, c] = info[m]
    rec[row, c + 1] = info[m + 1]
    rec[row, c + 2] = s[off[5]]
    rec[row, c + 3] = info[m + 2]
    c += 4
    rec[row, c:c + p * m] = s[off[7]:off[7] + p * m]
    c += p * m
    rec[row, c] = 1.0 if gate else 0.0
    rec[row, c + 1] = switch
    rec[row, c + 2] = meas
    c += 3
    if flg[1] != 0:
        rec[row, c:c + p * m] = s[off[9]:off[9] + p * m]
        c += p * m
    if flg[6] != 0:
        rec[row, c:c + p] = s[off[2]:off[2] + p]
        c += p
        b = m + 6
        rec[row, c:c + q * n + p * m] = info[b:b + q * n + p * m]
        c += q * n + p * m
        rec[row, c:c + p * m] = s[off[6]:off[6] + p * m]
        c += p * m
        rec[row, c] = info[m + 4]
        rec[row, c + 1] = info[m + 5]


@njit(cache=True)
def _integrate(s, dt, N, every, rec, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off):
    n = A.shape[0]
    m = B.shape[1]
    p = n + m
    q = p if flg[0] != 0 else p + 1
    ns = s.shape[0]
    pm = 1 if flg[3] == 0 else (p if flg[3] == 1 else q)
    compensated = flg[5] != 0
    want = 2 if flg[6] != 0 else 1
    info = np.zeros(m + 6 + q * n + p * m)
    dummy = np.zeros(1)
    comp = np.zeros(ns)
    k1 = np.empty(ns)
    gate = False
    t_e = -1.0
    pending = 0.0
    alpha = par[8]

    _field(0.0, s, gate, want, k1, info, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off)
    peak = info[m + 3]
    maxD2 = info[m] * info[m]
    _record(rec, 0, 0.0, s, info, gate, 0.0, _measure(s, off[8], pm), n, m, q, off, flg)
    row = 1

    for i in range(N):
        t = i * dt
        if not gate:
            inc = _increment(t, s, dt, k1, False, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off, dummy)
            thr = alpha * peak if flg[4] != 0 else alpha
            if _measure(s + inc, off[8], pm) >= thr:
                # locate the crossing inside the step
                lo = 0.0
                hi = dt
                for it in range(BISECTION_ITERS):
                    mid = 0.5 * (lo + hi)
                    trial = _increment(t, s, mid, k1, False, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off, dummy)
                    if _measure(s + trial, off[8], pm) >= thr:
                        hi = mid
                    else:
                        lo = mid
                h = hi
                inc = _increment(t, s, h, k1, False, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off, dummy)
                _add(s, inc, comp, compensated)
                gate = True
                t_e = t + h
                pending = 1.0
                if dt - h > 0.0:
                    _field(t + h, s, gate, 0, k1, dummy, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off)
                    inc = _increment(t + h, s, dt - h, k1, True, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off, dummy)
                    _add(s, inc, comp, compensated)
            else:
                _add(s, inc, comp, compensated)
        else:
            inc = _increment(t, s, dt, k1, True, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off, dummy)
            _add(s, inc, comp, compensated)

        _symmetrize(s, off[3], q)
        _symmetrize(s, off[8], pm)
        for j in range(ns):
            if not np.isfinite(s[j]):
                return 1, (i + 1) * dt, j, row, t_e, maxD2

        tn = (i + 1) * dt
        logged = ((i + 1) % every == 0) or (i + 1 == N)
        _field(tn, s, gate, want if logged else 1, k1, info, A, B, Ar, Br, x0, par, flg, off, rkind, rpar, tab_t, tab_v, tab_off)
        for j in range(m + 4):
            if not np.isfinite(info[j]):
                return 2, tn, j, row, t_e, maxD2
        d2 = info[m] * info[m]
        if d2 > maxD2:
            maxD2 = d2
        if info[m + 3] > peak:
            peak = info[m + 3]
        if logged:
            _record(rec, row, tn, s, info, gate, pending, _measure(s, off[8], pm), n, m, q, off, flg)
            pending = 0.0
            row += 1
    return 0, N * dt, -1, row, t_e, maxD2


def _layout(n, m, q, pm, baseline):
    p = n + m
    names = [("x", n), ("x_ref", n), ("Phi_bar", p), ("F", q * q), ("G", q * n), ("Omega", 1),
             ("Upsilon", p * m), ("theta_hat", p * m), ("fe_gramian", pm * pm), ("theta_hat_baseline", p * m if baseline else 0)]
    off = np.zeros(len(names) + 1, dtype=np.int64)
    for i, (_, size) in enumerate(names):
        off[i + 1] = off[i] + size
    return names, off


def _signal_at(names, off, idx):
    for i, (name, _) in enumerate(names):
        if off[i] <= idx < off[i + 1]:
            return name
    return f"state[{idx}]"


def _reference_arrays(channels):
    kinds = np.zeros(len(channels), dtype=np.int64)
    rpar = np.zeros((len(channels), 2))
    tabs_t, tabs_v = [], []
    tab_off = np.zeros(len(channels) + 1, dtype=np.int64)
    for j, ch in enumerate(channels):
        kinds[j] = REFERENCE_KINDS.index(ch.kind)
        rpar[j] = (ch.value, ch.rate)
        if ch.kind == "table":
            tabs_t.append(np.asarray(ch.t, dtype=float))
            tabs_v.append(np.asarray(ch.values, dtype=float))
        tab_off[j + 1] = tab_off[j] + (len(ch.t) if ch.kind == "table" else 0)
    tab_t = np.concatenate(tabs_t) if tabs_t else np.zeros(0)
    tab_v = np.concatenate(tabs_v) if tabs_v else np.zeros(0)
    return kinds, rpar, tab_t, tab_v, tab_off


def run(cfg, plant, ref, oracle=True, baseline_gamma=None):
    """Simulate the closed loop; returns a SimTrace (or raises DivergenceError).

    With ``cfg.baseline.enabled`` the baseline law runs as a shadow
    estimator on the same regression stream; its estimate is recorded in
    ``internals['theta_hat_baseline']`` (see ``compare_laws``).
    """
    n, m = plant.n, plant.m
    if ref.n != n or ref.m != m:
        raise mc.DimensionError(f"plant is {n}x{m} but reference model is {ref.n}x{ref.m}")
    if len(cfg.reference) != m:
        raise mc.DimensionError(f"{len(cfg.reference)} reference channels for {m} inputs")
    p = n + m
    known = bool(cfg.filter.x0_known)
    q = regressor_dim(n, m, known)
    mk = MONITOR_SIGNALS.index(cfg.monitor.signal)
    pm = (1, p, q)[mk]
    base = bool(cfg.baseline.enabled)
    if base:
        gb = baseline_gamma if baseline_gamma is not None else cfg.baseline.gamma
        if gb == "auto":
            raise ValueError("baseline gamma 'auto' is resolved by compare_laws; pass a number to run()")
        gb = float(gb)
    else:
        gb = 0.0

    names, off = _layout(n, m, q, pm, base)
    th0 = default_theta_hat(n, m) if cfg.theta_hat0 is None else np.asarray(cfg.theta_hat0, dtype=float)
    if th0.shape != (p, m):
        raise mc.DimensionError(f"theta_hat0 must be {p}x{m}, got {th0.shape}")
    s = np.zeros(off[-1])
    s[off[0]:off[0] + n] = plant.x0
    s[off[1]:off[1] + n] = ref.x0_ref
    s[off[7]:off[7] + p * m] = th0.ravel()
    if base:
        s[off[9]:off[9] + p * m] = th0.ravel()

    par = np.array([cfg.filter.l, cfg.k, cfg.sigma, cfg.schedule.gamma0, cfg.schedule.gamma1, cfg.scale,
                    cfg.schedule.omega_epsilon, gb, cfg.monitor.alpha])
    flg = np.array([known, base, base and cfg.baseline.sign == "printed", mk, cfg.monitor.relative,
                    cfg.compensated, cfg.record_internals], dtype=np.int64)
    rk, rp, tt, tv, to = _reference_arrays(cfg.reference)

    N = cfg.steps
    every = int(cfg.log_every)
    rows = 1 + N // every + (1 if N % every else 0)
    ncol = 1 + 2 * n + m + 4 + p * m + 3
    if base:
        ncol += p * m
    if cfg.record_internals:
        ncol += p + q * n + 2 * p * m + 2
    rec = np.zeros((rows, ncol))

    status, tf, idx, nrow, t_e, maxD2 = _integrate(s, cfg.dt, N, every, rec, plant.A, plant.B, ref.A_ref, ref.B_ref,
                                                   plant.x0, par, flg, off, rk, rp, tt, tv, to)
    if status == 1:
        raise DivergenceError(_signal_at(names, off, idx), tf)
    if status == 2:
        raise DivergenceError(("Delta", "phi", "gamma", "monitor")[idx - m] if idx >= m else "u", tf)

    rec = rec[:nrow]
    c = 0

    def take(w):
        nonlocal c
        out = rec[:, c:c + w]
        c += w
        return out

    t = take(1)[:, 0]
    x = take(n)
    xr = take(n)
    u = take(m)
    Delta, phi, Omega, gamma = take(4).T
    th = take(p * m).reshape(-1, p, m)
    gate, switch, meas = take(3).T
    internals = None
    if base or cfg.record_internals:
        internals = {}
    if base:
        internals["theta_hat_baseline"] = take(p * m).reshape(-1, p, m)
        internals["baseline_gamma"] = gb
    if cfg.record_internals:
        internals["Phi_bar"] = take(p)
        internals["z"] = take(q * n).reshape(-1, q, n)
        internals["y_theta"] = take(p * m).reshape(-1, p, m)
        internals["Upsilon"] = take(p * m).reshape(-1, p, m)
        internals["F_min_eig"], internals["F_norm"] = take(2).T
        el = np.exp(-cfg.filter.l * t)
        if known:
            internals["phi_bar"] = internals["Phi_bar"].copy()
            internals["z_bar"] = x - cfg.filter.l * internals["Phi_bar"][:, :n] - el[:, None] * plant.x0[None]
        else:
            internals["phi_bar"] = np.hstack([internals["Phi_bar"], el[:, None]])
            internals["z_bar"] = x - cfg.filter.l * internals["Phi_bar"][:, :n]

    theta_true = ideal_gains(plant, ref).theta if oracle else None
    meta = dict(dt=cfg.dt, T=cfg.T, steps=N, log_every=every, scale=cfg.scale, integrator="classical RK4, fixed step",
                compensated=cfg.compensated, monitor=cfg.monitor.signal, alpha=cfg.monitor.alpha, q=q,
                x0_known=known, gamma1=cfg.schedule.gamma1, max_Delta_sq=float(maxD2), law="main")
    return SimTrace(t, x, xr, u, Delta, phi, Omega, gamma, th, gate.astype(bool), switch.astype(int), meas,
                    None if t_e < 0 else float(t_e), theta_true, internals, meta)


def compare_laws(cfg, plant, ref, oracle=True):
    """Main law in closed loop plus the baseline law as a shadow estimator.

    Both estimators are driven by the same Delta, y_theta stream. Returns a
    1-tuple when the baseline is disabled, otherwise (main, baseline) traces
    that share every signal except theta_hat and gamma.

    Baseline gamma 'auto' matches its peak contraction rate gamma Delta^2 to
    gamma1, using the peak Delta^2 of a first pass (the shadow does not feed
    back, so the second pass sees the identical Delta sequence).
    """
    if not cfg.baseline.enabled:
        return (run(cfg, plant, ref, oracle),)
    gb = cfg.baseline.gamma
    if gb == "auto":
        probe = run(replace(cfg, baseline=replace(cfg.baseline, enabled=False), log_every=cfg.steps), plant, ref, oracle=False)
        peak = probe.meta["max_Delta_sq"]
        if not peak > 0:
            raise ValueError("Delta stayed zero; cannot scale the baseline gain")
        gb = cfg.schedule.gamma1 / peak
    main = run(cfg, plant, ref, oracle, baseline_gamma=gb)
    thb = main.internals.pop("theta_hat_baseline")
    main.internals.pop("baseline_gamma")
    base = replace(main, theta_hat=thb, gamma=np.full_like(main.gamma, float(gb)),
                   gate=np.zeros_like(main.gate), switch_flag=np.zeros_like(main.switch_flag),
                   t_e=main.t_e, internals=None,
                   meta=dict(main.meta, law=f"baseline ({cfg.baseline.sign} sign)", baseline_gamma=float(gb)))
    if not main.internals:
        main.internals = None
    return main, base
