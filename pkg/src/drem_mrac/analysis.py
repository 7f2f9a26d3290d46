"""Trace diagnostics shared by the experiment report and the test suite."""
import numpy as np

# below this, |theta_tilde| sits on the float64 round-off plateau of the
# estimator target (about 1e-10 on the benchmark) and carries no rate info
DECAY_FLOOR = 1e-8


def monotonicity_violation(theta_tilde):
    """max over i and t_a >= t_b of |tt_i(t_a)| - |tt_i(t_b)| (<= 0 when monotone)."""
    a = np.abs(np.asarray(theta_tilde).reshape(len(theta_tilde), -1))
    return float((a - np.minimum.accumulate(a, axis=0)).max())


def sign_flips(theta_tilde, tol=1e-9):
    """Number of components that cross zero by more than tol after starting away from it."""
    a = np.asarray(theta_tilde).reshape(len(theta_tilde), -1)
    s0 = np.sign(a[0])
    flipped = np.any(a * s0[None] < -tol, axis=0) & (s0 != 0)
    return int(flipped.sum())


def fit_log_slope(t, y, t0=None, t1=None, floor=0.0):
    """Least-squares slope of log y on t0 <= t <= t1, using only samples with y > floor.

    Returns (slope, number of samples); slope is nan with fewer than two samples.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = y > floor
    if t0 is not None:
        sel &= t >= t0
    if t1 is not None:
        sel &= t <= t1
    if sel.sum() < 2:
        return float("nan"), int(sel.sum())
    slope = np.polyfit(t[sel], np.log(y[sel]), 1)[0]
    return float(slope), int(sel.sum())


def _rel(err, ref):
    return np.linalg.norm(err.reshape(len(err), -1), axis=1) / np.maximum(np.linalg.norm(ref.reshape(len(ref), -1), axis=1), 1e-300)


def regression_residuals(trace, plant, phi_frac=1e-3):
    """Oracle residuals of the regression chain along a trace with internals.

    z_bar vs [A B x0]^T phi_bar (absolute, scaled by 1 + |phi_bar|), and
    relative errors of z vs phi theta_AB, y_theta vs Delta theta,
    Upsilon vs Omega theta on samples where phi > phi_frac * max phi.
    """
    it = trace.internals
    if it is None or "z" not in it:
        raise ValueError("trace has no recorded internals")
    known = trace.meta.get("x0_known", False)
    thab = plant.theta_ab[:-1] if known else plant.theta_ab
    pb = it["phi_bar"]
    zb = it["z_bar"]
    r14 = np.linalg.norm(zb - pb @ thab, axis=1) / (1.0 + np.linalg.norm(pb, axis=1))
    sel = trace.phi > phi_frac * trace.phi.max()
    out = {"eq_regression": float(r14.max()), "samples_excited": int(sel.sum())}
    if sel.sum() == 0:
        out.update(mix_rel=float("nan"), controller_rel=float("nan"), memory_rel=float("nan"))
        return out
    th = trace.theta_true
    z = it["z"][sel]
    ph = trace.phi[sel]
    out["mix_rel"] = float(_rel(z - ph[:, None, None] * thab[None], ph[:, None, None] * thab[None]).max())
    D = trace.Delta[sel]
    out["controller_rel"] = float(_rel(it["y_theta"][sel] - D[:, None, None] * th[None], D[:, None, None] * th[None]).max())
    Om = trace.Omega[sel]
    out["memory_rel"] = float(_rel(it["Upsilon"][sel] - Om[:, None, None] * th[None], Om[:, None, None] * th[None]).max())
    return out
