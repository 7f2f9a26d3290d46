"""Plant, reference model, matching-condition oracle, control law and errors.

The true plant (A, B, x0) is only ever read by test oracles and diagnostics;
the adaptive controller sees x, u and r.
"""
from dataclasses import dataclass

import numpy as np

from . import matrix_core as mc

MATCHING_TOL = 1e-6
RANK_TOL = 1e-12
CONTROLLABILITY_TOL = 1e-12


class ModelError(ValueError):
    pass


class RankError(ModelError):
    pass


class ControllabilityError(ModelError):
    pass


class HurwitzError(ModelError):
    pass


def _mat(a, name):
    a = np.array(a, dtype=float)
    if a.ndim != 2:
        raise mc.DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ModelError(f"{name} has non-finite entries")
    return a


def _vec(v, n, name):
    v = np.array(v, dtype=float).reshape(-1)
    if v.shape[0] != n:
        raise mc.DimensionError(f"{name} must have length {n}, got {v.shape[0]}")
    return v


def full_column_rank(B):
    BtB = B.T @ B
    scale = max(np.abs(BtB).max(), 1e-300) ** B.shape[1]
    return mc.determinant(BtB) > RANK_TOL * scale


def controllability_matrix(A, B):
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def is_controllable(A, B):
    # rank n <=> C C^T positive definite; columns are normalized first so
    # the test does not depend on the growth of A^k B
    C = controllability_matrix(A, B)
    norms = np.linalg.norm(C, axis=0)
    C = C[:, norms > 0] / norms[norms > 0]
    if C.shape[1] < A.shape[0]:
        return False
    W = C @ C.T
    return mc.min_eig_sym(W) > CONTROLLABILITY_TOL * np.trace(W)


def lyapunov_solution(A):
    """P solving A^T P + P A = -I, via the Kronecker-vectorized linear system."""
    n = A.shape[0]
    I = np.eye(n)
    K = np.kron(I, A.T) + np.kron(A.T, I)
    p = mc.solve(K, -I.reshape(-1))
    P = p.reshape(n, n)
    return 0.5 * (P + P.T)


def _cholesky_pivots_positive(P):
    L = np.array(P, dtype=float)
    n = L.shape[0]
    for j in range(n):
        d = L[j, j] - L[j, :j] @ L[j, :j]
        if not d > 0.0:
            return False
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            L[i, j] = (L[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return True


def is_hurwitz(A):
    try:
        P = lyapunov_solution(A)
    except mc.SingularMatrixError:
        return False
    return _cholesky_pivots_positive(P)


@dataclass(frozen=True)
class PlantModel:
    A: np.ndarray
    B: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        A = _mat(self.A, "A")
        B = _mat(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise mc.DimensionError(f"A must be square, got {A.shape[0]}x{A.shape[1]}")
        if B.shape[0] != A.shape[0]:
            raise mc.DimensionError(f"B must have {A.shape[0]} rows, got {B.shape[0]}")
        if not full_column_rank(B):
            raise RankError("B does not have full column rank")
        if not is_controllable(A, B):
            raise ControllabilityError("(A, B) is not controllable")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "x0", _vec(self.x0, A.shape[0], "x0"))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def theta_ab(self):
        """[A B x0]^T, the true parameter of the extended regression."""
        return np.vstack([self.A.T, self.B.T, self.x0[None, :]])


@dataclass(frozen=True)
class ReferenceModel:
    A_ref: np.ndarray
    B_ref: np.ndarray
    x0_ref: np.ndarray

    def __post_init__(self):
        A = _mat(self.A_ref, "A_ref")
        B = _mat(self.B_ref, "B_ref")
        if A.shape[0] != A.shape[1]:
            raise mc.DimensionError(f"A_ref must be square, got {A.shape[0]}x{A.shape[1]}")
        if B.shape[0] != A.shape[0]:
            raise mc.DimensionError(f"B_ref must have {A.shape[0]} rows, got {B.shape[0]}")
        if not is_hurwitz(A):
            raise HurwitzError("A_ref is not Hurwitz")
        object.__setattr__(self, "A_ref", A)
        object.__setattr__(self, "B_ref", B)
        object.__setattr__(self, "x0_ref", _vec(self.x0_ref, A.shape[0], "x0_ref"))

    @property
    def n(self):
        return self.A_ref.shape[0]

    @property
    def m(self):
        return self.B_ref.shape[1]


@dataclass(frozen=True)
class IdealGains:
    K_x: np.ndarray
    K_r: np.ndarray
    residual: float

    @property
    def theta(self):
        """theta with theta^T = [K_x K_r], shape (n+m, m)."""
        return np.vstack([self.K_x.T, self.K_r.T])

    @property
    def matched(self):
        return self.residual <= MATCHING_TOL


def default_theta_hat(n, m):
    return np.vstack([np.zeros((n, m)), np.eye(m)])


@dataclass(frozen=True)
class ControllerState:
    theta_hat: np.ndarray

    def __post_init__(self):
        th = _mat(self.theta_hat, "theta_hat")
        m = th.shape[1]
        if th.shape[0] <= m:
            raise mc.DimensionError(f"theta_hat must be (n+m)x m with n >= 1, got {th.shape}")
        if not np.any(th[-m:] != 0.0):
            raise ModelError("initial K_r block of theta_hat must be nonzero")
        object.__setattr__(self, "theta_hat", th)

    @property
    def K_x(self):
        m = self.theta_hat.shape[1]
        return self.theta_hat[:-m].T

    @property
    def K_r(self):
        m = self.theta_hat.shape[1]
        return self.theta_hat[-m:].T


def plant_derivative(model, x, u):
    return model.A @ _vec(x, model.n, "x") + model.B @ _vec(u, model.m, "u")


def reference_derivative(model, x_ref, r):
    return model.A_ref @ _vec(x_ref, model.n, "x_ref") + model.B_ref @ _vec(r, model.m, "r")


def ideal_gains(plant, ref):
    if plant.n != ref.n or plant.m != ref.m:
        raise mc.DimensionError(f"plant is {plant.n}x{plant.m}, reference model is {ref.n}x{ref.m}")
    B = plant.B
    BtB = B.T @ B
    try:
        K_x = mc.solve(BtB, B.T @ (ref.A_ref - plant.A))
        K_r = mc.solve(BtB, B.T @ ref.B_ref)
    except mc.SingularMatrixError as exc:
        raise RankError(f"B is rank deficient (pivot {exc.pivot:.3e})") from exc
    residual = np.linalg.norm(plant.A + B @ K_x - ref.A_ref) + np.linalg.norm(B @ K_r - ref.B_ref)
    return IdealGains(K_x, K_r, float(residual))


def control(ctrl, x, r):
    th = ctrl.theta_hat
    m = th.shape[1]
    n = th.shape[0] - m
    w = np.concatenate([_vec(x, n, "x"), _vec(r, m, "r")])
    return th.T @ w


def tracking_error(x, x_ref):
    x = np.asarray(x, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    if x.shape != x_ref.shape:
        raise mc.DimensionError(f"x has shape {x.shape}, x_ref has shape {x_ref.shape}")
    return x - x_ref


def augmented_error(e_ref, theta_hat, theta_true):
    """||xi|| with xi = [e_ref; vec(theta_hat - theta)]."""
    tt = np.asarray(theta_hat, dtype=float) - np.asarray(theta_true, dtype=float)
    e = np.asarray(e_ref, dtype=float)
    return float(np.sqrt(e @ e + np.sum(tt * tt)))
