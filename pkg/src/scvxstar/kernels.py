"""Hot numeric kernels: ZOH RK4 discretization of drag-affected point-mass
dynamics together with its state/control sensitivities.

Dynamics (x = [p, v], u = [T, Gamma])::

    p' = v
    v' = T/m - kd*|v|*v + g

The sensitivity matrix ``Phi = [dx/dx0 | dx/du]`` (6 x 10) is integrated with
the same RK4 tableau as the state, which makes it the exact derivative of the
discrete map.  Two implementations exist: a numba kernel looping over
intervals and a batched numpy version; :func:`discretize_batch` picks numba
unless ``SCVXSTAR_NUMBA=0``.
"""
from __future__ import annotations

import numpy as np

from ._accel import HAVE_NUMBA, njit

NX = 6
NU = 4


# ---------------------------------------------------------------- numba path
@njit(cache=True)
def _deriv(x, phi, T, inv_m, kd, gvec, dx, dphi):
    vn = np.sqrt(x[3] * x[3] + x[4] * x[4] + x[5] * x[5])
    for i in range(3):
        dx[i] = x[3 + i]
        dx[3 + i] = T[i] * inv_m - kd * vn * x[3 + i] + gvec[i]
    # drag Jacobian D = |v| I + v v'/|v|, zero at v = 0
    D = np.zeros((3, 3))
    if vn > 0.0:
        for i in range(3):
            for j in range(3):
                D[i, j] = x[3 + i] * x[3 + j] / vn
            D[i, i] += vn
    for c in range(NX + NU):
        for i in range(3):
            dphi[i, c] = phi[3 + i, c]
            acc = 0.0
            for j in range(3):
                acc += D[i, j] * phi[3 + j, c]
            dphi[3 + i, c] = -kd * acc
    for i in range(3):
        dphi[3 + i, NX + i] += inv_m


@njit(cache=True)
def _rk4_interval(x0, u, inv_m, kd, gvec, dt, substeps, x_out, phi_out):
    h = dt / substeps
    x = x0.copy()
    phi = np.zeros((NX, NX + NU))
    for i in range(NX):
        phi[i, i] = 1.0
    T = u[:3]
    k1 = np.empty(NX); k2 = np.empty(NX); k3 = np.empty(NX); k4 = np.empty(NX)
    p1 = np.empty((NX, NX + NU)); p2 = np.empty((NX, NX + NU))
    p3 = np.empty((NX, NX + NU)); p4 = np.empty((NX, NX + NU))
    for _ in range(substeps):
        _deriv(x, phi, T, inv_m, kd, gvec, k1, p1)
        _deriv(x + 0.5 * h * k1, phi + 0.5 * h * p1, T, inv_m, kd, gvec, k2, p2)
        _deriv(x + 0.5 * h * k2, phi + 0.5 * h * p2, T, inv_m, kd, gvec, k3, p3)
        _deriv(x + h * k3, phi + h * p3, T, inv_m, kd, gvec, k4, p4)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        phi = phi + (h / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
    x_out[:] = x
    phi_out[:, :] = phi


@njit(cache=True)
def _discretize_loop(X, U, inv_m, kd, gvec, dt, substeps):
    K = X.shape[0]
    Xn = np.empty((K, NX))
    Phi = np.empty((K, NX, NX + NU))
    for s in range(K):
        _rk4_interval(X[s], U[s], inv_m, kd, gvec, dt, substeps, Xn[s], Phi[s])
    return Xn, Phi


def discretize_batch_numba(X, U, mass, kd, gravity, dt, substeps):
    X = np.ascontiguousarray(X, dtype=np.float64)
    U = np.ascontiguousarray(U, dtype=np.float64)
    gvec = np.ascontiguousarray(gravity, dtype=np.float64)
    return _discretize_loop(X, U, 1.0 / mass, float(kd), gvec, float(dt), int(substeps))


# ---------------------------------------------------------------- numpy path
def _deriv_batch(x, phi, T, inv_m, kd, gvec):
    v = x[:, 3:]
    vn = np.linalg.norm(v, axis=1)
    dx = np.concatenate([v, T * inv_m - kd * vn[:, None] * v + gvec], axis=1)
    safe = np.where(vn > 0, vn, 1.0)
    D = v[:, :, None] * v[:, None, :] / safe[:, None, None] + vn[:, None, None] * np.eye(3)
    D[vn == 0] = 0.0
    bottom = phi[:, 3:, :]
    dphi = np.concatenate([bottom, -kd * np.einsum("kij,kjc->kic", D, bottom)], axis=1)
    dphi[:, 3:, NX:NX + 3] += inv_m * np.eye(3)
    return dx, dphi


def discretize_batch_numpy(X, U, mass, kd, gravity, dt, substeps):
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    K = X.shape[0]
    inv_m = 1.0 / mass
    gvec = np.asarray(gravity, dtype=float)
    T = U[:, :3]
    h = dt / substeps
    x = X.copy()
    phi = np.zeros((K, NX, NX + NU))
    phi[:, :, :NX] = np.eye(NX)
    for _ in range(substeps):
        k1, p1 = _deriv_batch(x, phi, T, inv_m, kd, gvec)
        k2, p2 = _deriv_batch(x + 0.5 * h * k1, phi + 0.5 * h * p1, T, inv_m, kd, gvec)
        k3, p3 = _deriv_batch(x + 0.5 * h * k2, phi + 0.5 * h * p2, T, inv_m, kd, gvec)
        k4, p4 = _deriv_batch(x + h * k3, phi + h * p3, T, inv_m, kd, gvec)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        phi = phi + (h / 6.0) * (p1 + 2 * p2 + 2 * p3 + p4)
    return x, phi


def discretize_batch(X, U, mass, kd, gravity, dt, substeps):
    """Propagate every ``(X[s], U[s])`` over ``dt``.

    Returns ``(X_next, Phi)`` with shapes ``(K, 6)`` and ``(K, 6, 10)``.
    """
    if HAVE_NUMBA:
        return discretize_batch_numba(X, U, mass, kd, gravity, dt, substeps)
    return discretize_batch_numpy(X, U, mass, kd, gravity, dt, substeps)
