"""Quad-rotor path planning with obstacle avoidance.

Decision vector ``z = [x_1 .. x_N, u_1 .. u_N]`` with ``x_s = [p_s, v_s]`` (6)
and ``u_s = [T_s, Gamma_s]`` (4).  Dynamics defects and obstacle keep-outs are
the non-convex constraints; boundary conditions, the flight plane, thrust
cone/bounds and tilt limits are passed through as convex rows.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..kernels import NU, NX, discretize_batch
from ..problem import ConvexBlock, EvaluationError, ProblemDefinition, SOCConstraint

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadRotorParams:
    """Vehicle, scenario and discretization parameters.

    ``hover_thrust``, when set, rescales gravity so that ``|m g|`` equals it;
    by default gravity is used as given.
    """

    mass: float = 0.3
    kd: float = 0.5
    gravity: tuple = (-9.81, 0.0, 0.0)
    hover_thrust: float | None = None
    T_min: float = 1.0
    T_max: float = 4.0
    theta_max: float = math.pi / 4
    t_f: float = 5.0
    N: int = 31
    x_ini: tuple = (0.0, 0.0, 0.0, 0.0, 0.5, 0.0)
    x_fin: tuple = (0.0, 10.0, 0.0, 0.0, 0.5, 0.0)
    obstacles: tuple = (((0.0, 3.0, -0.2), 1.0), ((0.0, 7.0, 0.2), 1.0))
    substeps: int = 10

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if not self.T_min < self.T_max:
            raise ValueError("need T_min < T_max")
        if self.mass <= 0 or self.substeps < 1:
            raise ValueError("mass and substeps must be positive")
        for _, radius in self.obstacles:
            if radius <= 0:
                raise ValueError("obstacle radius must be positive")

    @property
    def dt(self) -> float:
        return self.t_f / (self.N - 1)

    @property
    def gravity_scale(self) -> float:
        if self.hover_thrust is None:
            return 1.0
        return self.hover_thrust / (self.mass * float(np.linalg.norm(self.gravity)))

    @property
    def effective_gravity(self) -> np.ndarray:
        return np.asarray(self.gravity, float) * self.gravity_scale

    @property
    def hover(self) -> np.ndarray:
        """Thrust vector balancing gravity, ``-m g``."""
        return -self.mass * self.effective_gravity

    def without_obstacles(self) -> "QuadRotorParams":
        return _replace(self, obstacles=())


def _replace(params, **changes):
    from dataclasses import replace

    return replace(params, **changes)


@dataclass
class DiscretizationResult:
    x_next: np.ndarray
    A: np.ndarray
    B: np.ndarray
    c: np.ndarray = field(default=None)


def discretize_dynamics(x_s, u_s, params: QuadRotorParams, dt: float | None = None,
                        substeps: int | None = None) -> DiscretizationResult:
    """One ZOH interval: next state, A = dx+/dx, B = dx+/du and the affine remainder."""
    dt = params.dt if dt is None else dt
    substeps = params.substeps if substeps is None else substeps
    if dt <= 0 or substeps < 1:
        raise ValueError("dt must be positive and substeps >= 1")
    x_s = np.asarray(x_s, float)
    u_s = np.asarray(u_s, float)
    Xn, Phi = discretize_batch(x_s[None], u_s[None], params.mass, params.kd,
                               params.effective_gravity, dt, substeps)
    if not np.all(np.isfinite(Xn)):
        raise EvaluationError("dynamics", int(np.flatnonzero(~np.isfinite(Xn[0]))[0]), x_s)
    A = Phi[0, :, :NX]
    B = Phi[0, :, NX:]
    c = Xn[0] - A @ x_s - B @ u_s
    return DiscretizationResult(Xn[0], A, B, c)


class QuadLayout:
    """Index bookkeeping for the stacked decision vector."""

    def __init__(self, N: int):
        self.N = N
        self.n_z = (NX + NU) * N

    def x(self, s: int) -> slice:
        return slice(NX * s, NX * (s + 1))

    def u(self, s: int) -> slice:
        base = NX * self.N
        return slice(base + NU * s, base + NU * (s + 1))

    def unpack(self, z):
        z = np.asarray(z, float)
        return z[:NX * self.N].reshape(self.N, NX), z[NX * self.N:].reshape(self.N, NU)

    def pack(self, X, U) -> np.ndarray:
        return np.concatenate([np.asarray(X, float).ravel(), np.asarray(U, float).ravel()])


def initial_guess(params: QuadRotorParams) -> np.ndarray:
    """Straight line between the boundary states, hovering thrust throughout."""
    layout = QuadLayout(params.N)
    t = np.linspace(0.0, 1.0, params.N)[:, None]
    X = (1 - t) * np.asarray(params.x_ini, float) + t * np.asarray(params.x_fin, float)
    U = np.tile(np.append(params.hover, np.linalg.norm(params.hover)), (params.N, 1))
    return layout.pack(X, U)


def example2_problem(params: QuadRotorParams | None = None) -> ProblemDefinition:
    params = QuadRotorParams() if params is None else params
    if params.hover_thrust is not None:
        log.info("gravity rescaled by %.6f so that hover thrust is %.3f N",
                 params.gravity_scale, params.hover_thrust)
    N = params.N
    lay = QuadLayout(N)
    n = lay.n_z
    dt = params.dt
    g_eff = params.effective_gravity
    centers = np.array([c for c, _ in params.obstacles], float).reshape(-1, 3)
    radii = np.array([r for _, r in params.obstacles], float)
    interior = np.arange(1, N - 1)
    n_obs = len(radii)

    def propagate(z):
        X, U = lay.unpack(z)
        Xn, Phi = discretize_batch(X[:-1], U[:-1], params.mass, params.kd, g_eff,
                                   dt, params.substeps)
        return X, Xn, Phi

    def g(z):
        X, Xn, _ = propagate(z)
        return (X[1:] - Xn).ravel()

    def jac_g(z):
        _, _, Phi = propagate(z)
        J = np.zeros((NX * (N - 1), n))
        for s in range(N - 1):
            rows = slice(NX * s, NX * (s + 1))
            J[rows, lay.x(s + 1)] = np.eye(NX)
            J[rows, lay.x(s)] = -Phi[s, :, :NX]
            J[rows, lay.u(s)] = -Phi[s, :, NX:]
        return J

    def offsets(z):
        X, _ = lay.unpack(z)
        P = X[interior, :3]
        diff = P[:, None, :] - centers[None, :, :]  # (nodes, obstacles, 3)
        return diff, np.linalg.norm(diff, axis=2)

    def h(z):
        _, dist = offsets(z)
        return (radii[None, :] - dist).ravel()

    def jac_h(z):
        diff, dist = offsets(z)
        J = np.zeros((interior.size * n_obs, n))
        safe = np.where(dist > 0, dist, 1.0)
        for a, s in enumerate(interior):
            for j in range(n_obs):
                J[a * n_obs + j, NX * s:NX * s + 3] = -diff[a, j] / safe[a, j]
        return J

    def unit(i):
        e = np.zeros(n)
        e[i] = 1.0
        return e

    eq_rows = []
    for s, target in ((0, params.x_ini), (N - 1, params.x_fin)):
        for i, val in enumerate(target):
            eq_rows.append((unit(lay.x(s).start + i), val))
    for s in (0, N - 1):
        for i in range(3):
            eq_rows.append((unit(lay.u(s).start + i), params.hover[i]))
    # plane constraint; endpoint rows would duplicate the boundary conditions
    for s in interior:
        eq_rows.append((unit(lay.x(s).start), 0.0))

    ineq_rows = []
    socs = []
    cos_t = math.cos(params.theta_max)
    for s in range(N):
        u0 = lay.u(s).start
        gam = u0 + 3
        ineq_rows.append((unit(gam), params.T_max))
        ineq_rows.append((-unit(gam), -params.T_min))
        ineq_rows.append((cos_t * unit(gam) - unit(u0), 0.0))
        M = np.zeros((3, n))
        M[:, u0:u0 + 3] = np.eye(3)
        socs.append(SOCConstraint(M, np.zeros(3), unit(gam), 0.0))

    cost = np.zeros(n)
    for s in range(N):
        cost[lay.u(s).start + 3] = dt

    return ProblemDefinition(
        n_z=n, n_eq=NX * (N - 1), n_ineq=interior.size * n_obs, cost=cost,
        eq_fun=g, eq_jac=jac_g, ineq_fun=h, ineq_jac=jac_h,
        convex=ConvexBlock.build(n, eq_rows, ineq_rows, socs),
        name="example2", metadata={"params": params, "layout": lay},
    )


def reintegrate(z, params: QuadRotorParams, substeps: int):
    """Max dynamics defect and terminal error when replaying the controls."""
    lay = QuadLayout(params.N)
    X, U = lay.unpack(z)
    Xn, _ = discretize_batch(X[:-1], U[:-1], params.mass, params.kd,
                             params.effective_gravity, params.dt, substeps)
    defect = float(np.max(np.abs(X[1:] - Xn)))
    x = X[0].copy()
    for s in range(params.N - 1):
        x, _ = discretize_batch(x[None], U[s][None], params.mass, params.kd,
                                params.effective_gravity, params.dt, substeps)
        x = x[0]
    terminal = float(np.max(np.abs(x - np.asarray(params.x_fin, float))))
    return defect, terminal
