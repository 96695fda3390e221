"""Linearization and the relaxed convex subproblem.

The subproblem is kept in one canonical conic form over the stacked vector
``x = [z, xi, zeta]`` (``xi`` is split into ``xi_pos, xi_neg`` in l1 mode)::

    minimize    0.5 x'Px + q'x + const
    subject to  A_eq x  = b_eq
                A_le x <= b_le
                ||M_i x + m_i|| <= c_i.x + d_i
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .penalty import PenaltyMode, PenaltyState, penalty, positive_part
from .problem import ProblemDefinition, SOCConstraint, evaluate


class SubproblemError(RuntimeError):
    """Backend failed to return an optimal solution."""

    def __init__(self, status: str, message: str = ""):
        self.status = status
        super().__init__(message or f"subproblem solve failed with status {status!r}")


@dataclass(frozen=True)
class LinearModel:
    z_ref: np.ndarray
    g_ref: np.ndarray
    h_ref: np.ndarray
    jac_g: np.ndarray
    jac_h: np.ndarray
    f0_ref: float

    def g_lin(self, z) -> np.ndarray:
        return self.g_ref + self.jac_g @ (np.asarray(z, float) - self.z_ref)

    def h_lin(self, z) -> np.ndarray:
        return self.h_ref + self.jac_h @ (np.asarray(z, float) - self.z_ref)


def linearize(problem: ProblemDefinition, z_ref) -> LinearModel:
    ev = evaluate(problem, z_ref)
    return LinearModel(np.array(ev.z), ev.g, ev.h, ev.jac_g, ev.jac_h, ev.f0)


@dataclass
class ConvexSubproblem:
    P: np.ndarray
    q: np.ndarray
    const: float
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_le: np.ndarray
    b_le: np.ndarray
    socs: list
    n_z: int
    n_eq: int
    n_ineq: int
    mode: PenaltyMode
    state: PenaltyState
    problem: ProblemDefinition
    model: LinearModel
    r: float
    trust_rows: slice = field(default_factory=lambda: slice(0, 0))

    @property
    def n_x(self) -> int:
        return self.q.size

    def split(self, x):
        """Return ``(z, xi, zeta)`` from the stacked vector."""
        x = np.asarray(x, float)
        n, p = self.n_z, self.n_eq
        z = x[:n]
        if self.mode is PenaltyMode.L1:
            xi = x[n:n + p] - x[n + p:n + 2 * p]
            zeta = x[n + 2 * p:]
        else:
            xi = x[n:n + p]
            zeta = x[n + p:]
        return z, xi, zeta

    def objective(self, x) -> float:
        x = np.asarray(x, float)
        return float(0.5 * x @ self.P @ x + self.q @ x + self.const)

    def penalized_value(self, x) -> float:
        """L(z, xi, zeta) = f0(z) + P(xi, zeta)."""
        z, xi, zeta = self.split(x)
        return self.problem.f0(z) + penalty(xi, zeta, self.state, self.mode)

    def candidate(self) -> np.ndarray:
        """The always-feasible point (z_ref, g_ref, [h_ref]+)."""
        m = self.model
        parts = [m.z_ref]
        if self.mode is PenaltyMode.L1:
            parts += [positive_part(m.g_ref), positive_part(-m.g_ref)]
        else:
            parts.append(m.g_ref)
        parts.append(positive_part(m.h_ref))
        return np.concatenate(parts)

    def violation(self, x) -> dict:
        """Max violation per constraint family."""
        x = np.asarray(x, float)
        out = {"eq": 0.0, "le": 0.0, "soc": 0.0}
        if self.A_eq.shape[0]:
            out["eq"] = float(np.max(np.abs(self.A_eq @ x - self.b_eq)))
        if self.A_le.shape[0]:
            out["le"] = max(0.0, float(np.max(self.A_le @ x - self.b_le)))
        for cone in self.socs:
            out["soc"] = max(out["soc"], -cone.slack(x))
        return out

    def scaled(self) -> "ConvexSubproblem":
        """Equivalent problem with unit-norm rows and a normalized objective."""
        def rownorm(A, b):
            if A.shape[0] == 0:
                return A, b
            s = np.linalg.norm(A, axis=1)
            s[s == 0] = 1.0
            return A / s[:, None], b / s

        A_eq, b_eq = rownorm(self.A_eq, self.b_eq)
        A_le, b_le = rownorm(self.A_le, self.b_le)
        obj = max(1.0, float(np.max(np.abs(self.q), initial=0.0)),
                  float(np.max(np.abs(self.P), initial=0.0)))
        return ConvexSubproblem(
            self.P / obj, self.q / obj, self.const / obj, A_eq, b_eq, A_le, b_le,
            list(self.socs), self.n_z, self.n_eq, self.n_ineq, self.mode, self.state,
            self.problem, self.model, self.r, self.trust_rows,
        )


def build_subproblem(model: LinearModel, problem: ProblemDefinition, state: PenaltyState,
                     r: float, mode=PenaltyMode.AL) -> ConvexSubproblem:
    if r <= 0:
        raise ValueError("trust region radius must be positive")
    mode = PenaltyMode(mode)
    n, p, q_ = problem.n_z, problem.n_eq, problem.n_ineq
    n_xi = 2 * p if mode is PenaltyMode.L1 else p
    nx = n + n_xi + q_
    sz = slice(0, n)
    sxi = slice(n, n + n_xi)
    szeta = slice(n + n_xi, nx)

    P = np.zeros((nx, nx))
    if problem.cost_quad is not None:
        P[sz, sz] = problem.cost_quad
    q = np.zeros(nx)
    q[sz] = problem.cost
    if mode is PenaltyMode.L1:
        q[sxi] = state.w
        q[szeta] = state.w
    else:
        P[sxi, sxi] = state.w * np.eye(p)
        P[szeta, szeta] = state.w * np.eye(q_)
        q[sxi] = state.lam
        q[szeta] = state.mu

    zr = model.z_ref
    # linearized equalities: jac_g z - xi = jac_g z_ref - g_ref
    eq_blocks = []
    if p:
        rows = np.zeros((p, nx))
        rows[:, sz] = model.jac_g
        if mode is PenaltyMode.L1:
            rows[:, n:n + p] = -np.eye(p)
            rows[:, n + p:n + 2 * p] = np.eye(p)
        else:
            rows[:, sxi] = -np.eye(p)
        eq_blocks.append((rows, model.jac_g @ zr - model.g_ref))
    cb = problem.convex
    if cb.A_eq.shape[0]:
        rows = np.zeros((cb.A_eq.shape[0], nx))
        rows[:, sz] = cb.A_eq
        eq_blocks.append((rows, cb.b_eq))

    le_blocks = []
    if q_:
        rows = np.zeros((q_, nx))
        rows[:, sz] = model.jac_h
        rows[:, szeta] = -np.eye(q_)
        le_blocks.append((rows, model.jac_h @ zr - model.h_ref))
    slack_dim = n_xi if mode is PenaltyMode.L1 else 0
    if slack_dim + q_:
        # xi_pos, xi_neg >= 0 (l1 mode) and zeta >= 0
        rows = np.zeros((slack_dim + q_, nx))
        rows[:, n + n_xi - slack_dim:] = -np.eye(slack_dim + q_)
        le_blocks.append((rows, np.zeros(slack_dim + q_)))
    start = sum(b[0].shape[0] for b in le_blocks)
    eye = np.zeros((n, nx))
    eye[:, sz] = np.eye(n)
    le_blocks.append((eye, zr + r))
    le_blocks.append((-eye, -(zr - r)))
    trust_rows = slice(start, start + 2 * n)
    lb, ub = problem.bound_arrays()
    for sign, bound in ((1.0, ub), (-1.0, lb)):
        idx = np.flatnonzero(np.isfinite(bound))
        if idx.size:
            le_blocks.append((sign * eye[idx], sign * bound[idx]))
    if cb.A_ineq.shape[0]:
        rows = np.zeros((cb.A_ineq.shape[0], nx))
        rows[:, sz] = cb.A_ineq
        le_blocks.append((rows, cb.b_ineq))

    socs = []
    for cone in cb.socs:
        M = np.zeros((cone.M.shape[0], nx))
        M[:, sz] = cone.M
        c = np.zeros(nx)
        c[sz] = cone.c
        socs.append(SOCConstraint(M, np.asarray(cone.m, float), c, float(cone.d)))

    def stack(blocks):
        if not blocks:
            return np.zeros((0, nx)), np.zeros(0)
        return np.vstack([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks])

    A_eq, b_eq = stack(eq_blocks)
    A_le, b_le = stack(le_blocks)
    return ConvexSubproblem(P, q, problem.cost_const, A_eq, b_eq, A_le, b_le, socs,
                            n, p, q_, mode, state, problem, model, float(r), trust_rows)


@dataclass
class SubproblemSolution:
    z: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    L: float
    status: str
    residuals: dict
    fallback: bool = False
    retried: bool = False


def _usable(sp: ConvexSubproblem, result, accept_tol: float) -> bool:
    if result.status == "optimal":
        return True
    # reduced-accuracy answers pass only with verified small residuals
    return result.status == "inaccurate" and max(sp.violation(result.x).values()) <= accept_tol


def solve_subproblem(sp: ConvexSubproblem, backend, accept_tol: float = 1e-8,
                     tie_tol: float = 1e-9) -> SubproblemSolution:
    """Solve ``sp`` and return the minimizer with its penalized value ``L``.

    The candidate ``(z_ref, g_ref, [h_ref]+)`` is feasible, so the true optimum
    never exceeds its value.  A backend answer that does not improve on it by
    more than ``tie_tol`` (relative) is replaced by the candidate, which keeps
    ``z_ref`` fixed when it already minimizes the subproblem.
    """
    retried = False
    result = backend.solve(sp)
    if result.status in ("infeasible", "unbounded"):
        raise SubproblemError(result.status, f"subproblem reported {result.status}; "
                              "the relaxation should make this impossible")
    if not _usable(sp, result, accept_tol):
        retried = True
        result = backend.solve(sp.scaled())
        if not _usable(sp, result, accept_tol):
            raise SubproblemError(result.status)
    x = result.x
    L = sp.penalized_value(x)
    cand = sp.candidate()
    L_cand = sp.penalized_value(cand)
    fallback = L > L_cand - tie_tol * max(1.0, abs(L_cand))
    if fallback:
        x, L = cand, L_cand
    z, xi, zeta = sp.split(x)
    return SubproblemSolution(z.copy(), xi.copy(), zeta.copy(), L, "optimal",
                              sp.violation(x), fallback, retried)
