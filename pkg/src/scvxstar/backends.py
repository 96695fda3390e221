"""Convex backends for the canonical subproblem form.

Each adapter exposes ``solve(sp) -> BackendResult``; pick one by key with
:func:`get_backend`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps


@dataclass
class BackendResult:
    x: np.ndarray
    status: str  # optimal | inaccurate | infeasible | unbounded | numerical
    iterations: int = 0
    raw_status: str = ""


class ClarabelBackend:
    """Direct interface to the Clarabel interior-point solver."""

    name = "clarabel"

    def __init__(self, tol: float = 1e-9, max_iter: int = 200, reduced_tol: float = 1e-8):
        self.tol = tol
        self.max_iter = max_iter
        self.reduced_tol = reduced_tol

    def _settings(self):
        import clarabel

        s = clarabel.DefaultSettings()
        s.verbose = False
        s.max_iter = self.max_iter
        s.tol_gap_abs = self.tol
        s.tol_gap_rel = self.tol
        s.tol_feas = self.tol
        s.tol_ktratio = min(1e-6, self.tol * 10)
        s.reduced_tol_gap_abs = self.reduced_tol
        s.reduced_tol_gap_rel = self.reduced_tol
        s.reduced_tol_feas = self.reduced_tol
        s.max_threads = 1
        return s

    def solve(self, sp) -> BackendResult:
        import clarabel

        blocks, rhs, cones = [], [], []
        if sp.A_eq.shape[0]:
            blocks.append(sp.A_eq)
            rhs.append(sp.b_eq)
            cones.append(clarabel.ZeroConeT(sp.A_eq.shape[0]))
        if sp.A_le.shape[0]:
            blocks.append(sp.A_le)
            rhs.append(sp.b_le)
            cones.append(clarabel.NonnegativeConeT(sp.A_le.shape[0]))
        for cone in sp.socs:
            # s = b - A x = [c.x + d; M x + m] in SOC
            blocks.append(-np.vstack([cone.c[None, :], cone.M]))
            rhs.append(np.concatenate([[cone.d], cone.m]))
            cones.append(clarabel.SecondOrderConeT(cone.M.shape[0] + 1))
        A = sps.csc_matrix(np.vstack(blocks))
        b = np.concatenate(rhs)
        P = sps.csc_matrix(np.triu(sp.P))
        solver = clarabel.DefaultSolver(P, sp.q, A, b, cones, self._settings())
        sol = solver.solve()
        raw = str(sol.status)
        if raw.endswith("AlmostSolved"):
            status = "inaccurate"
        elif raw.endswith("Solved"):
            status = "optimal"
        elif "PrimalInfeasible" in raw:
            status = "infeasible"
        elif "DualInfeasible" in raw:
            status = "unbounded"
        else:
            status = "numerical"
        return BackendResult(np.array(sol.x), status, int(sol.iterations), raw)


class CvxpyBackend:
    """Generic adapter through cvxpy; any installed conic solver works."""

    name = "cvxpy"

    def __init__(self, solver: str = "CLARABEL", tol: float = 1e-9, **options):
        self.solver = solver
        self.tol = tol
        self.options = options

    def solve(self, sp) -> BackendResult:
        import cvxpy as cp

        x = cp.Variable(sp.n_x)
        Psym = 0.5 * (sp.P + sp.P.T)
        diag = np.diag(Psym)
        if np.count_nonzero(Psym - np.diag(diag)) == 0:
            quad = 0.5 * cp.sum(cp.multiply(diag, cp.square(x)))
        else:
            quad = 0.5 * cp.quad_form(x, cp.psd_wrap(Psym))
        cons = []
        if sp.A_eq.shape[0]:
            cons.append(sp.A_eq @ x == sp.b_eq)
        if sp.A_le.shape[0]:
            cons.append(sp.A_le @ x <= sp.b_le)
        for cone in sp.socs:
            cons.append(cp.SOC(cone.c @ x + cone.d, cone.M @ x + cone.m))
        prob = cp.Problem(cp.Minimize(quad + sp.q @ x + sp.const), cons)
        opts = dict(self.options)
        if self.solver == "CLARABEL":
            opts.setdefault("tol_gap_abs", self.tol)
            opts.setdefault("tol_gap_rel", self.tol)
            opts.setdefault("tol_feas", self.tol)
        try:
            prob.solve(solver=self.solver, **opts)
        except cp.error.SolverError as exc:
            return BackendResult(np.zeros(sp.n_x), "numerical", raw_status=str(exc))
        raw = prob.status
        if raw == cp.OPTIMAL:
            status = "optimal"
        elif raw == cp.OPTIMAL_INACCURATE:
            status = "inaccurate"
        elif raw in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            status = "infeasible"
        elif raw in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            status = "unbounded"
        else:
            status = "numerical"
        xv = x.value if x.value is not None else np.zeros(sp.n_x)
        return BackendResult(np.asarray(xv, float), status, raw_status=raw)


BACKENDS = {"clarabel": ClarabelBackend, "cvxpy": CvxpyBackend}


def get_backend(name: str = "clarabel", **options):
    try:
        cls = BACKENDS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None
    return cls(**options)
