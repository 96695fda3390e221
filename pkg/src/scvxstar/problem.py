"""Non-convex problem abstraction and evaluation utilities.

A problem is

    minimize    f0(z)
    subject to  g(z) = 0,  h(z) <= 0          (smooth, non-convex)
                A_eq z = b_eq,  A_ineq z <= b_ineq,  ||M z + m|| <= c.z + d

where only ``g`` and ``h`` get linearized by the solver.  The objective is a
convex quadratic ``c.z + 0.5 z'Qz + const`` so it can be handed verbatim to the
conic backend.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

VectorFn = Callable[[np.ndarray], np.ndarray]


class DimensionError(ValueError):
    """Raised when a vector or evaluator output has the wrong size."""


class EvaluationError(RuntimeError):
    """Non-finite value returned by a problem callback."""

    def __init__(self, block: str, index: int, z: np.ndarray):
        self.block = block
        self.index = int(index)
        self.z = np.array(z, copy=True)
        super().__init__(f"non-finite value in {block}[{index}]")


@dataclass(frozen=True)
class SOCConstraint:
    """Second-order cone constraint ``||M z + m||_2 <= c.z + d``."""

    M: np.ndarray
    m: np.ndarray
    c: np.ndarray
    d: float = 0.0

    def slack(self, z: np.ndarray) -> float:
        return float(self.c @ z + self.d - np.linalg.norm(self.M @ z + self.m))


@dataclass(frozen=True)
class ConvexBlock:
    """Convex constraints passed through to every subproblem unchanged."""

    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ineq: np.ndarray
    b_ineq: np.ndarray
    socs: tuple = ()

    @classmethod
    def empty(cls, n_z: int) -> "ConvexBlock":
        return cls(np.zeros((0, n_z)), np.zeros(0), np.zeros((0, n_z)), np.zeros(0))

    @classmethod
    def build(cls, n_z, eq_rows=(), ineq_rows=(), socs=()) -> "ConvexBlock":
        """Assemble from iterables of ``(row, rhs)`` pairs."""
        def stack(rows):
            rows = list(rows)
            if not rows:
                return np.zeros((0, n_z)), np.zeros(0)
            A = np.array([np.asarray(r, float) for r, _ in rows])
            b = np.array([float(v) for _, v in rows])
            return A, b

        A_eq, b_eq = stack(eq_rows)
        A_in, b_in = stack(ineq_rows)
        return cls(A_eq, b_eq, A_in, b_in, tuple(socs))

    def violation(self, z: np.ndarray) -> float:
        """Largest violation over all rows (0 when feasible)."""
        v = 0.0
        if self.A_eq.shape[0]:
            v = max(v, float(np.max(np.abs(self.A_eq @ z - self.b_eq))))
        if self.A_ineq.shape[0]:
            v = max(v, float(np.max(self.A_ineq @ z - self.b_ineq)))
        for cone in self.socs:
            v = max(v, -cone.slack(z))
        return v


@dataclass(frozen=True)
class ProblemDefinition:
    """Callbacks and structure describing one non-convex problem.

    ``eq_fun``/``ineq_fun`` return ``g(z)`` and ``h(z)``; ``eq_jac``/``ineq_jac``
    return dense Jacobians of shape ``(n_eq, n_z)`` and ``(n_ineq, n_z)``.
    """

    n_z: int
    n_eq: int
    n_ineq: int
    cost: np.ndarray
    eq_fun: VectorFn
    eq_jac: VectorFn
    ineq_fun: VectorFn
    ineq_jac: VectorFn
    convex: ConvexBlock
    cost_quad: Optional[np.ndarray] = None
    cost_const: float = 0.0
    bounds: Optional[tuple] = None
    name: str = "problem"
    metadata: dict = field(default_factory=dict, compare=False)

    def f0(self, z: np.ndarray) -> float:
        val = float(self.cost @ z) + self.cost_const
        if self.cost_quad is not None:
            val += 0.5 * float(z @ self.cost_quad @ z)
        return val

    def grad_f0(self, z: np.ndarray) -> np.ndarray:
        grad = np.array(self.cost, dtype=float)
        if self.cost_quad is not None:
            grad = grad + self.cost_quad @ z
        return grad

    def bound_arrays(self):
        """``(lb, ub)`` arrays, infinite where unbounded."""
        if self.bounds is None:
            return np.full(self.n_z, -np.inf), np.full(self.n_z, np.inf)
        lb, ub = self.bounds
        return (np.broadcast_to(np.asarray(lb, float), (self.n_z,)).copy(),
                np.broadcast_to(np.asarray(ub, float), (self.n_z,)).copy())


def _checked(values, size: int, block: str, z) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (size,):
        raise DimensionError(f"{block} returned shape {arr.shape}, expected ({size},)")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise EvaluationError(block, bad[0], z)
    return arr


def _checked_jac(values, rows: int, cols: int, block: str, z) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(rows, cols) if rows == 0 else np.asarray(values, dtype=float)
    if arr.shape != (rows, cols):
        raise DimensionError(f"{block} returned shape {arr.shape}, expected ({rows}, {cols})")
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        raise EvaluationError(block, bad[0][0], z)
    return arr


class Evaluation:
    """Values of ``f0``, ``g``, ``h`` at ``z``; Jacobians computed on first access."""

    def __init__(self, problem: ProblemDefinition, z: np.ndarray):
        self.problem = problem
        self.z = z
        self.f0 = problem.f0(z)
        if not np.isfinite(self.f0):
            raise EvaluationError("f0", 0, z)
        self.g = _checked(problem.eq_fun(z), problem.n_eq, "g", z)
        self.h = _checked(problem.ineq_fun(z), problem.n_ineq, "h", z)

    @cached_property
    def grad_f0(self) -> np.ndarray:
        return _checked(self.problem.grad_f0(self.z), self.problem.n_z, "grad_f0", self.z)

    @cached_property
    def jac_g(self) -> np.ndarray:
        p = self.problem
        return _checked_jac(p.eq_jac(self.z), p.n_eq, p.n_z, "jac_g", self.z)

    @cached_property
    def jac_h(self) -> np.ndarray:
        p = self.problem
        return _checked_jac(p.ineq_jac(self.z), p.n_ineq, p.n_z, "jac_h", self.z)


def evaluate(problem: ProblemDefinition, z) -> Evaluation:
    z = np.asarray(z, dtype=float)
    if z.shape != (problem.n_z,):
        raise DimensionError(f"z has shape {z.shape}, expected ({problem.n_z},)")
    z = z.copy()
    z.setflags(write=False)
    return Evaluation(problem, z)


@dataclass
class JacobianReport:
    """Max relative error of analytic vs central-difference derivatives per block."""

    errors: dict
    step: float

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    def passed(self, tol: float) -> bool:
        return self.max_error <= tol


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if analytic.size == 0:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(numeric))))
    return float(np.max(np.abs(analytic - numeric))) / scale


def _central_jacobian(fun: VectorFn, z: np.ndarray, step: float, rows: int) -> np.ndarray:
    jac = np.zeros((rows, z.size))
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += step
        zm[i] -= step
        jac[:, i] = (np.asarray(fun(zp), float) - np.asarray(fun(zm), float)) / (2 * step)
    return jac


def check_jacobians(problem: ProblemDefinition, z, step: float = 1e-6) -> JacobianReport:
    """Compare supplied derivatives against central differences at ``z``."""
    if step <= 0:
        raise ValueError("step must be positive")
    ev = evaluate(problem, z)
    z = np.array(ev.z)
    f0_fd = _central_jacobian(lambda x: [problem.f0(x)], z, step, 1)[0]
    errors = {
        "f0": _rel_err(ev.grad_f0, f0_fd),
        "g": _rel_err(ev.jac_g, _central_jacobian(problem.eq_fun, z, step, problem.n_eq)),
        "h": _rel_err(ev.jac_h, _central_jacobian(problem.ineq_fun, z, step, problem.n_ineq)),
    }
    return JacobianReport(errors, step)


def random_points(problem: ProblemDefinition, n: int, rng: np.random.Generator,
                  center: Optional[Sequence[float]] = None, spread: float = 1.0) -> np.ndarray:
    """Draw ``n`` points uniformly inside the bounds (or a box around ``center``)."""
    lb, ub = problem.bound_arrays()
    if center is not None:
        c = np.asarray(center, float)
        lb = np.maximum(lb, c - spread)
        ub = np.minimum(ub, c + spread)
    lb = np.where(np.isfinite(lb), lb, -spread)
    ub = np.where(np.isfinite(ub), ub, spread)
    return rng.uniform(lb, ub, size=(n, problem.n_z))
