"""Two-variable problem on which classic SCP tends to crawl.

    minimize    z1 + z2
    subject to  z2 - z1^4 - 2 z1^3 + 1.2 z1^2 + 2 z1 = 0
                -z2 - (4/3) z1 - 2/3 <= 0
                -2 <= z <= 2
"""
from __future__ import annotations

import numpy as np

from ..problem import ConvexBlock, ProblemDefinition

Z_INIT = np.array([1.5, 1.5])


def curve(z1):
    """z2 on the equality manifold as a function of z1."""
    z1 = np.asarray(z1, dtype=float)
    return z1**4 + 2 * z1**3 - 1.2 * z1**2 - 2 * z1


def _g(z):
    z1, z2 = z
    return np.array([z2 - z1**4 - 2 * z1**3 + 1.2 * z1**2 + 2 * z1])


def _jac_g(z):
    z1 = z[0]
    return np.array([[-4 * z1**3 - 6 * z1**2 + 2.4 * z1 + 2, 1.0]])


def _no_h(z):
    return np.zeros(0)


def _no_h_jac(z):
    return np.zeros((0, 2))


def example1_problem() -> ProblemDefinition:
    convex = ConvexBlock.build(2, ineq_rows=[([-4.0 / 3.0, -1.0], 2.0 / 3.0)])
    return ProblemDefinition(
        n_z=2, n_eq=1, n_ineq=0, cost=np.array([1.0, 1.0]),
        eq_fun=_g, eq_jac=_jac_g, ineq_fun=_no_h, ineq_jac=_no_h_jac,
        convex=convex, bounds=(-2.0, 2.0), name="example1",
    )


def _feasible(z1):
    z2 = curve(z1)
    return (-z2 - 4.0 / 3.0 * z1 - 2.0 / 3.0 <= 0) & (z2 >= -2) & (z2 <= 2)


def _bisect(fun, a, b, iters=200):
    fa = fun(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = fun(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
        if b - a < 1e-15:
            break
    return 0.5 * (a + b)


def brute_force_example1(grid_n: int = 10**6):
    """Grid search on the equality-eliminated problem, refined by bisection.

    Returns ``(z_best, f_best)``.  Independent of the SCP machinery.
    """
    if grid_n < 10**4:
        raise ValueError("grid_n must be at least 1e4")
    z1 = np.linspace(-2.0, 2.0, grid_n)
    ok = _feasible(z1)
    f = np.where(ok, z1 + curve(z1), np.inf)
    i = int(np.argmin(f))
    lo, hi = z1[max(i - 1, 0)], z1[min(i + 1, grid_n - 1)]

    candidates = [z1[i]]
    # stationary point of z1 + curve(z1) inside the bracket
    dobj = lambda t: 1 + 4 * t**3 + 6 * t**2 - 2.4 * t - 2
    if dobj(lo) * dobj(hi) < 0:
        candidates.append(_bisect(dobj, lo, hi))
    # active edges: linear inequality and the z2 bounds
    for edge in (lambda t: -curve(t) - 4.0 / 3.0 * t - 2.0 / 3.0,
                 lambda t: curve(t) - 2.0, lambda t: -curve(t) - 2.0):
        for a, b in ((lo, z1[i]), (z1[i], hi)):
            if edge(a) * edge(b) < 0:
                root = _bisect(edge, a, b)
                # land on the feasible side of the edge
                for _ in range(4):
                    if _feasible(root):
                        break
                    root = np.nextafter(root, a if edge(a) <= 0 else b)
                candidates.append(root)
    candidates = [t for t in candidates if _feasible(t)]
    best = min(candidates, key=lambda t: t + curve(t))
    z = np.array([best, float(curve(best))])
    return z, float(z.sum())
