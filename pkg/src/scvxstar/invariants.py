"""Trace-level invariants every run must satisfy.

``check_run`` returns ``(name, ok, detail)`` tuples so the CLI ``check`` verb
and the test-suite share one implementation.
"""
from __future__ import annotations

import math

import numpy as np

from .driver import Algorithm, SolveResult, Status
from .penalty import infeasibility
from .problem import ProblemDefinition, evaluate

DELTA_L_FLOOR = -1e-9


def _same(a, b) -> bool:
    return np.array_equal(np.asarray(a), np.asarray(b))


def check_run(problem: ProblemDefinition, result: SolveResult) -> list[tuple[str, bool, str]]:
    cfg = result.config
    recs = result.iterations
    out = []

    def add(name, ok, detail=""):
        out.append((name, bool(ok), detail))

    worst = min((r.delta_L for r in recs), default=0.0)
    add("delta_L >= -1e-9", worst >= DELTA_L_FLOOR, f"min delta_L = {worst:.3e}")
    mus = [r.mu for r in recs] + [result.mu_final]
    add("mu >= 0", all(np.all(np.asarray(m) >= 0) for m in mus if m is not None))
    ws = [r.w for r in recs] + [result.w_final]
    add("w non-decreasing and <= w_max",
        all(b >= a for a, b in zip(ws, ws[1:])) and max(ws) <= cfg.w_max,
        f"w range [{min(ws):.3g}, {max(ws):.3g}]")
    deltas = [r.delta for r in recs if not math.isinf(r.delta)]
    add("delta non-increasing after first assignment",
        all(b <= a for a, b in zip(deltas, deltas[1:])))
    rs = [r.r for r in recs]
    add("r in [r_min, r_max]", all(cfg.r_min <= r <= cfg.r_max for r in rs))
    add("chi >= 0", all(r.chi >= 0 for r in recs))

    carry_ok, move_ok, const_ok = True, True, True
    for cur, nxt in zip(recs, recs[1:]):
        if cur.accepted:
            move_ok &= _same(nxt.z_ref, cur.z_star)
        else:
            carry_ok &= (_same(nxt.z_ref, cur.z_ref) and nxt.w == cur.w
                         and _same(nxt.lam, cur.lam) and _same(nxt.mu, cur.mu)
                         and (nxt.delta == cur.delta))
        if not cur.multipliers_updated:
            const_ok &= (nxt.w == cur.w and _same(nxt.lam, cur.lam) and _same(nxt.mu, cur.mu))
    add("rejected iterations carry state unchanged", carry_ok)
    add("accepted iterations move the reference", move_ok)
    add("multipliers constant between updates", const_ok)
    add("updates only on accepted steps",
        all(r.accepted for r in recs if r.multipliers_updated))
    add("acceptance implies dJ >= rho0*dL",
        all(r.delta_J >= cfg.rho0 * r.delta_L - 1e-12
            for r in recs if r.accepted and abs(r.delta_L) >= 1e-12))
    if cfg.mode is Algorithm.SCVX:
        add("baseline never updates multipliers", not any(r.multipliers_updated for r in recs))

    if result.status is Status.CONVERGED:
        ev = evaluate(problem, result.z_final)
        chi = infeasibility(ev.g, ev.h)
        last = recs[-1]
        add("converged => recomputed chi <= eps_feas", chi <= cfg.eps_feas, f"chi = {chi:.3e}")
        add("converged => |dJ| <= eps_opt", abs(last.delta_J) <= cfg.eps_opt,
            f"|dJ| = {abs(last.delta_J):.3e}")
        if cfg.mode is Algorithm.SCVX_STAR:
            gaps = np.diff([r.k for r in recs if r.multipliers_updated])
            add("multipliers updated at least once", any(r.multipliers_updated for r in recs),
                f"max gap between updates {int(gaps.max()) if gaps.size else 0}")
    return out


def all_passed(checks) -> bool:
    return all(ok for _, ok, _ in checks)
