"""Successive convexification with augmented-Lagrangian multiplier updates.

``solve`` runs SCvx* by default; ``Algorithm.SCVX`` gives the fixed-weight
l1-penalty baseline by disabling the multiplier/weight/delta updates.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .backends import get_backend
from .penalty import PenaltyMode, PenaltyState, infeasibility, penalty, positive_part
from .problem import EvaluationError, ProblemDefinition, evaluate
from .subproblem import SubproblemError, SubproblemSolution, build_subproblem, linearize, solve_subproblem

log = logging.getLogger(__name__)

DELTA_L_ZERO = 1e-12


class Algorithm(str, enum.Enum):
    SCVX_STAR = "scvx_star"
    SCVX = "scvx"


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    EVALUATION_FAILURE = "EvaluationFailure"
    BACKEND_FAILURE = "BackendFailure"


@dataclass(frozen=True)
class AlgorithmConfig:
    eps_opt: float = 1e-5
    eps_feas: float = 1e-5
    rho0: float = 0.0
    rho1: float = 0.25
    rho2: float = 0.7
    alpha1: float = 2.0
    alpha2: float = 3.0
    beta: float = 2.0
    gamma: float = 0.9
    r_init: float = 0.1
    r_min: float = 1e-10
    r_max: float = 10.0
    w_init: float = 1.0
    w_max: float = 1e8
    max_iters: int = 100
    mode: Algorithm = Algorithm.SCVX_STAR
    rate_variant: bool = False
    backend: str = "clarabel"
    backend_tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "mode", Algorithm(self.mode))
        checks = [
            (self.eps_opt > 0 and self.eps_feas > 0, "tolerances must be positive"),
            (self.rho0 < self.rho1 < self.rho2, "need rho0 < rho1 < rho2"),
            (self.alpha1 > 1 and self.alpha2 > 1, "alpha1, alpha2 must exceed 1"),
            (self.beta > 1, "beta must exceed 1"),
            (0 < self.gamma < 1, "gamma must lie in (0, 1)"),
            (0 < self.r_min < self.r_max, "need 0 < r_min < r_max"),
            (self.r_min <= self.r_init <= self.r_max, "r_init outside [r_min, r_max]"),
            (0 < self.w_init <= self.w_max, "need 0 < w_init <= w_max"),
            (self.max_iters >= 1, "max_iters must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    @property
    def penalty_mode(self) -> PenaltyMode:
        return PenaltyMode.L1 if self.mode is Algorithm.SCVX else PenaltyMode.AL

    def with_overrides(self, **overrides) -> "AlgorithmConfig":
        known = {f.name: f for f in fields(self)}
        values = asdict(self)
        for key, val in overrides.items():
            if key not in known:
                raise KeyError(f"unknown algorithm option {key!r}")
            values[key] = val
        for key in ("max_iters",):
            values[key] = int(values[key])
        return AlgorithmConfig(**values)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d


@dataclass
class IterationRecord:
    k: int
    z_ref: np.ndarray
    z_star: np.ndarray
    delta_J: float
    delta_L: float
    chi: float
    rho: float
    r: float
    w: float
    delta: float
    accepted: bool
    multipliers_updated: bool
    J_ref: float = math.nan
    L_star: float = math.nan
    f0_star: float = math.nan
    lam: Optional[np.ndarray] = field(default=None, repr=False)
    mu: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class SolveResult:
    status: Status
    z_final: np.ndarray
    lambda_final: np.ndarray
    mu_final: np.ndarray
    iterations: list
    config: AlgorithmConfig
    w_final: float = math.nan
    message: str = ""

    @property
    def iteration_count(self) -> int:
        return len(self.iterations)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def step_metrics(problem: ProblemDefinition, state: PenaltyState, z_ref, sol: SubproblemSolution,
                 mode=PenaltyMode.AL):
    """Actual reduction, predicted reduction and infeasibility of a step.

    Both penalized values use the multipliers and weight of the current
    iteration.  Returns ``(delta_J, delta_L, chi)``.
    """
    ev_ref = evaluate(problem, z_ref)
    ev_star = evaluate(problem, sol.z)
    J_ref = ev_ref.f0 + penalty(ev_ref.g, ev_ref.h, state, mode)
    J_star = ev_star.f0 + penalty(ev_star.g, ev_star.h, state, mode)
    return J_ref - J_star, J_ref - sol.L, infeasibility(ev_star.g, ev_star.h)


def acceptance_ratio(delta_J: float, delta_L: float) -> float:
    if abs(delta_L) < DELTA_L_ZERO:
        return 1.0
    return delta_J / delta_L


def update_trust_region(r: float, rho: float, config: AlgorithmConfig) -> float:
    if rho < config.rho1:
        return max(r / config.alpha1, config.r_min)
    if rho < config.rho2:
        return r
    return min(config.alpha2 * r, config.r_max)


def multiplier_update_criterion(delta_J: float, chi: float, state: PenaltyState,
                                config: AlgorithmConfig) -> bool:
    """|dJ| < delta, or |dJ| <= min(delta, eta*chi) in the rate variant.

    With ``chi == 0`` the rate variant falls back to the plain test.
    """
    if not config.rate_variant or chi <= 0.0:
        return abs(delta_J) < state.delta
    bound = state.delta if math.isinf(state.eta) else min(state.delta, state.eta * chi)
    return abs(delta_J) <= bound


def update_multipliers(state: PenaltyState, g_at_zstar, h_at_zstar,
                       config: AlgorithmConfig) -> PenaltyState:
    lam = state.lam + state.w * np.asarray(g_at_zstar, float)
    mu = positive_part(state.mu + state.w * np.asarray(h_at_zstar, float))
    w = min(config.beta * state.w, state.w_max)
    return state.evolve(lam=lam, mu=mu, w=w)


def update_delta(state: PenaltyState, delta_J: float, config: AlgorithmConfig) -> float:
    if math.isinf(state.delta):
        # a zero first reduction would freeze the criterion; keep delta > 0
        return max(abs(delta_J), np.finfo(float).tiny)
    return config.gamma * state.delta


def _initial_eta(state: PenaltyState, delta_J: float, chi: float) -> float:
    if math.isinf(state.eta) and chi > 0:
        return max(abs(delta_J) / chi, np.finfo(float).tiny)
    return state.eta


def solve(problem: ProblemDefinition, config: AlgorithmConfig, z_init, lam_init=None,
          mu_init=None, backend=None) -> SolveResult:
    """Run the iteration from ``z_init`` until both tolerances hold or ``max_iters``."""
    z_ref = np.array(z_init, dtype=float)
    if z_ref.shape != (problem.n_z,):
        raise ValueError(f"z_init has shape {z_ref.shape}, expected ({problem.n_z},)")
    if backend is None:
        backend = get_backend(config.backend, tol=config.backend_tol)
    mode = config.penalty_mode
    baseline = config.mode is Algorithm.SCVX
    state = PenaltyState.initial(problem.n_eq, problem.n_ineq, config.w_init, config.w_max)
    if lam_init is not None:
        state = state.evolve(lam=np.array(lam_init, float))
    if mu_init is not None:
        state = state.evolve(mu=np.array(mu_init, float))

    r = config.r_init
    dJ_prev = chi_prev = math.inf
    records: list[IterationRecord] = []
    z_star = z_ref.copy()
    status, message = Status.CONVERGED, ""

    while abs(dJ_prev) > config.eps_opt or chi_prev > config.eps_feas:
        if len(records) >= config.max_iters:
            status = Status.MAX_ITERS
            break
        k = len(records) + 1
        try:
            model = linearize(problem, z_ref)
            sp = build_subproblem(model, problem, state, r, mode)
            sol = solve_subproblem(sp, backend)
            ev_star = evaluate(problem, sol.z)
        except EvaluationError as exc:
            status, message = Status.EVALUATION_FAILURE, f"iteration {k}: {exc}"
            break
        except SubproblemError as exc:
            status, message = Status.BACKEND_FAILURE, f"iteration {k}: {exc}"
            break

        J_ref = model.f0_ref + penalty(model.g_ref, model.h_ref, state, mode)
        dJ = J_ref - (ev_star.f0 + penalty(ev_star.g, ev_star.h, state, mode))
        dL = J_ref - sol.L
        chi = infeasibility(ev_star.g, ev_star.h)
        rho = acceptance_ratio(dJ, dL)
        z_star = sol.z

        accepted = rho >= config.rho0
        updated = False
        new_state = state
        if accepted:
            z_ref = sol.z.copy()
            if not baseline and multiplier_update_criterion(dJ, chi, state, config):
                updated = True
                new_state = update_multipliers(state, ev_star.g, ev_star.h, config)
                new_state = new_state.evolve(delta=update_delta(state, dJ, config))
                if config.rate_variant:
                    new_state = new_state.evolve(eta=_initial_eta(state, dJ, chi))
        records.append(IterationRecord(
            k=k, z_ref=model.z_ref, z_star=sol.z, delta_J=dJ, delta_L=dL, chi=chi, rho=rho,
            r=r, w=state.w, delta=state.delta, accepted=accepted, multipliers_updated=updated,
            J_ref=J_ref, L_star=sol.L, f0_star=ev_star.f0, lam=state.lam, mu=state.mu,
        ))
        log.debug("k=%d dJ=%.3e dL=%.3e chi=%.3e rho=%.3f r=%.3e w=%.1e acc=%s upd=%s",
                  k, dJ, dL, chi, rho, r, state.w, accepted, updated)
        r = update_trust_region(r, rho, config)
        state = new_state
        dJ_prev, chi_prev = dJ, chi

    return SolveResult(status, np.array(z_star), np.array(state.lam), np.array(state.mu),
                       records, config, state.w, message)
