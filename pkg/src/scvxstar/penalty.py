"""Penalty functions, penalized objective and the infeasibility measure."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .problem import ProblemDefinition, evaluate


class PenaltyMode(str, enum.Enum):
    AL = "al"
    L1 = "l1"


@dataclass(frozen=True)
class PenaltyState:
    """Multipliers and weights held fixed within one convex subproblem.

    ``delta`` is the stationarity tolerance gating multiplier updates and
    ``eta`` the threshold of the rate-variant criterion; both start at +inf.
    """

    lam: np.ndarray
    mu: np.ndarray
    w: float
    delta: float = np.inf
    eta: float = np.inf
    w_max: float = 1e8

    def __post_init__(self):
        if not (0 < self.w <= self.w_max):
            raise ValueError(f"w={self.w} outside (0, w_max={self.w_max}]")
        if np.any(np.asarray(self.mu) < 0):
            raise ValueError("mu must be nonnegative")
        if not self.delta > 0 or not self.eta > 0:
            raise ValueError("delta and eta must be positive or inf")

    @classmethod
    def initial(cls, n_eq: int, n_ineq: int, w: float, w_max: float = 1e8) -> "PenaltyState":
        return cls(np.zeros(n_eq), np.zeros(n_ineq), float(w), w_max=float(w_max))

    def evolve(self, **changes) -> "PenaltyState":
        return replace(self, **changes)


def positive_part(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=float), 0.0)


def penalty_al(g, h, state: PenaltyState) -> float:
    """lam.g + w/2 g.g + mu.[h]+ + w/2 [h]+.[h]+"""
    g = np.asarray(g, dtype=float)
    hp = positive_part(h)
    w = state.w
    return float(state.lam @ g + 0.5 * w * (g @ g) + state.mu @ hp + 0.5 * w * (hp @ hp))


def penalty_al_grad(g, h, state: PenaltyState):
    """Gradient of :func:`penalty_al` with respect to ``(g, h)``."""
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    active = h > 0
    dg = state.lam + state.w * g
    dh = np.where(active, state.mu + state.w * h, 0.0)
    return dg, dh


def penalty_l1(g, h, w: float) -> float:
    if w <= 0:
        raise ValueError("w must be positive")
    return float(w * np.sum(np.abs(g)) + w * np.sum(positive_part(h)))


def penalty(g, h, state: PenaltyState, mode: PenaltyMode) -> float:
    if PenaltyMode(mode) is PenaltyMode.L1:
        return penalty_l1(g, h, state.w)
    return penalty_al(g, h, state)


def infeasibility(g, h) -> float:
    """Euclidean norm of ``(g, [h]+)``."""
    g = np.asarray(g, dtype=float)
    hp = positive_part(h)
    return float(np.sqrt(g @ g + hp @ hp))


def augmented_objective(problem: ProblemDefinition, z, state: PenaltyState,
                        mode: PenaltyMode = PenaltyMode.AL) -> float:
    """J(z) = f0(z) + P(g(z), h(z)) under the chosen penalty."""
    ev = evaluate(problem, z)
    return ev.f0 + penalty(ev.g, ev.h, state, mode)
