import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scvxstar.penalty import (
    PenaltyMode,
    PenaltyState,
    augmented_objective,
    infeasibility,
    penalty_al,
    penalty_al_grad,
    penalty_l1,
    positive_part,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
vec = lambda n: arrays(np.float64, n, elements=finite)


def _state(lam, mu, w):
    return PenaltyState(np.asarray(lam, float), np.asarray(mu, float), float(w))


def test_al_hand_values():
    # 1*2 + 2/2*4 + 0 + 0 with h inactive
    assert penalty_al([2.0], [-1.0], _state([1.0], [3.0], 2.0)) == pytest.approx(6.0)
    assert penalty_al([0.0], [0.0], _state([5.0], [5.0], 1.0)) == 0.0
    # g = (1, -1), lam = (2, 0): 2 + 1/2*2*2 = 4 ; h = 3, mu = 4: 12 + 1/2*2*9 = 21
    assert penalty_al([1.0, -1.0], [3.0], _state([2.0, 0.0], [4.0], 2.0)) == pytest.approx(25.0)


def test_l1_hand_values():
    assert penalty_l1([1.0, -2.0], [0.5, -3.0], 2.0) == pytest.approx(7.0)
    assert penalty_l1([0.0], [2.0], 1.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        penalty_l1([1.0], [], 0.0)


def test_infeasibility_hand_values():
    assert infeasibility([], []) == 0.0
    assert infeasibility([3.0], [4.0, -7.0]) == pytest.approx(5.0)
    assert infeasibility([0.0], [1.0]) == pytest.approx(1.0)


def test_state_validation():
    with pytest.raises(ValueError):
        _state([0.0], [-1.0], 1.0)
    with pytest.raises(ValueError):
        _state([0.0], [0.0], 0.0)
    with pytest.raises(ValueError):
        PenaltyState(np.zeros(1), np.zeros(1), 1e9, w_max=1e8)


def test_augmented_objective_example1(ex1):
    z = np.array([1.5, 1.5])
    g = -4.6125
    st_ = _state([0.5], [], 1.0)
    assert augmented_objective(ex1, z, st_, PenaltyMode.AL) == pytest.approx(
        3.0 + 0.5 * g + 0.5 * g * g)
    assert augmented_objective(ex1, z, st_, PenaltyMode.L1) == pytest.approx(3.0 + abs(g))


@settings(max_examples=200, deadline=None)
@given(vec(3), vec(2), vec(3), vec(2), st.floats(1e-3, 1e3))
def test_al_penalty_properties(g, h, lam, mu, w):
    s = _state(lam, np.abs(mu), w)
    zero = _state(np.zeros(3), np.zeros(2), w)
    # zero multipliers: quadratic, nonnegative, vanishes only on the feasible set
    p0 = penalty_al(g, h, zero)
    assert p0 >= 0
    assert (p0 == 0) == (infeasibility(g, h) == 0)
    # constraints satisfied with g = 0: only mu.[h]+ terms remain, which vanish
    assert penalty_al(np.zeros(3), -np.abs(h), s) == 0.0
    # monotone in w for the quadratic part
    bigger = _state(lam, np.abs(mu), 2 * w)
    assert penalty_al(g, h, bigger) - penalty_al(g, h, s) == pytest.approx(
        0.5 * w * infeasibility(g, h) ** 2, rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(vec(3), vec(2), st.floats(1e-3, 1e3))
def test_l1_properties(g, h, w):
    p = penalty_l1(g, h, w)
    assert p >= 0
    assert p == pytest.approx(w * (np.abs(g).sum() + positive_part(h).sum()))
    # the l1 norm dominates the euclidean one
    assert p >= w * infeasibility(g, h) - 1e-9


@settings(max_examples=100, deadline=None)
@given(vec(4))
def test_positive_part_idempotent(x):
    p = positive_part(x)
    assert np.all(p >= 0)
    assert np.array_equal(positive_part(p), p)


def test_al_gradient_matches_finite_differences(rng):
    step = 1e-6
    for _ in range(20):
        g = rng.normal(size=3)
        h = rng.normal(size=2)
        # keep h away from the kink of [.]+
        h = np.where(np.abs(h) < 1e-3, 1e-3, h)
        s = _state(rng.normal(size=3), np.abs(rng.normal(size=2)), rng.uniform(0.1, 10))
        dg, dh = penalty_al_grad(g, h, s)
        num = np.zeros(5)
        x = np.concatenate([g, h])
        for i in range(5):
            e = np.zeros(5)
            e[i] = step
            fp = penalty_al((x + e)[:3], (x + e)[3:], s)
            fm = penalty_al((x - e)[:3], (x - e)[3:], s)
            num[i] = (fp - fm) / (2 * step)
        err = np.max(np.abs(np.concatenate([dg, dh]) - num)) / max(1.0, np.max(np.abs(num)))
        assert err <= 1e-6
