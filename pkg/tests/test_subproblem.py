import numpy as np
import pytest

from scvxstar.backends import ClarabelBackend, CvxpyBackend, get_backend
from scvxstar.penalty import PenaltyMode, PenaltyState, augmented_objective
from scvxstar.problem import ConvexBlock, ProblemDefinition
from scvxstar.subproblem import build_subproblem, linearize, solve_subproblem

Z0 = np.array([1.5, 1.5])


def _ex1_sp(problem, z=Z0, w=1.0, lam=0.0, r=0.1, mode=PenaltyMode.AL):
    state = PenaltyState(np.array([lam]), np.zeros(0), w)
    return build_subproblem(linearize(problem, z), problem, state, r, mode)


def test_linearization_example1(ex1):
    m = linearize(ex1, Z0)
    assert m.jac_g == pytest.approx(np.array([[-21.4, 1.0]]))
    assert m.g_lin(Z0) == pytest.approx(m.g_ref)
    assert m.g_lin(Z0 + [0.1, 0.0]) == pytest.approx(m.g_ref - 2.14)


def test_row_layout_example1(ex1):
    sp = _ex1_sp(ex1)
    assert sp.n_x == 3  # z1, z2, xi
    assert sp.trust_rows.stop - sp.trust_rows.start == 4
    A = sp.A_le[sp.trust_rows]
    b = sp.b_le[sp.trust_rows]
    assert np.array_equal(A[:, :2], np.vstack([np.eye(2), -np.eye(2)]))
    assert b == pytest.approx(np.concatenate([Z0 + 0.1, -(Z0 - 0.1)]))
    # 4 trust + 4 bound + 1 convex inequality row
    assert sp.A_le.shape[0] == 9
    assert sp.A_le[-1, :2] == pytest.approx([-4.0 / 3.0, -1.0])


def test_l1_mode_splits_slack(ex1):
    sp = _ex1_sp(ex1, mode=PenaltyMode.L1, w=3.0)
    assert sp.n_x == 4
    assert sp.q[2:] == pytest.approx([3.0, 3.0])
    assert np.all(sp.P == 0)


def test_example2_passthrough(ex2, ex2_init, quad_params):
    state = PenaltyState.initial(ex2.n_eq, ex2.n_ineq, 1.0)
    sp = build_subproblem(linearize(ex2, ex2_init), ex2, state, 0.1)
    assert len(sp.socs) == quad_params.N
    cb = ex2.convex
    # convex inequality rows come last, unchanged in the z columns
    assert np.array_equal(sp.A_le[-cb.A_ineq.shape[0]:, :ex2.n_z], cb.A_ineq)
    assert np.array_equal(sp.A_eq[-cb.A_eq.shape[0]:, :ex2.n_z], cb.A_eq)


@pytest.mark.parametrize("mode", list(PenaltyMode))
def test_candidate_feasible_and_matches_J(ex1, ex2, ex2_init, mode):
    for prob, z in ((ex1, Z0), (ex2, ex2_init)):
        state = PenaltyState(np.full(prob.n_eq, 0.3), np.full(prob.n_ineq, 0.2), 2.0)
        sp = build_subproblem(linearize(prob, z), prob, state, 0.1, mode)
        x = sp.candidate()
        assert max(sp.violation(x).values()) <= 1e-9
        assert sp.penalized_value(x) == pytest.approx(augmented_objective(prob, z, state, mode))


def _grid_oracle(problem, z_ref, r, n=1201):
    """min over the trust box of f0 + xi^2/2 with xi eliminated (w=1, lam=0)."""
    m = linearize(problem, z_ref)
    t = np.linspace(-r, r, n)
    d1, d2 = np.meshgrid(t, t, indexing="ij")
    xi = m.g_ref[0] + m.jac_g[0, 0] * d1 + m.jac_g[0, 1] * d2
    L = (z_ref[0] + d1) + (z_ref[1] + d2) + 0.5 * xi**2
    i = np.unravel_index(np.argmin(L), L.shape)
    return z_ref + np.array([t[i[0]], t[i[1]]]), float(L[i])


def test_first_step_matches_grid_oracle(ex1):
    sol = solve_subproblem(_ex1_sp(ex1), ClarabelBackend())
    z_or, L_or = _grid_oracle(ex1, Z0, 0.1)
    assert sol.L == pytest.approx(L_or, abs=1e-4)
    assert sol.L <= L_or + 1e-9
    assert np.linalg.norm(sol.z - z_or) <= 2e-3
    # the step is limited by the trust region
    assert np.max(np.abs(sol.z - Z0)) == pytest.approx(0.1, abs=1e-7)
    assert not sol.fallback


def test_linear_objective_hits_trust_corner():
    prob = ProblemDefinition(
        n_z=2, n_eq=0, n_ineq=0, cost=np.array([1.0, 1.0]),
        eq_fun=lambda z: np.zeros(0), eq_jac=lambda z: np.zeros((0, 2)),
        ineq_fun=lambda z: np.zeros(0), ineq_jac=lambda z: np.zeros((0, 2)),
        convex=ConvexBlock.empty(2),
    )
    state = PenaltyState.initial(0, 0, 1.0)
    sol = solve_subproblem(build_subproblem(linearize(prob, np.zeros(2)), prob, state, 1.0),
                           ClarabelBackend())
    assert sol.z == pytest.approx([-1.0, -1.0], abs=1e-7)
    assert sol.L == pytest.approx(-2.0, abs=1e-7)


def test_stationary_point_is_a_fixed_point(ex1):
    from scvxstar.examples.crawling import brute_force_example1

    z_best, _ = brute_force_example1(10**5)
    # at the constrained minimizer the multiplier of g is -1 (grad f0 = (1, 1))
    sol = solve_subproblem(_ex1_sp(ex1, z=z_best, lam=-1.0, r=0.1), ClarabelBackend())
    assert np.linalg.norm(sol.z - z_best) <= 1e-6


def test_backends_agree(ex1, ex2, ex2_init):
    state = PenaltyState.initial(ex2.n_eq, ex2.n_ineq, 10.0)
    for sp in (_ex1_sp(ex1), _ex1_sp(ex1, mode=PenaltyMode.L1),
               build_subproblem(linearize(ex2, ex2_init), ex2, state, 0.5)):
        a = solve_subproblem(sp, ClarabelBackend())
        b = solve_subproblem(sp, CvxpyBackend())
        assert a.L == pytest.approx(b.L, rel=1e-6, abs=1e-6)


def test_solution_is_deterministic(ex2, ex2_init):
    state = PenaltyState.initial(ex2.n_eq, ex2.n_ineq, 10.0)
    sp = build_subproblem(linearize(ex2, ex2_init), ex2, state, 0.5)
    a = solve_subproblem(sp, get_backend("clarabel"))
    b = solve_subproblem(sp, get_backend("clarabel"))
    assert np.array_equal(a.z, b.z) and a.L == b.L


def test_invalid_radius(ex1):
    with pytest.raises(ValueError):
        _ex1_sp(ex1, r=0.0)
