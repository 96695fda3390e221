import numpy as np
import pytest

from scvxstar.problem import (
    ConvexBlock,
    DimensionError,
    EvaluationError,
    ProblemDefinition,
    SOCConstraint,
    check_jacobians,
    evaluate,
    random_points,
)


def _affine_problem():
    A = np.array([[1.0, 2.0, -1.0], [0.5, 0.0, 3.0]])
    b = np.array([0.3, -1.0])
    return ProblemDefinition(
        n_z=3, n_eq=2, n_ineq=0, cost=np.ones(3),
        eq_fun=lambda z: A @ z - b, eq_jac=lambda z: A,
        ineq_fun=lambda z: np.zeros(0), ineq_jac=lambda z: np.zeros((0, 3)),
        convex=ConvexBlock.empty(3),
    )


def test_example1_values(ex1):
    ev = evaluate(ex1, [1.5, 1.5])
    assert ev.f0 == pytest.approx(3.0)
    # 1.5 - (5.0625 + 6.75 - 2.7 - 3)
    assert ev.g == pytest.approx([-4.6125])
    assert ev.h.shape == (0,)
    assert evaluate(ex1, [0.0, 0.0]).g == pytest.approx([0.0])
    assert ev.jac_g == pytest.approx(np.array([[-4 * 3.375 - 6 * 2.25 + 3.6 + 2, 1.0]]))


def test_wrong_dimension_rejected(ex1):
    with pytest.raises(DimensionError):
        evaluate(ex1, [1.0, 2.0, 3.0])


def test_nonfinite_callback_reports_block():
    prob = _affine_problem()
    bad = ProblemDefinition(**{**prob.__dict__, "eq_fun": lambda z: np.array([np.nan, 0.0])})
    with pytest.raises(EvaluationError) as err:
        evaluate(bad, np.zeros(3))
    assert err.value.block == "g" and err.value.index == 0


def test_wrong_output_size_rejected():
    prob = _affine_problem()
    bad = ProblemDefinition(**{**prob.__dict__, "eq_fun": lambda z: np.zeros(3)})
    with pytest.raises(DimensionError):
        evaluate(bad, np.zeros(3))


def test_affine_jacobian_is_exact(rng):
    prob = _affine_problem()
    for z in rng.normal(size=(5, 3)):
        # affine maps: central differences are exact for any step
        assert check_jacobians(prob, z, step=1e-2).passed(1e-12)


def test_example1_jacobians(ex1, rng):
    for z in random_points(ex1, 10, rng):
        assert check_jacobians(ex1, z).passed(1e-5)


def test_example2_jacobians(ex2, ex2_init, rng):
    assert check_jacobians(ex2, ex2_init).passed(1e-4)
    for z in random_points(ex2, 3, rng, center=ex2_init, spread=0.5):
        assert check_jacobians(ex2, z).passed(1e-4)


def test_broken_jacobian_is_caught(ex1):
    bad = ProblemDefinition(**{**ex1.__dict__, "eq_jac": lambda z: np.array([[0.0, 1.0]])})
    assert not check_jacobians(bad, [0.7, 0.1]).passed(1e-4)


def test_evaluation_is_deterministic(ex2, ex2_init):
    a, b = evaluate(ex2, ex2_init), evaluate(ex2, ex2_init)
    assert np.array_equal(a.g, b.g) and np.array_equal(a.jac_g, b.jac_g)


def test_convex_block_violation():
    soc = SOCConstraint(np.eye(2), np.zeros(2), np.zeros(2), 1.0)
    cb = ConvexBlock.build(2, eq_rows=[([1.0, 0.0], 0.5)], ineq_rows=[([0.0, 1.0], 0.0)],
                           socs=[soc])
    assert cb.violation(np.array([0.5, 0.0])) == pytest.approx(0.0)
    assert cb.violation(np.array([0.5, 0.2])) == pytest.approx(0.2)
    assert cb.violation(np.array([3.0, -4.0])) == pytest.approx(4.0)


def test_random_points_respect_bounds(ex1, rng):
    pts = random_points(ex1, 200, rng)
    assert pts.shape == (200, 2)
    assert np.all(pts >= -2) and np.all(pts <= 2)
