"""Differential bookkeeping: Jacobian checks, openness, Lipschitz estimates."""

import numpy as np
import pytest

from locopt.calculus import (
    Box,
    SmoothMap,
    check_jacobian,
    estimate_derivative_lipschitz,
    evaluate,
    evaluate_many,
    jacobian,
    jacobian_many,
    surjectivity_check,
)
from locopt.catalog import (
    affine_map,
    compose_maps,
    logsum_map,
    map_from_spec,
    polar_map,
    polynomial_map,
    quadratic_map,
    stack_maps,
)
from locopt.errors import DomainError, InputError, PreconditionError
from locopt.spaces import Ball


def _catalog_instances():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((2, 3))
    Q = rng.standard_normal((3, 3))
    aff = affine_map(A, rng.standard_normal(2))
    quad = quadratic_map(Q, rng.standard_normal(3), 0.7)
    poly = polynomial_map(
        2, [[(1.0, (1, 0)), (0.5, (2, 1))], [(1.0, (0, 2)), (-2.0, (1, 1))]]
    )
    losu = logsum_map(rng.standard_normal(3))
    pol = polar_map()
    comp = compose_maps(aff, stack_maps([losu, quad, logsum_map(np.ones(3))]))
    stck = stack_maps([aff, affine_map(np.eye(3))])
    return [aff, quad, poly, losu, pol, comp, stck]


@pytest.mark.parametrize("m", _catalog_instances(), ids=lambda m: m.label)
def test_catalog_jacobians_match_central_differences(m):
    rng = np.random.default_rng(11)
    pts = rng.uniform(-1.5, 1.5, size=(100, m.domain_dim))
    worst = 0.0
    for x in pts:
        rep = check_jacobian(m, x, tol=1e-5)
        worst = max(worst, rep.max_abs_error)
        assert rep.passed, f"{m.label} at {x}: error {rep.max_abs_error:.3e}"
    assert worst <= 1e-5


def test_planted_jacobian_defect_is_caught():
    # analytic Jacobian with one wrong entry
    bad = SmoothMap(
        2, 2,
        fn=lambda x: np.array([x[0] * x[1], x[0] + x[1]]),
        jac=lambda x: np.array([[x[1], x[0] + 0.01], [1.0, 1.0]]),
    )
    rep = check_jacobian(bad, np.array([0.3, -0.4]), tol=1e-5)
    assert not rep.passed
    assert rep.max_abs_error >= 0.009


def test_check_jacobian_requires_analytic_jacobian():
    fd_only = SmoothMap(2, 1, fn=lambda x: np.array([x @ x]))
    with pytest.raises(PreconditionError):
        check_jacobian(fd_only, np.zeros(2))


@pytest.mark.parametrize("m", _catalog_instances(), ids=lambda m: m.label)
def test_batch_evaluation_matches_single(m):
    rng = np.random.default_rng(3)
    X = rng.uniform(-1.0, 1.0, size=(17, m.domain_dim))
    V = evaluate_many(m, X)
    J = jacobian_many(m, X)
    for k in range(X.shape[0]):
        assert np.allclose(V[k], evaluate(m, X[k]), atol=1e-13)
        assert np.allclose(J[k], jacobian(m, X[k]), atol=1e-13)


def test_surjectivity_verdicts():
    wide = affine_map(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    est = surjectivity_check(wide, np.zeros(3))
    assert est.surjective and abs(est.sigma - 1.0) <= 1e-12

    tall = affine_map(np.array([[1.0], [1.0]]))
    assert not surjectivity_check(tall, np.zeros(1)).surjective

    rank_def = affine_map(np.array([[1.0, 0.0], [2.0, 0.0]]))
    est = surjectivity_check(rank_def, np.zeros(2))
    assert not est.surjective and est.sigma == 0.0


def test_surjectivity_scale_equivariance():
    A = np.array([[2.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    base = surjectivity_check(affine_map(A), np.zeros(3))
    for c in (2.0, 10.0):
        scaled = surjectivity_check(affine_map(c * A), np.zeros(3))
        assert scaled.surjective == base.surjective
        assert abs(scaled.sigma - c * base.sigma) <= 1e-9 * c


def test_polar_derivative_surjective_but_images_curl():
    est = surjectivity_check(polar_map(), np.zeros(2))
    assert est.surjective and abs(est.sigma - 1.0) <= 1e-12


def test_lipschitz_estimate_linear_map_is_zero():
    m = affine_map(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert estimate_derivative_lipschitz(m, Ball(np.zeros(2), 1.0), 200) == 0.0


def test_lipschitz_estimate_shear_lower_bound():
    # Df of (x, y + x^2) varies with slope 2 in x, so the true constant is 2
    m = polynomial_map(2, [[(1.0, (1, 0))], [(1.0, (0, 1)), (1.0, (2, 0))]])
    est = estimate_derivative_lipschitz(m, Ball(np.zeros(2), 1.0), 2000, seed=1)
    assert 1.8 <= est <= 2.0 + 1e-9


def test_region_membership_enforced():
    box = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    m = affine_map(np.eye(2), region=box)
    evaluate(m, np.array([0.5, 0.5]))
    with pytest.raises(DomainError):
        evaluate(m, np.array([2.0, 0.0]))
    assert box.contains_ball(Ball(np.zeros(2), 0.9))
    assert not box.contains_ball(Ball(np.zeros(2), 1.1))


def test_box_validation_and_margin():
    with pytest.raises(DomainError, match="lo < hi"):
        Box(np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    box = Box(np.array([0.0, 0.0]), np.array([2.0, 4.0]))
    assert box.interior_margin(np.array([0.5, 2.0])) == 0.5
    assert box.interior_margin(np.array([-1.0, 2.0])) == -1.0


def test_map_from_spec_round_trip():
    m = _catalog_instances()[0]
    again = map_from_spec(m.definition)
    x = np.array([0.1, -0.2, 0.3])
    assert np.allclose(evaluate(m, x), evaluate(again, x), atol=1e-15)


def test_map_from_spec_rejects_unknown_type():
    with pytest.raises(InputError, match="unknown map type"):
        map_from_spec({"type": "spline"})


def test_polynomial_degree_cap():
    with pytest.raises(DomainError, match="degree"):
        polynomial_map(1, [[(1.0, (5,))]])
