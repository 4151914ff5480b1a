"""Exchange economies: regularity, localized Pareto, equilibrium synthesis."""

import dataclasses

import numpy as np
import pytest

from locopt.benchmarks import linear_exchange, quadratic_disposal_exchange, standard_allocation
from locopt.calculus import Box, evaluate, jacobian
from locopt.catalog import polynomial_map
from locopt.cones import ConeSpec, ConstraintSet
from locopt.economy import (
    Allocation,
    Consumer,
    Economy,
    allocation_problem,
    build_equilibrium,
    check_a5,
    check_nonsatiation,
    check_regular,
    feasibility_map,
    localized_pareto,
    utilities_map,
    verify_equilibrium,
)
from locopt.errors import (
    DegenerateRadiusError,
    DomainError,
    EmptyIntersectionError,
    PreconditionError,
    ZeroPriceError,
)
from locopt.spaces import SpaceSpec
from locopt.vopt import Localization, SolveConfig, solve_localization

WIDE = Box(np.array([-10.0, -10.0]), np.array([10.0, 10.0]))


def _linear_utility(coeffs, label):
    terms = [[(float(c), tuple(int(k == i) for k in range(2))) for i, c in enumerate(coeffs)]]
    return polynomial_map(2, terms, label=label)


# ---- construction guards ----------------------------------------------

def test_economy_rejects_too_few_commodities():
    u = polynomial_map(1, [[(1.0, (1,))]], label="u")
    cons = Consumer(Box(np.array([-10.0]), np.array([10.0])), u)
    with pytest.raises(DomainError, match=r"regularity needs n\*m >= n\+m; got n=2, m=1 \(2 < 3\)"):
        Economy(
            consumers=(cons, cons),
            commodity_space=SpaceSpec.euclidean(1),
            aggregate_endowment=np.array([2.0]),
            net_demand_cone=ConstraintSet.singleton_zero(1),
        )


def test_consumer_rejects_vector_utility():
    vec = polynomial_map(2, [[(1.0, (1, 0))], [(1.0, (0, 1))]], label="pair")
    with pytest.raises(DomainError, match="utilities are scalar maps"):
        Consumer(WIDE, vec)


def test_economy_rejects_noneuclidean_space():
    u = _linear_utility([1.0, 2.0], "u")
    with pytest.raises(DomainError, match="commodity spaces are euclidean"):
        Economy(
            consumers=(Consumer(WIDE, u), Consumer(WIDE, u)),
            commodity_space=SpaceSpec.p_norm(2, 1.5),
            aggregate_endowment=np.array([2.0, 2.0]),
            net_demand_cone=ConstraintSet.singleton_zero(2),
        )


def test_economy_rejects_noncone_net_demand():
    u = _linear_utility([1.0, 2.0], "u")
    box_set = ConstraintSet.box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    with pytest.raises(DomainError, match="net-demand constraint must be a cone"):
        Economy(
            consumers=(Consumer(WIDE, u), Consumer(WIDE, u)),
            commodity_space=SpaceSpec.euclidean(2),
            aggregate_endowment=np.array([2.0, 2.0]),
            net_demand_cone=box_set,
        )


# ---- stacked maps -------------------------------------------------------

def test_feasibility_map_is_excess_demand(linear_eco):
    c = feasibility_map(linear_eco)
    x = standard_allocation().stacked
    assert np.allclose(evaluate(c, x), 0.0)
    assert np.array_equal(jacobian(c, x), np.tile(np.eye(2), (1, 2)))
    shifted = x + np.array([0.5, 0.0, 0.25, 0.0])
    assert np.allclose(evaluate(c, shifted), [0.75, 0.0])


def test_utilities_map_reads_own_block(linear_eco):
    u = utilities_map(linear_eco)
    x = np.array([1.0, 1.0, 3.0, 0.0])
    assert np.allclose(evaluate(u, x), [3.0, 6.0])
    J = jacobian(u, x)
    assert np.allclose(J[0], [1.0, 2.0, 0.0, 0.0])
    assert np.allclose(J[1], [0.0, 0.0, 2.0, 1.0])


def test_stacked_diagnostic_determinant_is_three(linear_eco):
    x = standard_allocation().stacked
    stacked = np.vstack([
        jacobian(utilities_map(linear_eco), x),
        jacobian(feasibility_map(linear_eco), x),
    ])
    assert stacked.shape == (4, 4)
    assert np.linalg.det(stacked) == pytest.approx(3.0, abs=1e-12)


# ---- regularity ---------------------------------------------------------

def test_standard_allocation_is_regular(linear_eco):
    verdict = check_regular(linear_eco, standard_allocation())
    assert verdict.regular
    assert verdict.reason is None
    assert verdict.sigma_min > 0.3
    assert min(verdict.interior_margins) == pytest.approx(9.0)


def test_identical_utilities_fail_rank():
    u = _linear_utility([1.0, 2.0], "u")
    eco = Economy(
        consumers=(Consumer(WIDE, u), Consumer(WIDE, u)),
        commodity_space=SpaceSpec.euclidean(2),
        aggregate_endowment=np.array([2.0, 2.0]),
        net_demand_cone=ConstraintSet.singleton_zero(2),
    )
    verdict = check_regular(eco, standard_allocation())
    assert not verdict.regular
    assert verdict.reason == "rank"


def test_near_boundary_bundle_fails_interiority(linear_eco):
    squeeze = 1e-9
    alloc = Allocation(np.array([[10.0 - squeeze, 1.0], [-8.0 + squeeze, 1.0]]))
    verdict = check_regular(linear_eco, alloc)
    assert not verdict.regular
    assert verdict.reason == "interiority"


def test_infeasible_allocation_rejected(linear_eco):
    with pytest.raises(PreconditionError, match="allocation infeasible"):
        check_regular(linear_eco, Allocation(np.array([[1.0, 1.0], [1.5, 1.0]])))


# ---- localized Pareto: linear benchmark ----------------------------------

def test_linear_pareto_allocation(linear_pareto):
    alloc, cert = linear_pareto
    assert np.allclose(alloc.bundles, [[0.75, 1.25], [1.25, 0.75]], atol=1e-7)
    x0 = standard_allocation().stacked
    assert abs(np.linalg.norm(cert.x_eps - x0) - 0.5) <= 1e-9


def test_linear_pareto_matches_direct_solve(linear_eco, linear_pareto):
    alloc, cert = linear_pareto
    loc = Localization(allocation_problem(linear_eco), standard_allocation().stacked, 0.5)
    direct = solve_localization(loc, [0.5, 0.5], SolveConfig(seed=0))
    assert np.array_equal(direct.x_eps, cert.x_eps)
    assert np.array_equal(direct.w_star, cert.w_star)
    assert np.array_equal(direct.y_star, cert.y_star)


def test_small_eps_moves_along_projected_gradient(linear_eco):
    eps = 1e-3
    alloc, _ = localized_pareto(linear_eco, standard_allocation(), eps, [0.5, 0.5])
    direction = np.array([[-0.5, 0.5], [0.5, -0.5]])
    assert np.allclose(alloc.bundles, standard_allocation().bundles + eps * direction, atol=1e-7)


def test_pareto_requires_regular_center():
    u = _linear_utility([1.0, 2.0], "u")
    eco = Economy(
        consumers=(Consumer(WIDE, u), Consumer(WIDE, u)),
        commodity_space=SpaceSpec.euclidean(2),
        aggregate_endowment=np.array([2.0, 2.0]),
        net_demand_cone=ConstraintSet.singleton_zero(2),
    )
    with pytest.raises(PreconditionError, match=r"not a regular allocation \(rank\)"):
        localized_pareto(eco, standard_allocation(), 0.5, [0.5, 0.5])


def test_pareto_requires_ball_inside_consumption_sets(linear_eco):
    with pytest.raises(PreconditionError, match="leaves the interior"):
        localized_pareto(linear_eco, standard_allocation(), 9.5, [0.5, 0.5])


def test_pareto_rejects_zero_weights(linear_eco):
    with pytest.raises(PreconditionError, match="nonzero"):
        localized_pareto(linear_eco, standard_allocation(), 0.5, [0.0, 0.0])


# ---- equilibrium synthesis ------------------------------------------------

def test_equilibrium_price_and_radii(linear_equilibrium):
    cert = linear_equilibrium
    assert np.allclose(cert.price, [1.5, 1.5], atol=1e-7)
    assert np.allclose(cert.radii, np.sqrt(0.125), atol=1e-7)
    assert np.array_equal(cert.endowment_distribution, cert.allocation.bundles)
    assert np.array_equal(cert.center.bundles, standard_allocation().bundles)


def test_equilibrium_residuals_small(linear_equilibrium):
    r = linear_equilibrium.residuals
    assert r.market_clearing <= 1e-8
    assert r.positivity <= 1e-8
    assert r.distribution_consistency == 0.0
    assert r.individual_optimality == 0.0


def test_equilibrium_accepts_value_equal_distribution(linear_eco, linear_pareto):
    cert = build_equilibrium(
        linear_eco, standard_allocation(), linear_pareto,
        distribution=standard_allocation().bundles,
    )
    assert np.array_equal(cert.endowment_distribution, standard_allocation().bundles)
    assert verify_equilibrium(linear_eco, cert, n_samples=2000).passed


def test_equilibrium_rejects_value_violating_distribution(linear_eco, linear_pareto):
    bad = np.array([[2.0, 1.0], [0.0, 1.0]])
    with pytest.raises(DomainError, match="value equations"):
        build_equilibrium(linear_eco, standard_allocation(), linear_pareto, distribution=bad)


def test_equilibrium_requires_nonzero_multiplier(linear_eco, linear_pareto):
    alloc, cert = linear_pareto
    flat = dataclasses.replace(cert, y_star=np.zeros(2))
    with pytest.raises(ZeroPriceError, match="no supporting price"):
        build_equilibrium(linear_eco, standard_allocation(), (alloc, flat))


def test_equilibrium_requires_positive_weight_component(linear_eco, linear_pareto):
    alloc, cert = linear_pareto
    flat = dataclasses.replace(cert, w_star=np.zeros(2))
    with pytest.raises(PreconditionError, match="no strictly positive component"):
        build_equilibrium(linear_eco, standard_allocation(), (alloc, flat))


def test_equilibrium_refuses_degenerate_radii(linear_eco, linear_pareto):
    _, cert = linear_pareto
    x0 = standard_allocation()
    stuck = dataclasses.replace(cert, x_eps=x0.stacked.copy())
    with pytest.raises(DegenerateRadiusError, match="radius"):
        build_equilibrium(linear_eco, x0, (Allocation(x0.bundles.copy()), stuck))


# ---- equilibrium verification ----------------------------------------------

def test_verify_equilibrium_passes(linear_eco, linear_equilibrium):
    report = verify_equilibrium(linear_eco, linear_equilibrium, n_samples=10000, seed=0)
    assert report.passed
    names = [c.name for c in report.checks]
    assert names == [
        "positivity", "market_clearing", "budget_exactness",
        "individual_optimality[0]", "individual_optimality[1]",
    ]
    for c in report.individual:
        assert c.value == 0.0
        assert c.witness is None
    assert min(report.budget_sample_counts) > 3000


def test_verify_flipped_price_fails_individually(linear_eco, linear_equilibrium):
    tampered = dataclasses.replace(linear_equilibrium, price=-linear_equilibrium.price)
    report = verify_equilibrium(linear_eco, tampered, n_samples=2000)
    assert not report.passed
    assert report.positivity.passed
    assert report.market_clearing.passed
    assert report.budget_exactness.passed
    assert all(not c.passed for c in report.individual)
    assert all(c.witness is not None for c in report.individual)


def test_verify_overspending_distribution_fails_budget(linear_eco, linear_equilibrium):
    rich = np.array([[1.2, 1.2], [0.8, 0.8]])
    tampered = dataclasses.replace(linear_equilibrium, endowment_distribution=rich)
    report = verify_equilibrium(linear_eco, tampered, n_samples=2000)
    assert not report.passed
    assert not report.budget_exactness.passed
    assert report.budget_exactness.value == pytest.approx(0.6, abs=1e-7)


def test_verify_is_invariant_to_price_scaling(linear_eco, linear_equilibrium):
    base = verify_equilibrium(linear_eco, linear_equilibrium, n_samples=2000)
    for c in (0.5, 2.0, 10.0):
        scaled = dataclasses.replace(linear_equilibrium, price=c * linear_equilibrium.price)
        report = verify_equilibrium(linear_eco, scaled, n_samples=2000)
        assert report.passed
        for got, ref in zip(report.individual, base.individual):
            assert got.value == pytest.approx(ref.value, abs=1e-12)


def test_verify_thread_determinism(linear_eco, linear_equilibrium):
    seq = verify_equilibrium(linear_eco, linear_equilibrium, n_samples=4000, threads=1)
    par = verify_equilibrium(linear_eco, linear_equilibrium, n_samples=4000, threads=4)
    assert [c.value for c in seq.checks] == [c.value for c in par.checks]
    assert seq.budget_sample_counts == par.budget_sample_counts


# ---- free-disposal benchmark ------------------------------------------------

def test_disposal_pareto_dumps_second_good(disposal_pareto):
    alloc, _ = disposal_pareto
    assert np.allclose(
        alloc.bundles,
        [[0.7965891210680065, 0.7108218297473343],
         [1.2034108798239530, 0.7108218297473343]],
        atol=1e-6,
    )
    assert alloc.bundles[:, 1].sum() < 2.0 - 0.5


def test_disposal_price_zeroes_slack_good(disposal_eco, disposal_equilibrium):
    cert = disposal_equilibrium
    assert cert.price[0] == pytest.approx(1.5, abs=1e-5)
    assert abs(cert.price[1]) <= 1e-6
    report = verify_equilibrium(disposal_eco, cert, n_samples=10000)
    assert report.passed


# ---- assumption probes -------------------------------------------------------

def test_nonsatiation_detected_in_full_box(linear_eco):
    verdicts = check_nonsatiation(linear_eco, standard_allocation(), 0.5, WIDE)
    assert len(verdicts) == 2
    for i, v in enumerate(verdicts):
        assert v.detected
        assert v.gain > 0.1
        assert v.n_in_subset == 2000
        u = linear_eco.consumers[i].utility
        assert evaluate(u, v.witness)[0] > evaluate(u, standard_allocation().bundles[i])[0]


def test_nonsatiation_respects_subset(linear_eco):
    half = Box(np.array([1.0, -10.0]), np.array([10.0, 10.0]))
    verdicts = check_nonsatiation(linear_eco, standard_allocation(), 0.5, half)
    for v in verdicts:
        assert 0 < v.n_in_subset < 2000
        assert v.detected
        assert v.witness[0] >= 1.0


def test_nonsatiation_empty_intersection(linear_eco):
    far = Box(np.array([5.0, 5.0]), np.array([6.0, 6.0]))
    with pytest.raises(EmptyIntersectionError, match="landed in the subset"):
        check_nonsatiation(linear_eco, standard_allocation(), 0.5, far)


def test_nonsatiation_rejects_bad_eps(linear_eco):
    with pytest.raises(DomainError, match="eps must be positive"):
        check_nonsatiation(linear_eco, standard_allocation(), 0.0, WIDE)


def test_cheaper_point_found_at_interior(linear_eco):
    price = np.array([1.5, 1.5])
    verdicts = check_a5(linear_eco, standard_allocation(), price, eps=0.1)
    for v in verdicts:
        assert v.detected
        budget = float(standard_allocation().bundles[v.consumer] @ price)
        assert float(v.witness @ price) <= budget - 1e-6
        assert v.undercut == pytest.approx(0.1 * np.linalg.norm(price), rel=0.05)


def test_cheaper_point_absent_under_poor_distribution(linear_eco):
    price = np.array([1.5, 1.5])
    poor = np.array([[0.0, 0.0], [2.0, 2.0]])
    verdicts = check_a5(linear_eco, standard_allocation(), price, distribution=poor, eps=0.1)
    assert not verdicts[0].detected
    assert verdicts[0].witness is None
    assert verdicts[0].undercut == 0.0
    assert verdicts[1].detected


def test_cheaper_point_rejects_zero_price(linear_eco):
    with pytest.raises(PreconditionError, match="price must be nonzero"):
        check_a5(linear_eco, standard_allocation(), np.zeros(2))


def test_cheaper_point_rejects_bad_distribution_shape(linear_eco):
    with pytest.raises(DomainError, match="shape mismatch"):
        check_a5(linear_eco, standard_allocation(), np.array([1.5, 1.5]),
                 distribution=np.array([1.0, 1.0]))
