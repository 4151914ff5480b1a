"""Ball-image convexity probes, cross-validated against the raster oracle."""

import numpy as np
import pytest

from locopt.benchmarks import shear_map
from locopt.catalog import affine_map, polar_map
from locopt.convexity import (
    boundary_preimage_check,
    estimate_convexity_radius,
    midpoint_convexity_residual,
)
from locopt.errors import DomainError, PreconditionError

from oracles import (
    polar_fx,
    polar_fy,
    raster_transition_radius,
    shear_fx,
    shear_fy,
)

# frozen from the estimators at n_pairs=2000, seed=0; the raster oracle
# re-brackets the transitions live further down
SHEAR_RADIUS = 0.5
POLAR_RADIUS = 0.652671

AFFINE_SQUARE = affine_map(np.array([[2.0, 1.0], [0.0, 1.0]]), np.array([3.0, -1.0]))
AFFINE_WIDE = affine_map(np.array([[1.0, 0.0, 2.0], [0.0, 1.0, -1.0]]))


@pytest.mark.parametrize("m", [AFFINE_SQUARE, AFFINE_WIDE], ids=["square", "wide"])
@pytest.mark.parametrize("eps", [0.1, 1.0, 10.0])
def test_linear_maps_pass_at_all_radii(m, eps):
    rep = midpoint_convexity_residual(m, np.zeros(m.domain_dim), eps, n_pairs=500, seed=0)
    assert rep.passed
    assert rep.worst_midpoint_residual <= 1e-9


def test_polar_fails_large_passes_small():
    x0 = np.zeros(2)
    big = midpoint_convexity_residual(polar_map(), x0, 2.5, n_pairs=2000, seed=0)
    assert not big.passed
    assert big.witness_pair is not None
    x1, x2 = big.witness_pair
    assert np.linalg.norm(x1) <= 2.5 + 1e-9 and np.linalg.norm(x2) <= 2.5 + 1e-9
    small = midpoint_convexity_residual(polar_map(), x0, 0.25, n_pairs=2000, seed=0)
    assert small.passed
    assert small.witness_pair is None


def test_shear_radius_matches_known_transition():
    est = estimate_convexity_radius(shear_map(), np.zeros(2), 2.0, n_pairs=2000, seed=0)
    assert not est.unbounded_in_window
    assert abs(est.radius - SHEAR_RADIUS) <= 0.02
    # bisection guarantee: some probed radius within factor 1.05 failed
    failed = [e for e, _, ok in est.history if not ok]
    assert min(failed) <= 1.05 * est.radius + 1e-12


def test_polar_radius_matches_frozen_value():
    est = estimate_convexity_radius(polar_map(), np.zeros(2), 2.5, n_pairs=2000, seed=0)
    assert abs(est.radius - POLAR_RADIUS) <= 0.02


def test_radius_agrees_with_raster_oracle():
    # independent oracle: rasterize the image and bisect on midpoint coverage
    lo, hi = raster_transition_radius(polar_fx, polar_fy, np.zeros(2), 0.5, 0.9)
    assert lo < hi <= lo * 1.03
    assert abs(POLAR_RADIUS - lo) / lo <= 0.10

    lo, hi = raster_transition_radius(shear_fx, shear_fy, np.zeros(2), 0.4, 0.7)
    assert abs(SHEAR_RADIUS - lo) / lo <= 0.10


def test_radius_unbounded_flag_for_linear():
    est = estimate_convexity_radius(AFFINE_SQUARE, np.zeros(2), 1.0, n_pairs=300, seed=0)
    assert est.unbounded_in_window
    assert est.radius == 1.0


def test_translation_invariance_of_reports():
    # adding a constant shifts images and midpoints alike
    base = shear_map()
    shifted = shear_map()
    from locopt.catalog import compose_maps

    lifted = compose_maps(affine_map(np.eye(2), np.array([5.0, -3.0])), shifted)
    r1 = midpoint_convexity_residual(base, np.zeros(2), 0.4, n_pairs=400, seed=9)
    r2 = midpoint_convexity_residual(lifted, np.zeros(2), 0.4, n_pairs=400, seed=9)
    assert abs(r1.worst_midpoint_residual - r2.worst_midpoint_residual) <= 1e-12


def test_report_deterministic_across_threads():
    r1 = midpoint_convexity_residual(polar_map(), np.zeros(2), 0.8, n_pairs=300, seed=2, threads=1)
    r4 = midpoint_convexity_residual(polar_map(), np.zeros(2), 0.8, n_pairs=300, seed=2, threads=4)
    assert r1.worst_midpoint_residual == r4.worst_midpoint_residual
    assert r1.passed == r4.passed


def test_midpoint_preconditions():
    tall = affine_map(np.array([[1.0], [1.0]]))
    with pytest.raises(PreconditionError, match="surjective"):
        midpoint_convexity_residual(tall, np.zeros(1), 1.0, n_pairs=50)
    from locopt.calculus import Box

    boxed = affine_map(np.eye(2), region=Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0])))
    with pytest.raises(PreconditionError, match="region"):
        midpoint_convexity_residual(boxed, np.zeros(2), 2.0, n_pairs=50)
    with pytest.raises(DomainError):
        midpoint_convexity_residual(AFFINE_SQUARE, np.zeros(2), -1.0)


@pytest.mark.parametrize(
    "m,eps",
    [
        (AFFINE_SQUARE, 1.0),
        (AFFINE_WIDE, 2.0),
        (shear_map(), 0.25),
        (polar_map(), 0.25),
    ],
    ids=["affine-square", "affine-wide", "shear-convex", "polar-convex"],
)
def test_boundary_preimage_convex_cases(m, eps):
    rep = boundary_preimage_check(m, np.zeros(m.domain_dim), eps, n_boundary_samples=100, seed=0)
    assert rep.passed
    assert rep.max_interior_gap <= rep.tol


def test_boundary_preimage_needs_surjectivity():
    tall = affine_map(np.array([[1.0], [1.0]]))
    with pytest.raises(PreconditionError):
        boundary_preimage_check(tall, np.zeros(1), 1.0)
