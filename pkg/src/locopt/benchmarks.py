"""Canonical example problems shared by the tests and the demos.

Small enough to solve by hand, rich enough to exercise every code path:
two planar maps for the convexity probes, two three-variable vector
problems for the localization machinery, and two 2-consumer exchange
economies (exact clearing and free disposal).
"""

from __future__ import annotations

import numpy as np

from .calculus import Box
from .catalog import affine_map, polar_map, polynomial_map
from .cones import ConeSpec, ConstraintSet
from .economy import Allocation, Consumer, Economy
from .spaces import SpaceSpec
from .vopt import Localization, VectorProblem

__all__ = [
    "shear_map",
    "bent_plane_map",
    "plane_localization",
    "curved_localization",
    "linear_exchange",
    "quadratic_disposal_exchange",
    "standard_allocation",
]


def shear_map(a: float = 1.0):
    """(x, y) -> (x, y + a x^2): ball images stay convex up to radius 1/(2a)."""
    return polynomial_map(
        2,
        [[(1.0, (1, 0))], [(1.0, (0, 1)), (float(a), (2, 0))]],
        label=f"shear(a={a})",
    )


def bent_plane_map(a: float = 0.3):
    """R^3 -> R^2, (x1 + a x2^2, x2): a curved objective pair over a plane."""
    return polynomial_map(
        3,
        [[(1.0, (1, 0, 0)), (float(a), (0, 2, 0))], [(1.0, (0, 1, 0))]],
        label=f"bent-plane(a={a})",
    )


# polar_map lives in the catalog; re-export for fixture discoverability
polar = polar_map


def plane_localization(eps: float = 1.0) -> Localization:
    """Maximize (x1, x2) under x3 = 0 on B(0, eps); frontier is a quarter circle."""
    h = affine_map(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), label="first-two")
    g = affine_map(np.array([[0.0, 0.0, 1.0]]), label="third")
    problem = VectorProblem(
        h=h, g=g,
        C=ConstraintSet.singleton_zero(1),
        K=ConeSpec.nonneg_orthant(2),
    )
    return Localization(problem, np.zeros(3), eps)


def curved_localization(eps: float = 0.5, a: float = 0.3) -> Localization:
    """Same constraint as plane_localization but with a bowed first objective.

    The image map stays ball-convex for eps <= 1/(2a), so the default
    radius sits inside the regime where the localization theorem applies.
    """
    g = affine_map(np.array([[0.0, 0.0, 1.0]]), label="third")
    problem = VectorProblem(
        h=bent_plane_map(a), g=g,
        C=ConstraintSet.singleton_zero(1),
        K=ConeSpec.nonneg_orthant(2),
    )
    return Localization(problem, np.zeros(3), eps)


# ---- exchange economies -------------------------------------------------

_WIDE_BOX = Box(np.array([-10.0, -10.0]), np.array([10.0, 10.0]))


def linear_exchange() -> Economy:
    """Two consumers, two goods, opposite linear tastes, exact clearing.

    u1 = x + 2y, u2 = 2x + y, omega = (2, 2). At the symmetric allocation
    the stacked (u, c) Jacobian has determinant 3, so it is regular.
    """
    u1 = polynomial_map(2, [[(1.0, (1, 0)), (2.0, (0, 1))]], label="u1")
    u2 = polynomial_map(2, [[(2.0, (1, 0)), (1.0, (0, 1))]], label="u2")
    return Economy(
        consumers=(Consumer(_WIDE_BOX, u1), Consumer(_WIDE_BOX, u2)),
        commodity_space=SpaceSpec.euclidean(2),
        aggregate_endowment=np.array([2.0, 2.0]),
        net_demand_cone=ConstraintSet.singleton_zero(2),
    )


def quadratic_disposal_exchange() -> Economy:
    """Two goods where good 2 is a quadratic bad beyond zero, free disposal.

    u1 = x - y^2/2, u2 = 2x - y^2/2, Theta = -R^2_+. Both consumers dump
    good 2, so clearing holds with slack there and the supporting price
    has a zero second component.
    """
    u1 = polynomial_map(2, [[(1.0, (1, 0)), (-0.5, (0, 2))]], label="u1")
    u2 = polynomial_map(2, [[(2.0, (1, 0)), (-0.5, (0, 2))]], label="u2")
    return Economy(
        consumers=(Consumer(_WIDE_BOX, u1), Consumer(_WIDE_BOX, u2)),
        commodity_space=SpaceSpec.euclidean(2),
        aggregate_endowment=np.array([2.0, 2.0]),
        net_demand_cone=ConstraintSet.from_cone(ConeSpec.polyhedral(-np.eye(2))),
    )


def standard_allocation() -> Allocation:
    """The symmetric interior allocation ((1,1), (1,1)) both economies share."""
    return Allocation(np.array([[1.0, 1.0], [1.0, 1.0]]))
