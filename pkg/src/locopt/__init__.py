"""Local programming toolkit.

Three layers: convexity diagnostics for ball images of smooth maps
(convexity), localized vector optimization with checkable optimality
certificates (vopt), and localized Pareto/equilibrium computation for
exchange economies (economy). The cli module front-ends all of it on
declarative problem files.
"""

from .calculus import Box, SmoothMap, check_jacobian, surjectivity_check
from .cones import ConeSpec, ConstraintSet
from .convexity import (
    boundary_preimage_check,
    estimate_convexity_radius,
    midpoint_convexity_residual,
)
from .economy import (
    Allocation,
    Consumer,
    Economy,
    build_equilibrium,
    check_regular,
    localized_pareto,
    verify_equilibrium,
)
from .spaces import Ball, SpaceSpec, modulus_of_convexity, quadratic_growth_constant
from .vopt import (
    Localization,
    SolveConfig,
    VectorProblem,
    brute_force_oracle,
    check_certificate,
    check_local_optimality,
    check_nonoptimality_of_center,
    check_sufficiency,
    pareto_sweep,
    recover_multipliers,
    solve_localization,
)

__version__ = "0.1.0"
