"""Exchange economies with localized Pareto optima and equilibria.

An economy bundles n consumers (consumption set, utility) with an
aggregate endowment and a net-demand cone. Localized Pareto allocations
are computed by delegating to the vector-optimization solver on the
stacked utilities; equilibrium prices come from the recovered
multipliers, endowment distributions from the allocation itself, and
every claimed equilibrium property is re-verifiable by sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import Box, SmoothMap, evaluate, evaluate_many, jacobian, jacobian_many, surjectivity_check
from .catalog import affine_map
from .cones import ConeSpec, ConstraintSet
from .errors import (
    DegenerateRadiusError,
    DomainError,
    EmptyIntersectionError,
    PreconditionError,
    ZeroPriceError,
)
from .spaces import Ball, SpaceSpec
from .util import as_vector, ordered_map, sample_in_ball, seeded_streams
from .vopt import (
    FEASIBILITY_TOL,
    OPTIMALITY_TOL,
    CheckResult,
    Localization,
    SolutionCertificate,
    SolveConfig,
    VectorProblem,
    solve_localization,
)

__all__ = [
    "Consumer",
    "Economy",
    "Allocation",
    "RegularityVerdict",
    "EquilibriumResiduals",
    "EquilibriumCertificate",
    "EquilibriumReport",
    "NonsatiationVerdict",
    "CheaperPointVerdict",
    "feasibility_map",
    "utilities_map",
    "allocation_problem",
    "check_regular",
    "localized_pareto",
    "build_equilibrium",
    "verify_equilibrium",
    "check_nonsatiation",
    "check_a5",
]

_INTERIOR_MARGIN = 1e-8


def _region_interior_margin(region, x) -> float:
    """Distance from x to the complement of a box or ball region."""
    if isinstance(region, Box):
        return region.interior_margin(x)
    if isinstance(region, Ball):
        return region.radius - float(np.linalg.norm(np.asarray(x, dtype=float) - region.center))
    raise DomainError(f"unsupported region type {type(region).__name__}")


def _region_contains(region, x) -> bool:
    if isinstance(region, Box):
        return region.contains(x)
    return region.contains(x)


@dataclass(frozen=True, eq=False)
class Consumer:
    """One consumer: a box or ball consumption set and a scalar utility."""

    region: Box | Ball
    utility: SmoothMap

    def __post_init__(self):
        if self.utility.codomain_dim != 1:
            raise DomainError("utilities are scalar maps")
        dim = self.region.dim if isinstance(self.region, Box) else self.region.space.dim
        if self.utility.domain_dim != dim:
            raise DomainError("utility domain must match the consumption-set dimension")


@dataclass(frozen=True, eq=False)
class Economy:
    """n consumers over a common commodity space with a net-demand cone.

    The net-demand cone Theta constrains c(x) = sum_i x_i - omega; the
    singleton {0} is exact clearing, -R^m_+ is free disposal. Regularity
    of any allocation needs n*m >= n+m, enforced at construction.
    """

    consumers: tuple[Consumer, ...]
    commodity_space: SpaceSpec
    aggregate_endowment: np.ndarray
    net_demand_cone: ConstraintSet

    def __post_init__(self):
        object.__setattr__(self, "consumers", tuple(self.consumers))
        if not self.commodity_space.is_euclidean:
            raise DomainError("commodity spaces are euclidean")
        m = self.commodity_space.dim
        omega = as_vector(self.aggregate_endowment, m, name="aggregate_endowment")
        object.__setattr__(self, "aggregate_endowment", omega)
        n = len(self.consumers)
        if n == 0:
            raise DomainError("an economy needs at least one consumer")
        for i, cons in enumerate(self.consumers):
            if cons.utility.domain_dim != m:
                raise DomainError(f"consumer {i} utility dimension != {m}")
        if not self.net_demand_cone.is_cone:
            raise DomainError("net-demand constraint must be a cone (or the singleton zero)")
        if self.net_demand_cone.dim != m:
            raise DomainError("net-demand cone dimension mismatch")
        if n * m < n + m:
            raise DomainError(
                f"regularity needs n*m >= n+m; got n={n}, m={m} ({n * m} < {n + m})"
            )

    @property
    def n_consumers(self) -> int:
        return len(self.consumers)

    @property
    def n_commodities(self) -> int:
        return self.commodity_space.dim


@dataclass(frozen=True, eq=False)
class Allocation:
    """Bundles of all consumers, stacked row-wise (one row per consumer)."""

    bundles: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bundles, dtype=float)
        if b.ndim != 2:
            raise DomainError("bundles must be an (n_consumers, n_commodities) array")
        object.__setattr__(self, "bundles", b)

    @classmethod
    def from_stacked(cls, stacked, n: int, m: int) -> "Allocation":
        v = as_vector(stacked, n * m, name="stacked allocation")
        return cls(v.reshape(n, m))

    @property
    def stacked(self) -> np.ndarray:
        return self.bundles.reshape(-1)

    @property
    def n_consumers(self) -> int:
        return self.bundles.shape[0]


# ---- maps -------------------------------------------------------------

def feasibility_map(economy: Economy) -> SmoothMap:
    """The excess-demand map c(x) = sum_i x_i - omega on stacked bundles.

    Affine with the m x nm block-identity Jacobian [I | I | ... | I].
    """
    n, m = economy.n_consumers, economy.n_commodities
    A = np.tile(np.eye(m), (1, n))
    return affine_map(A, -economy.aggregate_endowment, label="excess-demand")


def utilities_map(economy: Economy) -> SmoothMap:
    """Stacked utilities R^{nm} -> R^n; consumer i reads only block i."""
    n, m = economy.n_consumers, economy.n_commodities
    utils = [c.utility for c in economy.consumers]

    def fn(x):
        return np.array([float(evaluate(u, x[i * m:(i + 1) * m])[0]) for i, u in enumerate(utils)])

    def jac(x):
        J = np.zeros((n, n * m))
        for i, u in enumerate(utils):
            J[i, i * m:(i + 1) * m] = jacobian(u, x[i * m:(i + 1) * m])[0]
        return J

    def fn_batch(X):
        cols = [evaluate_many(u, X[:, i * m:(i + 1) * m])[:, 0] for i, u in enumerate(utils)]
        return np.stack(cols, axis=1)

    def jac_batch(X):
        J = np.zeros((X.shape[0], n, n * m))
        for i, u in enumerate(utils):
            J[:, i, i * m:(i + 1) * m] = jacobian_many(u, X[:, i * m:(i + 1) * m])[:, 0, :]
        return J

    return SmoothMap(n * m, n, fn, jac, fn_batch=fn_batch, jac_batch=jac_batch, label="utilities")


def _product_region(economy: Economy) -> Box | None:
    regions = [c.region for c in economy.consumers]
    if all(isinstance(r, Box) for r in regions):
        return Box(
            np.concatenate([r.lo for r in regions]),
            np.concatenate([r.hi for r in regions]),
        )
    return None


def allocation_problem(economy: Economy) -> VectorProblem:
    """The social program Vmax_{R^n_+} u(x) s.t. c(x) in Theta as a VectorProblem."""
    return VectorProblem(
        h=utilities_map(economy),
        g=feasibility_map(economy),
        C=economy.net_demand_cone,
        K=ConeSpec.nonneg_orthant(economy.n_consumers),
        region=_product_region(economy),
    )


# ---- regularity --------------------------------------------------------

@dataclass(frozen=True)
class RegularityVerdict:
    """Interiority plus surjectivity of the stacked (utilities, clearing) derivative."""

    regular: bool
    sigma_min: float
    reason: str | None
    interior_margins: tuple[float, ...]


def check_regular(economy: Economy, allocation: Allocation, rank_tol: float | None = None) -> RegularityVerdict:
    """Decide regularity of a feasible allocation.

    Each bundle must be interior to its consumption set (margin > 1e-8)
    and the (n+m) x nm stacked Jacobian of (u_1, ..., u_n, c) must be
    surjective. A boundary bundle yields not-regular with reason
    "interiority", a rank deficiency reason "rank".
    """
    x = _validate_feasible(economy, allocation)
    margins = tuple(
        float(_region_interior_margin(c.region, allocation.bundles[i]))
        for i, c in enumerate(economy.consumers)
    )
    if min(margins) <= _INTERIOR_MARGIN:
        return RegularityVerdict(False, 0.0, "interiority", margins)

    stacked = _diagnostic_map(economy)
    est = surjectivity_check(stacked, x, rank_tol=rank_tol)
    if not est.surjective:
        return RegularityVerdict(False, float(est.smallest_singular_value), "rank", margins)
    return RegularityVerdict(True, float(est.sigma), None, margins)


def _diagnostic_map(economy: Economy) -> SmoothMap:
    u = utilities_map(economy)
    c = feasibility_map(economy)
    n, m = economy.n_consumers, economy.n_commodities

    def fn(x):
        return np.concatenate([evaluate(u, x), evaluate(c, x)])

    def jac(x):
        return np.vstack([jacobian(u, x), jacobian(c, x)])

    return SmoothMap(n * m, n + m, fn, jac, label="utilities+clearing")


def _validate_feasible(economy: Economy, allocation: Allocation, tol: float = FEASIBILITY_TOL) -> np.ndarray:
    if allocation.bundles.shape != (economy.n_consumers, economy.n_commodities):
        raise DomainError("allocation shape mismatch")
    for i, cons in enumerate(economy.consumers):
        if not _region_contains(cons.region, allocation.bundles[i]):
            raise PreconditionError(f"bundle {i} outside its consumption set")
    x = allocation.stacked
    c_val = evaluate(feasibility_map(economy), x)
    d = economy.net_demand_cone.distance(c_val)
    if d > tol:
        raise PreconditionError(f"allocation infeasible: dist(c(x), Theta) = {d:.3e}")
    return x


# ---- localized Pareto ----------------------------------------------------

def localized_pareto(
    economy: Economy, x0: Allocation, eps: float, weights, cfg: SolveConfig | None = None
) -> tuple[Allocation, SolutionCertificate]:
    """Solve the eps-localized Pareto program around a regular allocation.

    Delegates to the vector-optimization solver on the stacked problem;
    the returned allocation lies on the boundary of the product-space
    ball whenever the localization theorem applies.
    """
    verdict = check_regular(economy, x0)
    if not verdict.regular:
        raise PreconditionError(f"x0 is not a regular allocation ({verdict.reason})")
    n, m = economy.n_consumers, economy.n_commodities
    for i, cons in enumerate(economy.consumers):
        if _region_interior_margin(cons.region, x0.bundles[i]) < eps:
            raise PreconditionError(
                f"B(x0, eps) leaves the interior of consumption set {i}"
            )
    loc = Localization(allocation_problem(economy), x0.stacked, eps)
    cert = solve_localization(loc, weights, cfg)
    return Allocation.from_stacked(cert.x_eps, n, m), cert


# ---- equilibrium synthesis ----------------------------------------------

@dataclass(frozen=True)
class EquilibriumResiduals:
    positivity: float
    market_clearing: float
    distribution_consistency: float
    individual_optimality: float


@dataclass(frozen=True, eq=False)
class EquilibriumCertificate:
    """A candidate localized equilibrium.

    price is the rescaled constraint multiplier -y*/mu_j; the endowment
    distribution defaults to the allocation itself (value equality with
    any distribution the price supports); radii are the per-consumer
    localization radii eta_i = ||x_eps_i - x0_i||. center records the
    allocation the localization was built around, so the certificate can
    be audited without the original call context.
    """

    allocation: Allocation
    price: np.ndarray
    endowment_distribution: np.ndarray
    radii: np.ndarray
    scalarization_weights: np.ndarray
    residuals: EquilibriumResiduals
    center: Allocation


def build_equilibrium(
    economy: Economy,
    x0: Allocation,
    result: tuple[Allocation, SolutionCertificate],
    distribution=None,
) -> EquilibriumCertificate:
    """Assemble an equilibrium certificate from a localized Pareto solution.

    The price is p = -y*/mu_j with mu the recovered utility multipliers
    and j = argmax mu (ties to the lowest index). The default endowment
    distribution omega_i = x_eps_i satisfies the value equations exactly;
    a custom distribution is re-validated against them. Radii below
    1e-10 are refused (the localization theorem needs min eta > 0), as
    is a vanishing constraint multiplier (no price direction).
    """
    allocation, cert = result
    n, m = economy.n_consumers, economy.n_commodities
    x = allocation.stacked
    mu = as_vector(cert.w_star, n, name="scalarization weights")
    y = as_vector(cert.y_star, m, name="constraint multiplier")

    if float(np.linalg.norm(y)) <= 1e-10:
        raise ZeroPriceError(
            "constraint multiplier vanishes; no supporting price (check A5/A6)"
        )
    j = int(np.argmax(mu))
    if mu[j] <= 1e-12:
        raise PreconditionError("no strictly positive component in the utility multipliers")
    price = -y / mu[j]

    radii = np.linalg.norm(allocation.bundles - x0.bundles, axis=1)
    if float(np.min(radii)) <= 1e-10:
        raise DegenerateRadiusError(
            f"min consumer radius {float(np.min(radii)):.3e} <= 1e-10"
        )

    if distribution is None:
        endow = allocation.bundles.copy()
    else:
        endow = np.asarray(distribution, dtype=float)
        if endow.shape != (n, m):
            raise DomainError("endowment distribution shape mismatch")
        value_gaps = np.abs(endow @ price - allocation.bundles @ price)
        if float(np.max(value_gaps)) > 1e-8:
            raise DomainError(
                "endowment distribution violates the per-consumer value equations"
            )

    c_val = evaluate(feasibility_map(economy), x)
    dist_gap = float(np.max(np.abs(endow @ price - allocation.bundles @ price)))
    indiv = _individual_optimality_residual(
        economy, allocation, x0, price, endow, radii, n_samples=2000, seed=0, threads=1
    )
    residuals = EquilibriumResiduals(
        positivity=economy.net_demand_cone.normal_cone_residual(c_val, price),
        market_clearing=abs(float(price @ c_val)),
        distribution_consistency=dist_gap,
        individual_optimality=max(r[0] for r in indiv),
    )
    return EquilibriumCertificate(
        allocation=allocation,
        price=price,
        endowment_distribution=endow,
        radii=radii,
        scalarization_weights=mu.copy(),
        residuals=residuals,
        center=Allocation(x0.bundles.copy()),
    )


def _individual_optimality_residual(
    economy, allocation, x0, price, endow, radii, n_samples, seed, threads
):
    """Per-consumer (excess, witness, n_budget) from budget-ball sampling.

    Samples B(x0_i, eta_i), keeps the budget half <p, z> <= <p, omega_i>,
    and measures the best utility gain over u_i(x_eps_i).
    """
    streams = seeded_streams(seed, economy.n_consumers)

    def one(i):
        rng = streams[i]
        u = economy.consumers[i].utility
        pts = sample_in_ball(rng, x0.bundles[i], float(radii[i]), n_samples)
        in_budget = pts @ price <= float(endow[i] @ price)
        pts = pts[in_budget]
        if pts.shape[0] == 0:
            return 0.0, None, 0
        vals = evaluate_many(u, pts)[:, 0]
        ref = float(evaluate(u, allocation.bundles[i])[0])
        k = int(np.argmax(vals))
        excess = float(vals[k] - ref)
        if excess <= 0.0:
            return 0.0, None, pts.shape[0]
        return excess, pts[k].copy(), pts.shape[0]

    return ordered_map(one, range(economy.n_consumers), threads)


# ---- equilibrium verification ---------------------------------------------

@dataclass(frozen=True)
class EquilibriumReport:
    """Recomputation of the equilibrium conditions from a certificate alone."""

    positivity: CheckResult
    market_clearing: CheckResult
    budget_exactness: CheckResult
    individual: tuple[CheckResult, ...]
    budget_sample_counts: tuple[int, ...]

    @property
    def checks(self) -> tuple[CheckResult, ...]:
        return (self.positivity, self.market_clearing, self.budget_exactness) + self.individual

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def verify_equilibrium(
    economy: Economy,
    cert: EquilibriumCertificate,
    n_samples: int = 10000,
    seed: int = 0,
    tol: float = OPTIMALITY_TOL,
    threads: int = 1,
) -> EquilibriumReport:
    """Re-verify an equilibrium certificate by independent sampling.

    (i) the price supports the net-demand cone at c(x) (projection
    characterization); (ii) the market-clearing value gap |<p, c(x)>| is
    at most tol; (iii) per consumer, no sampled budget-feasible point of
    B(x0_i, eta_i) improves the utility by more than tol, and the bundle
    exhausts the budget <p, x_i> = <p, omega_i> within tol.
    """
    n, m = economy.n_consumers, economy.n_commodities
    allocation = cert.allocation
    price = as_vector(cert.price, m, name="price")
    x = allocation.stacked
    c_val = evaluate(feasibility_map(economy), x)

    pos_res = economy.net_demand_cone.normal_cone_residual(c_val, price)
    positivity = CheckResult("positivity", pos_res, pos_res <= tol)

    clear = abs(float(price @ c_val))
    market = CheckResult("market_clearing", clear, clear <= tol)

    budget_gaps = np.abs(allocation.bundles @ price - cert.endowment_distribution @ price)
    worst_gap = float(np.max(budget_gaps))
    budget = CheckResult("budget_exactness", worst_gap, worst_gap <= tol)

    indiv = _individual_optimality_residual(
        economy, allocation, cert.center, price, cert.endowment_distribution,
        cert.radii, n_samples, seed, threads,
    )
    individual = tuple(
        CheckResult(f"individual_optimality[{i}]", exc, exc <= tol, witness=wit)
        for i, (exc, wit, _) in enumerate(indiv)
    )
    counts = tuple(nb for _, _, nb in indiv)
    return EquilibriumReport(positivity, market, budget, individual, counts)


# ---- assumption probes -----------------------------------------------------

@dataclass(frozen=True)
class NonsatiationVerdict:
    """Witness of local non-satiation, or not-detected (never 'satiated')."""

    consumer: int
    detected: bool
    witness: np.ndarray | None
    gain: float
    n_in_subset: int


def check_nonsatiation(
    economy: Economy, allocation: Allocation, eps: float, subset,
    n_samples: int = 2000, seed: int = 0,
) -> tuple[NonsatiationVerdict, ...]:
    """Search B(x_i, eps) ∩ subset for points with strictly better utility.

    subset is a box or ball region. Raises EmptyIntersectionError when no
    sample of a consumer's ball lands in the subset; a verdict without a
    witness is "not-detected", never a satiation claim.
    """
    if not (eps > 0):
        raise DomainError("eps must be positive")
    streams = seeded_streams(seed, economy.n_consumers)
    out = []
    for i, cons in enumerate(economy.consumers):
        rng = streams[i]
        pts = sample_in_ball(rng, allocation.bundles[i], eps, n_samples)
        keep = np.array([_region_contains(subset, z) for z in pts])
        pts = pts[keep]
        if pts.shape[0] == 0:
            raise EmptyIntersectionError(
                f"no sample of B(x_{i}, eps) landed in the subset"
            )
        vals = evaluate_many(cons.utility, pts)[:, 0]
        ref = float(evaluate(cons.utility, allocation.bundles[i])[0])
        k = int(np.argmax(vals))
        gain = float(vals[k] - ref)
        tiny = 1e-12 * max(1.0, abs(ref))
        if gain > tiny:
            out.append(NonsatiationVerdict(i, True, pts[k].copy(), gain, pts.shape[0]))
        else:
            out.append(NonsatiationVerdict(i, False, None, 0.0, pts.shape[0]))
    return tuple(out)


@dataclass(frozen=True)
class CheaperPointVerdict:
    """Witness of a budget-undercutting point, or not-detected."""

    consumer: int
    detected: bool
    witness: np.ndarray | None
    undercut: float


def check_a5(
    economy: Economy,
    allocation: Allocation,
    price,
    distribution=None,
    eps: float = 0.1,
    n_samples: int = 2000,
    seed: int = 0,
    margin: float = 1e-6,
) -> tuple[CheaperPointVerdict, ...]:
    """Search B(x_i, eps) for z with <p, z> <= <p, omega_i> - margin.

    The qualification condition behind price normalization: each consumer
    can strictly undercut their budget near x_i. The anti-price direction
    x_i - eps * p/||p|| is probed first, then random samples.
    """
    m = economy.n_commodities
    price = as_vector(price, m, name="price")
    pn = float(np.linalg.norm(price))
    if pn < 1e-12:
        raise PreconditionError("price must be nonzero")
    if distribution is None:
        endow = allocation.bundles
    else:
        endow = np.asarray(distribution, dtype=float)
        if endow.shape != allocation.bundles.shape:
            raise DomainError("endowment distribution shape mismatch")
    streams = seeded_streams(seed, economy.n_consumers)
    out = []
    for i in range(economy.n_consumers):
        budget = float(endow[i] @ price)
        directed = allocation.bundles[i] - eps * price / pn
        pts = np.vstack([directed, sample_in_ball(streams[i], allocation.bundles[i], eps, n_samples)])
        vals = pts @ price
        k = int(np.argmin(vals))
        undercut = budget - float(vals[k])
        if undercut >= margin:
            out.append(CheaperPointVerdict(i, True, pts[k].copy(), undercut))
        else:
            out.append(CheaperPointVerdict(i, False, None, max(undercut, 0.0)))
    return tuple(out)
