"""Localized vector optimization.

Problems Vmax_K h(x) s.t. g(x) in C are solved on small balls B(x0, eps)
by weighted scalarization: projected gradient ascent on an augmented
quadratic penalty for g(x) in C, with multipliers recovered from the
stationarity system and packaged as a certificate whose conditions
(boundary membership, dual-cone membership, normal-cone membership,
Lagrangian maximality, complementarity) are independently checkable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import nnls

from .calculus import Box, SmoothMap, evaluate, evaluate_many, jacobian, jacobian_many, surjectivity_check
from .cones import ConeSpec, ConstraintSet
from .errors import (
    DegenerateMultiplierError,
    DimensionGuardError,
    DomainError,
    InfeasibleResultError,
    NonConvergenceError,
    PreconditionError,
    SamplingStarvationError,
)
from .spaces import Ball
from .util import as_vector, operator_norm, ordered_map, sample_in_ball

__all__ = [
    "FEASIBILITY_TOL",
    "OPTIMALITY_TOL",
    "BOUNDARY_RTOL",
    "VectorProblem",
    "Localization",
    "SolveConfig",
    "CertificateResiduals",
    "SolutionCertificate",
    "OptimalityVerdict",
    "NonoptimalityVerdict",
    "CertificateReport",
    "SufficiencyReport",
    "SweepResult",
    "OracleResult",
    "image_map",
    "check_local_optimality",
    "solve_localization",
    "pareto_sweep",
    "recover_multipliers",
    "check_certificate",
    "check_nonoptimality_of_center",
    "check_sufficiency",
    "brute_force_oracle",
]

# Separated tolerances so feasibility violations never masquerade as
# optimality gains.
FEASIBILITY_TOL = 1e-8
OPTIMALITY_TOL = 1e-6
BOUNDARY_RTOL = 1e-5

_PENALTY_START = 10.0
_PENALTY_CAP = 1e8
_DOMINATION_SLACK = 1e-12  # cone-membership slack for "in K \ {0}" tests
_ORACLE_MAX_DIM = 4


@dataclass(frozen=True, eq=False)
class VectorProblem:
    """Vmax_K h(x) subject to g(x) in C, x in an open box region (or all of R^n)."""

    h: SmoothMap
    g: SmoothMap
    C: ConstraintSet
    K: ConeSpec
    region: Box | None = None

    def __post_init__(self):
        if self.h.domain_dim != self.g.domain_dim:
            raise DomainError("h and g must share the domain dimension")
        if self.C.dim != self.g.codomain_dim:
            raise DomainError("C lives in the codomain of g")
        if self.K.dim != self.h.codomain_dim:
            raise DomainError("K lives in the codomain of h")
        if self.region is not None and self.region.dim != self.h.domain_dim:
            raise DomainError("region dimension mismatch")

    @property
    def dim(self) -> int:
        return self.h.domain_dim


@dataclass(frozen=True, eq=False)
class Localization:
    """The problem restricted to the closed ball B(x0, eps).

    x0 must be feasible (g(x0) in C within the feasibility tolerance) and
    the ball must sit inside the problem's region.
    """

    problem: VectorProblem
    x0: np.ndarray
    eps: float

    def __post_init__(self):
        x0 = as_vector(self.x0, self.problem.dim, name="x0")
        object.__setattr__(self, "x0", x0)
        if not (self.eps > 0):
            raise DomainError(f"eps must be positive, got {self.eps}")
        dist = self.problem.C.distance(evaluate(self.problem.g, x0))
        if dist > FEASIBILITY_TOL:
            raise DomainError(f"x0 infeasible: dist(g(x0), C) = {dist:.3e}")
        if self.problem.region is not None and not self.problem.region.contains_ball(
            Ball(x0, self.eps)
        ):
            raise DomainError("B(x0, eps) must lie inside the problem region")

    @property
    def ball(self) -> Ball:
        return Ball(self.x0, self.eps)


@dataclass(frozen=True)
class SolveConfig:
    """Knobs of the scalarized solver.

    step_rule "adaptive" grows the step on accepted ascent moves and
    shrinks it on rejections; "fixed:<alpha>" pins the base step.
    max_iters is the per-penalty-stage inner budget.
    """

    multi_starts: int = 5
    max_iters: int = 500
    step_rule: str = "adaptive"
    seed: int = 0
    threads: int = 1


@dataclass(frozen=True)
class CertificateResiduals:
    boundary_gap: float
    dual_cone_violation: float
    normal_cone_violation: float
    lagrangian_violation: float
    complementarity_gap: float


@dataclass(frozen=True)
class SolutionCertificate:
    """One scalarized solution of a localization with its multipliers.

    (w_star, y_star) is normalized to unit joint norm; residuals are all
    nonnegative and are recomputed (not trusted) by check_certificate.
    """

    x_eps: np.ndarray
    w_star: np.ndarray
    y_star: np.ndarray
    scalarization_weights: np.ndarray
    residuals: CertificateResiduals
    scalar_value: float


# ---- problem building ------------------------------------------------

def image_map(problem: VectorProblem, xbar) -> SmoothMap:
    """The stacked map x -> (h(x) - h(xbar), g(x)).

    Its ball images are the sets whose convexity drives the main
    separation argument; its Jacobian is the stacked (Dh, Dg),
    independent of xbar.
    """
    xbar = as_vector(xbar, problem.dim, name="xbar")
    if problem.region is not None and not problem.region.contains(xbar):
        raise DomainError("xbar outside the problem region")
    h, g = problem.h, problem.g
    h_ref = evaluate(h, xbar)
    nh, ng = h.codomain_dim, g.codomain_dim

    def fn(x):
        return np.concatenate([evaluate(h, x) - h_ref, evaluate(g, x)])

    def jac(x):
        return np.vstack([jacobian(h, x), jacobian(g, x)])

    def fn_batch(X):
        return np.concatenate(
            [evaluate_many(h, X) - h_ref, evaluate_many(g, X)], axis=1
        )

    def jac_batch(X):
        return np.concatenate([jacobian_many(h, X), jacobian_many(g, X)], axis=1)

    return SmoothMap(
        problem.dim, nh + ng, fn, jac,
        fn_batch=fn_batch, jac_batch=jac_batch,
        region=problem.region, label="image",
    )


# ---- cone-order domination -------------------------------------------

def _dual_matrices(K: ConeSpec) -> tuple[np.ndarray, np.ndarray]:
    rays, lin = K.dual_spanning()
    return rays, lin


def _dominating_mask(
    K: ConeSpec, diffs: np.ndarray, margin: float,
    rays: np.ndarray | None = None, lin: np.ndarray | None = None,
) -> np.ndarray:
    """Rows of diffs lying in K \\ {0} with norm margin, via the bipolar test.

    k in K iff <r, k> >= 0 for the dual's rays and <l, k> = 0 for its
    lineality basis; the membership slack is fixed small (1e-12 scale) so
    near-tangent differences never count as dominating.
    """
    if rays is None or lin is None:
        rays, lin = _dual_matrices(K)
    norms = np.linalg.norm(diffs, axis=1)
    scale = _DOMINATION_SLACK * np.maximum(1.0, norms)
    ok = norms > margin
    if rays.shape[0]:
        ok &= np.all(diffs @ rays.T >= -scale[:, None], axis=1)
    if lin.shape[0]:
        ok &= np.all(np.abs(diffs @ lin.T) <= scale[:, None], axis=1)
    return ok


# ---- feasible sampling ------------------------------------------------

def _restore_feasibility(
    problem: VectorProblem, X: np.ndarray, x0: np.ndarray, eps: float,
    tol: float = FEASIBILITY_TOL, max_iters: int = 40,
) -> tuple[np.ndarray, np.ndarray]:
    """Pull sampled points onto {g in C} inside the ball by Gauss-Newton.

    Returns (points, feasible mask). Iterates x <- P_ball(x - Jg^+ (g - P_C(g))),
    the minimum-norm correction of the constraint residual.
    """
    g, C = problem.g, problem.C
    X = X.copy()
    for _ in range(max_iters):
        G = evaluate_many(g, X)
        R = G - C.project_many(G)
        viol = np.linalg.norm(R, axis=1)
        live = viol > tol
        if not np.any(live):
            break
        J = jacobian_many(g, X[live])
        step = np.einsum("nij,ni->nj", np.linalg.pinv(J), R[live])
        Xl = X[live] - step
        # stay in the ball
        D = Xl - x0
        nrm = np.linalg.norm(D, axis=1)
        shrink = np.where(nrm > eps, eps / np.maximum(nrm, 1e-300), 1.0)
        X[live] = x0 + D * shrink[:, None]
    feas = C.distance_many(evaluate_many(g, X)) <= tol
    if problem.region is not None:
        inside = np.array([problem.region.contains(x) for x in X])
        feas &= inside
    return X, feas


def _sample_feasible(
    loc: Localization, n_samples: int, seed: int, min_required: int = 100
) -> np.ndarray:
    rng = np.random.default_rng(seed)
    raw = sample_in_ball(rng, loc.x0, loc.eps, n_samples)
    pts, feas = _restore_feasibility(loc.problem, raw, loc.x0, loc.eps)
    pts = pts[feas]
    if pts.shape[0] < min_required:
        raise SamplingStarvationError(
            f"only {pts.shape[0]} of {n_samples} samples could be made feasible "
            f"(need {min_required})"
        )
    return pts


# ---- optimality checks ------------------------------------------------

@dataclass(frozen=True)
class OptimalityVerdict:
    """Sampling-based verdict: optimal_up_to_sampling or dominated(witness)."""

    dominated: bool
    witness: np.ndarray | None
    utility_gain: np.ndarray | None
    n_feasible: int

    @property
    def kind(self) -> str:
        return "dominated" if self.dominated else "optimal_up_to_sampling"


def check_local_optimality(
    loc: Localization, candidate, n_samples: int = 2000, seed: int = 0, tol: float = OPTIMALITY_TOL
) -> OptimalityVerdict:
    """Search sampled feasible ball points for one dominating the candidate.

    Dominating means h(x) - h(candidate) in K \\ {0} with norm margin
    > tol. Finding none is "optimal up to sampling", never a proof.
    """
    candidate = as_vector(candidate, loc.problem.dim, name="candidate")
    if loc.problem.C.distance(evaluate(loc.problem.g, candidate)) > max(tol, FEASIBILITY_TOL):
        raise PreconditionError("candidate is not feasible within tol")
    pts = _sample_feasible(loc, n_samples, seed)
    diffs = evaluate_many(loc.problem.h, pts) - evaluate(loc.problem.h, candidate)
    mask = _dominating_mask(loc.problem.K, diffs, margin=tol)
    if np.any(mask):
        i = int(np.argmax(mask))  # first dominating sample
        return OptimalityVerdict(True, pts[i].copy(), diffs[i].copy(), pts.shape[0])
    return OptimalityVerdict(False, None, None, pts.shape[0])


@dataclass(frozen=True)
class NonoptimalityVerdict:
    """Witness that the center is dominated, or inconclusive (never 'optimal')."""

    found: bool
    witness: np.ndarray | None
    utility_gain: np.ndarray | None
    n_feasible: int

    @property
    def kind(self) -> str:
        return "witness-found" if self.found else "inconclusive"


def check_nonoptimality_of_center(
    loc: Localization, n_samples: int = 2000, seed: int = 0, tol: float = OPTIMALITY_TOL
) -> NonoptimalityVerdict:
    """Look for a feasible point dominating x0.

    Regular centers (surjective image-map derivative) are never locally
    optimal, so a witness should exist at every radius; the precondition
    enforces regularity and failure to find one stays "inconclusive".
    """
    if not surjectivity_check(image_map(loc.problem, loc.x0), loc.x0).surjective:
        raise PreconditionError(
            "image-map derivative not surjective at x0; non-optimality is not implied"
        )
    pts = _sample_feasible(loc, n_samples, seed)
    diffs = evaluate_many(loc.problem.h, pts) - evaluate(loc.problem.h, loc.x0)
    mask = _dominating_mask(loc.problem.K, diffs, margin=tol)
    if np.any(mask):
        i = int(np.argmax(mask))
        return NonoptimalityVerdict(True, pts[i].copy(), diffs[i].copy(), pts.shape[0])
    return NonoptimalityVerdict(False, None, None, pts.shape[0])


# ---- the scalarized solver ---------------------------------------------

def _project_ball_rows(X: np.ndarray, x0: np.ndarray, eps: float) -> np.ndarray:
    D = X - x0
    n = np.linalg.norm(D, axis=1)
    s = np.where(n > eps, eps / np.maximum(n, 1e-300), 1.0)
    return x0 + D * s[:, None]


def _project_ball(x: np.ndarray, x0: np.ndarray, eps: float) -> np.ndarray:
    d = x - x0
    n = float(np.linalg.norm(d))
    if n <= eps:
        return x
    return x0 + d * (eps / n)


def _al_value_grad(loc, w, lam, rho, x):
    """Augmented objective <w,h> - rho/2 dist(g + lam/rho, C)^2 and its gradient."""
    p = loc.problem
    hx = evaluate(p.h, x)
    gx = evaluate(p.g, x)
    s = gx + lam / rho
    r = s - p.C.project(s)
    val = float(w @ hx) - 0.5 * rho * float(r @ r)
    grad = jacobian(p.h, x).T @ w - rho * (jacobian(p.g, x).T @ r)
    return val, grad, gx


def _ascend_stage(loc, w, lam, rho, x, alpha, max_iters, stage_tol, step_rule):
    """One penalty stage of projected gradient ascent; returns (x, alpha, stat)."""
    x0, eps = loc.x0, loc.eps
    fixed_alpha = None
    if step_rule.startswith("fixed:"):
        fixed_alpha = float(step_rule.split(":", 1)[1])
        alpha = fixed_alpha
    val, grad, _ = _al_value_grad(loc, w, lam, rho, x)
    stat = np.inf
    for _ in range(max_iters):
        stat = float(np.linalg.norm(_project_ball(x + grad, x0, eps) - x))
        if stat <= stage_tol:
            break
        trial = _project_ball(x + alpha * grad, x0, eps)
        tval, tgrad, _ = _al_value_grad(loc, w, lam, rho, trial)
        if tval > val + 1e-18:
            x, val, grad = trial, tval, tgrad
            if fixed_alpha is None:
                alpha = min(alpha * 1.6, 1e8)
        else:
            alpha *= 0.25
            if alpha < 1e-18:
                break
    return x, alpha, stat


def _solve_single_start(loc: Localization, w: np.ndarray, start: np.ndarray, cfg: SolveConfig):
    """Full augmented-penalty loop from one start.

    Quadratic penalty on dist(g, C) with multiplier shifts and a doubling
    schedule from 10 capped at 1e8; stages tighten their stationarity
    target as the penalty grows.
    """
    p = loc.problem
    x = _project_ball(start.astype(float).copy(), loc.x0, loc.eps)
    lam = np.zeros(p.g.codomain_dim)
    rho = _PENALTY_START
    alpha = 1.0
    best = None
    best_score = np.inf
    viol_prev = np.inf
    for outer in range(40):
        stage_tol = max(1e-9, 1e-4 / (4.0 ** outer))
        x, alpha, stat = _ascend_stage(
            loc, w, lam, rho, x, alpha, cfg.max_iters, stage_tol, cfg.step_rule
        )
        gx = evaluate(p.g, x)
        viol = p.C.distance(gx)
        score = max(viol / 1e-9, stat / 1e-7)
        if score < best_score:
            best, best_score = (x.copy(), viol, stat), score
        if viol <= 1e-9 and stat <= 1e-7:
            break
        if viol <= FEASIBILITY_TOL and viol > 0.5 * viol_prev and stat <= 1e-6:
            break  # violation floored at float resolution; more rho only drifts lam
        s = gx + lam / rho
        lam = rho * (s - p.C.project(s))  # shifted-penalty multiplier update
        rho = min(rho * 2.0, _PENALTY_CAP)
        viol_prev = viol
    x, viol, stat = best
    hx = evaluate(p.h, x)
    return {
        "x": x,
        "value": float(w @ hx),
        "violation": float(viol),
        "stationarity": float(stat),
    }


def _normalize_weights(K: ConeSpec, weights) -> np.ndarray:
    w = as_vector(weights, K.dim, name="weights")
    if not K.dual_contains(w, tol=1e-9):
        raise PreconditionError("weights must lie in the dual cone K+")
    s = float(np.sum(w))
    n = float(np.linalg.norm(w))
    if n < 1e-14:
        raise PreconditionError("weights must be nonzero")
    return w / s if s > 1e-14 else w / n


def solve_localization(
    loc: Localization, weights, cfg: SolveConfig | None = None
) -> SolutionCertificate:
    """Maximize <weights, h(x)> over B(x0, eps) ∩ {g in C}.

    Projected gradient ascent on an augmented quadratic penalty (doubling
    schedule), multi-start; the winner is the best feasible scalarized
    value with ties broken by lowest start index. Multipliers are
    recovered from stationarity and the certificate's residuals are
    populated.

    Raises InfeasibleResultError when the best final iterate still
    violates dist(g(x), C) > 1e-6 and NonConvergenceError when its
    projected-gradient stationarity exceeds 1e-5.
    """
    cfg = cfg or SolveConfig()
    w = _normalize_weights(loc.problem.K, weights)

    rng = np.random.default_rng(cfg.seed)
    starts = [loc.x0.copy()]
    if cfg.multi_starts > 1:
        starts.extend(sample_in_ball(rng, loc.x0, loc.eps, cfg.multi_starts - 1))

    runs = ordered_map(lambda s: _solve_single_start(loc, w, s, cfg), starts, cfg.threads)

    best = None
    for run in runs:  # deterministic reduction: value, then start order
        if run["violation"] > 1e-6:
            continue
        if best is None or run["value"] > best["value"] + 1e-12:
            best = run
    if best is None:
        worst = min(r["violation"] for r in runs)
        raise InfeasibleResultError(
            f"no start reached feasibility: best dist(g(x), C) = {worst:.3e}"
        )
    if best["stationarity"] > 1e-5:
        raise NonConvergenceError(
            f"stationarity {best['stationarity']:.3e} > 1e-5 at iteration budget"
        )

    x_eps = best["x"]
    gap = abs(float(np.linalg.norm(x_eps - loc.x0)) - loc.eps)
    if gap <= 1e-4 * max(1.0, loc.eps):
        w_star, y_star = recover_multipliers(loc, x_eps)
    else:
        # interior winner: ball multiplier vanishes; anchor w at the weights
        w_star, y_star = _recover_interior(loc, x_eps, w)
    return _certify(loc, x_eps, w_star, y_star, w, cfg.seed)


def _certify(loc, x_eps, w_star, y_star, weights, seed) -> SolutionCertificate:
    p = loc.problem
    gx = evaluate(p.g, x_eps)
    hx = evaluate(p.h, x_eps)
    lag_viol = _sampled_lagrangian_excess(loc, x_eps, w_star, y_star, 2000, seed + 7)[0]
    res = CertificateResiduals(
        boundary_gap=abs(float(np.linalg.norm(x_eps - loc.x0)) - loc.eps),
        dual_cone_violation=p.K.dual_violation(w_star),
        normal_cone_violation=p.C.normal_cone_residual(gx, -y_star),
        lagrangian_violation=lag_viol,
        complementarity_gap=abs(float(y_star @ gx)) if p.C.is_cone else 0.0,
    )
    return SolutionCertificate(
        x_eps=x_eps.copy(),
        w_star=w_star,
        y_star=y_star,
        scalarization_weights=np.asarray(weights, dtype=float).copy(),
        residuals=res,
        scalar_value=float(weights @ hx),
    )


def _sampled_lagrangian_excess(loc, x_ref, w_star, y_star, n_samples, seed):
    """max over sampled ball points of L(x) - L(x_ref), clipped at 0."""
    pts = sample_in_ball(np.random.default_rng(seed), loc.x0, loc.eps, n_samples)
    H = evaluate_many(loc.problem.h, pts)
    G = evaluate_many(loc.problem.g, pts)
    L = H @ w_star + G @ y_star
    L_ref = float(
        evaluate(loc.problem.h, x_ref) @ w_star + evaluate(loc.problem.g, x_ref) @ y_star
    )
    i = int(np.argmax(L))
    excess = float(L[i] - L_ref)
    if excess <= 0.0:
        return 0.0, None
    return excess, pts[i].copy()


# ---- multiplier recovery ----------------------------------------------

def _stationarity_columns(loc: Localization, x_eps: np.ndarray):
    """Columns of the stationarity system and the block split.

    w = sum alpha_i d_i (d_i spanning K+), y = -(sum beta_k m_k + N_lin gamma)
    with alpha, beta >= 0 and gamma free; returns (columns, mats) where
    mats reconstructs (w, y) from the solved coefficients.
    """
    p = loc.problem
    Jh = jacobian(p.h, x_eps)
    Jg = jacobian(p.g, x_eps)
    k_rays, k_lin = p.K.dual_spanning()
    gx = evaluate(p.g, x_eps)
    n_rays, n_lin = p.C.normal_cone_spanning(gx)

    cols = []
    w_parts = []
    y_parts = []
    for d in k_rays:
        cols.append(Jh.T @ d)
        w_parts.append(("ray", d))
    for l in k_lin:  # two-sided dual directions, split into +/-
        cols.append(Jh.T @ l)
        w_parts.append(("ray", l))
        cols.append(-(Jh.T @ l))
        w_parts.append(("ray", -l))
    n_w = len(w_parts)
    for mray in n_rays:
        cols.append(-(Jg.T @ mray))
        y_parts.append(("ray", mray))
    for l in n_lin:
        cols.append(-(Jg.T @ l))
        y_parts.append(("ray", l))
        cols.append(Jg.T @ l)
        y_parts.append(("ray", -l))
    A = np.stack(cols, axis=1) if cols else np.zeros((p.dim, 0))
    return A, w_parts, y_parts, n_w


def _assemble_multipliers(z, w_parts, y_parts, n_w, dim_w, dim_y):
    w = np.zeros(dim_w)
    for coeff, (_, d) in zip(z[:n_w], w_parts):
        w += coeff * d
    y = np.zeros(dim_y)
    for coeff, (_, mray) in zip(z[n_w:], y_parts):
        y -= coeff * mray
    return w, y


def recover_multipliers(loc: Localization, x_eps) -> tuple[np.ndarray, np.ndarray]:
    """Multipliers (w*, y*) of the separation at a boundary solution.

    Solves the stationarity system Dh(x)^T w + Dg(x)^T y = lambda n(x)
    (n the outward ball normal, lambda normalized to 1) as a nonnegative
    least-squares problem over the conic parametrizations of w in K+ and
    -y in N_C(g(x)), then rescales to ||(w, y)|| = 1.

    Raises DegenerateMultiplierError when the rescaled residual exceeds
    1e-5: numerically, no separating functional exists at this point.
    """
    p = loc.problem
    x_eps = as_vector(x_eps, p.dim, name="x_eps")
    r = float(np.linalg.norm(x_eps - loc.x0))
    if abs(r - loc.eps) > 1e-4 * max(1.0, loc.eps):
        raise PreconditionError("x_eps must lie on the boundary of B(x0, eps) within 1e-4")
    if p.C.distance(evaluate(p.g, x_eps)) > 1e-6:
        raise PreconditionError("x_eps must be feasible")

    n_vec = (x_eps - loc.x0) / r
    A, w_parts, y_parts, n_w = _stationarity_columns(loc, x_eps)
    if A.shape[1] == 0:
        raise DegenerateMultiplierError("empty multiplier parametrization")
    z, raw_res = nnls(A, n_vec)
    w, y = _assemble_multipliers(z, w_parts, y_parts, n_w, p.K.dim, p.C.dim)
    nu = float(np.sqrt(w @ w + y @ y))
    if nu < 1e-12:
        raise DegenerateMultiplierError(
            "least squares returned the zero functional (ball multiplier vanishes?)"
        )
    if raw_res / nu > 1e-5:
        raise DegenerateMultiplierError(
            f"stationarity residual {raw_res / nu:.3e} > 1e-5 after normalization"
        )
    return w / nu, y / nu


def _recover_interior(loc: Localization, x_eps: np.ndarray, weights: np.ndarray):
    """Multipliers for an interior solution: lambda = 0, w anchored at the weights."""
    p = loc.problem
    Jh = jacobian(p.h, x_eps)
    Jg = jacobian(p.g, x_eps)
    gx = evaluate(p.g, x_eps)
    n_rays, n_lin = p.C.normal_cone_spanning(gx)
    cols = []
    for mray in n_rays:
        cols.append(-(Jg.T @ mray))
    for l in n_lin:
        cols.append(-(Jg.T @ l))
        cols.append(Jg.T @ l)
    target = -(Jh.T @ weights)
    if cols:
        A = np.stack(cols, axis=1)
        z, _ = nnls(A, target)
        y = np.zeros(p.C.dim)
        parts = list(n_rays) + [v for l in n_lin for v in (l, -l)]
        for coeff, mray in zip(z, parts):
            y -= coeff * mray
    else:
        y = np.zeros(p.C.dim)
    w = weights.astype(float).copy()
    nu = float(np.sqrt(w @ w + y @ y))
    return w / nu, y / nu


# ---- certificate checking ----------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    passed: bool
    applicable: bool = True
    witness: np.ndarray | None = None


@dataclass(frozen=True)
class CertificateReport:
    """Recomputation of the five certificate conditions."""

    boundary: CheckResult
    dual_cone: CheckResult
    normal_cone: CheckResult
    lagrangian: CheckResult
    complementarity: CheckResult

    @property
    def checks(self) -> tuple[CheckResult, ...]:
        return (self.boundary, self.dual_cone, self.normal_cone, self.lagrangian, self.complementarity)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.applicable)


def check_certificate(
    loc: Localization,
    cert: SolutionCertificate,
    n_samples: int = 10000,
    seed: int = 0,
    tol: float = OPTIMALITY_TOL,
) -> CertificateReport:
    """Recompute the five certificate conditions from scratch.

    (a) x_eps on the sphere within tol*eps; (b) w* in K+ and nonvanishing;
    (c) -y* in N_C(g(x_eps)) by the projection characterization (evaluated
    at the projection of g onto C, so feasibility noise cannot fail it);
    (d) sampled Lagrangian maximality over the ball; (e) complementarity
    <y*, g(x_eps)> = 0 when C is a cone (not applicable otherwise).
    """
    p = loc.problem
    x = as_vector(cert.x_eps, p.dim)
    gx = evaluate(p.g, x)

    gap = abs(float(np.linalg.norm(x - loc.x0)) - loc.eps)
    a = CheckResult("boundary", gap, gap <= tol * loc.eps)

    dual_viol = p.K.dual_violation(cert.w_star)
    w_norm = float(np.linalg.norm(cert.w_star))
    b = CheckResult("dual_cone", dual_viol, dual_viol <= tol and w_norm >= 1e-6)

    nc_res = p.C.normal_cone_residual(gx, -cert.y_star)
    c = CheckResult("normal_cone", nc_res, nc_res <= tol)

    excess, witness = _sampled_lagrangian_excess(loc, x, cert.w_star, cert.y_star, n_samples, seed)
    d = CheckResult("lagrangian", excess, excess <= tol, witness=witness)

    if p.C.is_cone:
        comp = abs(float(cert.y_star @ gx))
        e = CheckResult("complementarity", comp, comp <= tol)
    else:
        e = CheckResult("complementarity", 0.0, True, applicable=False)

    return CertificateReport(a, b, c, d, e)


@dataclass(frozen=True)
class SufficiencyReport:
    """Sufficient-condition verdict with cross-validation.

    holds means: w* strictly positive on the cone's generators (the
    operational trivial-kernel surrogate), -y* normal to C at g(z), and
    no sampled Lagrangian excess. cross_validation carries the
    check_local_optimality verdict when the conditions hold.
    """

    holds: bool
    strict_positivity: CheckResult
    normal_cone: CheckResult
    lagrangian: CheckResult
    cross_validation: OptimalityVerdict | None


def check_sufficiency(
    loc: Localization,
    z,
    w_star,
    y_star,
    n_samples: int = 10000,
    seed: int = 0,
    tol: float = OPTIMALITY_TOL,
    strict_tol: float = 1e-8,
) -> SufficiencyReport:
    """Check the sufficient optimality conditions at z.

    Strict positivity of <w*, k> on the cone generators stands in for
    "only 0 in K is annihilated by w*" (for the nonnegative orthant this
    is componentwise w* >= strict_tol). When all conditions hold the
    verdict is cross-validated by sampling for dominating points.
    """
    p = loc.problem
    z = as_vector(z, p.dim, name="z")
    if np.linalg.norm(z - loc.x0) > loc.eps * (1 + 1e-9):
        raise PreconditionError("z must lie in B(x0, eps)")
    w_star = as_vector(w_star, p.K.dim, name="w_star")
    y_star = as_vector(y_star, p.C.dim, name="y_star")

    gens = p.K.generator_matrix()
    margins = gens @ w_star
    min_margin = float(np.min(margins))
    i_check = CheckResult("strict_positivity", min_margin, min_margin >= strict_tol)

    gz = evaluate(p.g, z)
    nc_res = p.C.normal_cone_residual(gz, -y_star)
    ii_check = CheckResult("normal_cone", nc_res, nc_res <= tol)

    excess, witness = _sampled_lagrangian_excess(loc, z, w_star, y_star, n_samples, seed)
    iii_check = CheckResult("lagrangian", excess, excess <= tol, witness=witness)

    holds = i_check.passed and ii_check.passed and iii_check.passed
    cross = None
    if holds:
        cross = check_local_optimality(loc, z, n_samples=n_samples, seed=seed, tol=tol)
    return SufficiencyReport(holds, i_check, ii_check, iii_check, cross)


# ---- sweeps -----------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    """Certificates of a weight sweep plus per-weight failure annotations."""

    certificates: tuple[SolutionCertificate, ...]
    annotations: tuple[str, ...]


def pareto_sweep(loc: Localization, weight_grid, cfg: SolveConfig | None = None) -> SweepResult:
    """solve_localization per weight; dedup, dominance-filter, sort by h.

    Per-weight solver errors become annotations instead of failing the
    sweep. Candidates closer than 1e-6 in X are deduplicated (first one
    kept); mutually dominated candidates are dropped defensively (a
    scalarized solution of a nonconvex problem can be dominated); the
    result is sorted lexicographically by h-values.
    """
    cfg = cfg or SolveConfig()
    certs: list[SolutionCertificate] = []
    annotations: list[str] = []
    for k, wt in enumerate(weight_grid):
        try:
            certs.append(solve_localization(loc, wt, cfg))
        except Exception as exc:  # per-weight isolation is the contract
            annotations.append(f"weight[{k}]={np.asarray(wt).tolist()}: {type(exc).__name__}: {exc}")

    kept: list[SolutionCertificate] = []
    for cert in certs:
        if any(np.linalg.norm(cert.x_eps - c.x_eps) < 1e-6 for c in kept):
            continue
        kept.append(cert)

    if kept:
        H = np.stack([evaluate(loc.problem.h, c.x_eps) for c in kept])
        rays, lin = _dual_matrices(loc.problem.K)
        keep_mask = np.ones(len(kept), dtype=bool)
        for i in range(len(kept)):
            diffs = H - H[i]
            diffs[i] = 0.0
            dom = _dominating_mask(loc.problem.K, diffs, margin=1e-8, rays=rays, lin=lin)
            if np.any(dom):
                keep_mask[i] = False
                annotations.append(
                    f"dropped dominated candidate at x={kept[i].x_eps.tolist()}"
                )
        kept = [c for c, k_ in zip(kept, keep_mask) if k_]
        H = H[keep_mask]
        if kept:
            order = np.lexsort(tuple(H[:, k] for k in reversed(range(H.shape[1]))))
            kept = [kept[i] for i in order]

    return SweepResult(tuple(kept), tuple(annotations))


# ---- brute-force oracle -------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    """Grid-enumeration ground truth for a localization.

    feasible_points carry every grid point that is in the ball, in the
    region, and feasible at grid resolution; points/h_values hold the
    nondominated subset under the cone order.
    """

    points: np.ndarray
    h_values: np.ndarray
    feasible_points: np.ndarray
    feasible_h: np.ndarray
    pitch: float
    grid_density: int


def brute_force_oracle(loc: Localization, grid_density: int = 101) -> OracleResult:
    """Enumerate a grid over B(x0, eps) and return the nondominated feasible set.

    Feasibility uses a grid-pitch-scaled tolerance (a grid has no reason
    to hit thin constraint sets exactly); domination is pairwise under
    the cone order. Guarded to domain dimension <= 4.
    """
    p = loc.problem
    n = p.dim
    if n > _ORACLE_MAX_DIM:
        raise DimensionGuardError(f"brute_force_oracle guarded to dim <= {_ORACLE_MAX_DIM}, got {n}")
    if grid_density < 2:
        raise DomainError("grid_density must be >= 2")

    x0, eps = loc.x0, loc.eps
    pitch = 2.0 * eps / (grid_density - 1)
    feas_tol = 0.75 * pitch * max(1.0, operator_norm(jacobian(p.g, x0)))

    axes = [np.linspace(x0_j - eps, x0_j + eps, grid_density) for x0_j in x0]
    feas_chunks = []
    h_chunks = []
    # slice along the first axis to bound memory
    rest = np.meshgrid(*axes[1:], indexing="ij") if n > 1 else []
    rest_flat = (
        np.stack([r.ravel() for r in rest], axis=1) if n > 1 else np.zeros((1, 0))
    )
    for v0 in axes[0]:
        pts = np.concatenate(
            [np.full((rest_flat.shape[0], 1), v0), rest_flat], axis=1
        )
        inball = np.linalg.norm(pts - x0, axis=1) <= eps * (1 + 1e-12)
        pts = pts[inball]
        if pts.shape[0] == 0:
            continue
        if p.region is not None:
            inside = np.all((pts > p.region.lo) & (pts < p.region.hi), axis=1)
            pts = pts[inside]
            if pts.shape[0] == 0:
                continue
        pts = pts[p.C.distance_many(evaluate_many(p.g, pts)) <= feas_tol]
        if pts.shape[0] == 0:
            continue
        feas_chunks.append(pts)
        h_chunks.append(evaluate_many(p.h, pts))

    if not feas_chunks:
        empty = np.zeros((0, n))
        empty_h = np.zeros((0, p.h.codomain_dim))
        return OracleResult(empty, empty_h, empty, empty_h, pitch, grid_density)

    F = np.concatenate(feas_chunks)
    H = np.concatenate(h_chunks)
    nd_mask = _nondominated_mask(p.K, H)
    return OracleResult(F[nd_mask], H[nd_mask], F, H, pitch, grid_density)


def _nondominated_mask(K: ConeSpec, H: np.ndarray, margin: float = 1e-12) -> np.ndarray:
    """Pairwise nondominance under the cone order, vectorized in chunks."""
    N = H.shape[0]
    if N == 0:
        return np.zeros(0, dtype=bool)
    if K.kind == "nonneg_orthant" and K.dim == 2:
        # skyline pre-filter: scanning by h0 descending, anything strictly
        # below the running max of h1 is dominated by an earlier point
        order = np.lexsort((-H[:, 1], -H[:, 0]))
        keep = np.ones(N, dtype=bool)
        best2 = -np.inf
        for idx in order:
            if H[idx, 1] < best2:
                keep[idx] = False
            else:
                best2 = H[idx, 1]
        # survivors can still be dominated through h0 ties; verify exactly
        for i in np.flatnonzero(keep):
            diffs = H - H[i]
            dom = _dominating_mask(K, diffs, margin=margin)
            dom[i] = False
            keep[i] = not bool(np.any(dom))
        return keep
    rays, lin = _dual_matrices(K)
    keep = np.ones(N, dtype=bool)
    chunk = max(1, int(2e6 // max(N, 1)))
    for lo in range(0, N, chunk):
        hi = min(lo + chunk, N)
        block = H[lo:hi]  # (B, m)
        diffs = H[None, :, :] - block[:, None, :]  # (B, N, m)
        norms = np.linalg.norm(diffs, axis=2)
        scale = _DOMINATION_SLACK * np.maximum(1.0, norms)
        ok = norms > margin
        if rays.shape[0]:
            ok &= np.all(
                np.einsum("bnm,rm->bnr", diffs, rays) >= -scale[:, :, None], axis=2
            )
        if lin.shape[0]:
            ok &= np.all(
                np.abs(np.einsum("bnm,rm->bnr", diffs, lin)) <= scale[:, :, None], axis=2
            )
        keep[lo:hi] = ~np.any(ok, axis=1)
    return keep
