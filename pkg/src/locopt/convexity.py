"""Ball-image convexity diagnostics.

A C^1,1 map with surjective derivative carries small balls to convex
sets. This module measures that: midpoint-inclusion residuals over
sampled pairs, bisection for the largest verified radius, and the
boundary-preimage property (preimages of image-boundary points lie on
the sphere).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import SmoothMap, evaluate_many, jacobian_many, surjectivity_check
from .errors import DomainError, PreconditionError, SolverStallError
from .spaces import Ball
from .util import ordered_map, sample_in_ball, sample_on_sphere

__all__ = [
    "ConvexityReport",
    "RadiusEstimate",
    "BoundaryPreimageReport",
    "midpoint_convexity_residual",
    "estimate_convexity_radius",
    "boundary_preimage_check",
]

_GN_MAX_ITERS = 80
_GN_STEP_FLOOR = 1e-12
_STALL_FRACTION = 0.01

# inner-solve statuses
_CONVERGED = 0   # hit the target within inner_tol
_STATIONARY = 1  # step collapsed at a local minimum
_BUDGET = 2      # iteration budget exhausted while still moving


@dataclass(frozen=True)
class ConvexityReport:
    """Worst midpoint-exclusion residual over sampled pairs in one ball."""

    eps: float
    worst_midpoint_residual: float
    n_pairs: int
    seed: int
    tol: float
    passed: bool
    witness_pair: tuple[np.ndarray, np.ndarray] | None
    stalled_fraction: float


@dataclass(frozen=True)
class RadiusEstimate:
    """Bisection output for the largest verified convexity radius.

    radius passed the midpoint test; 1.05 * radius failed, unless
    unbounded_in_window is set, in which case eps_max itself passed and
    no failure exists in the probed window. history records every probe
    as (eps, worst_residual, passed).
    """

    radius: float
    unbounded_in_window: bool
    n_pairs: int
    seed: int
    tol: float
    history: tuple[tuple[float, float, bool], ...]


@dataclass(frozen=True)
class BoundaryPreimageReport:
    """Support-probe check of f^-1(bd f(B)) being contained in bd B."""

    eps: float
    n_samples: int
    seed: int
    tol: float
    max_interior_gap: float
    passed: bool


def _project_rows(X: np.ndarray, x0: np.ndarray, eps: float) -> np.ndarray:
    """Radial projection of row vectors onto the euclidean ball B(x0, eps)."""
    D = X - x0
    n = np.linalg.norm(D, axis=1)
    scale = np.where(n > eps, eps / np.maximum(n, 1e-300), 1.0)
    return x0 + D * scale[:, None]


def _gauss_newton_to_targets(
    m: SmoothMap,
    starts: np.ndarray,
    targets: np.ndarray,
    x0: np.ndarray,
    eps: float,
    inner_tol: float,
    max_iters: int = _GN_MAX_ITERS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched projected Gauss-Newton for min ||f(x) - target|| over the ball.

    Damped normal-equation steps with per-point backtracking; every
    iterate stays in B(x0, eps). Returns (points, residual norms,
    statuses).
    """
    X = starts.copy()
    F = evaluate_many(m, X)
    phi = np.linalg.norm(F - targets, axis=1)
    N = X.shape[0]
    alpha = np.ones(N)
    status = np.full(N, _BUDGET, dtype=int)
    status[phi <= inner_tol] = _CONVERGED
    active = status == _BUDGET

    for _ in range(max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        J = jacobian_many(m, X[idx])
        r = targets[idx] - F[idx]
        JT = np.swapaxes(J, 1, 2)
        H = JT @ J
        # relative Levenberg damping keeps steps defined at singular Jacobians
        diag_mean = np.maximum(np.einsum("nii->n", H) / H.shape[1], 1e-30)
        H = H + (1e-10 * diag_mean)[:, None, None] * np.eye(H.shape[1])
        g = np.einsum("nij,nj->ni", JT, r)
        d = np.linalg.solve(H, g[:, :, None])[:, :, 0]

        trial = _project_rows(X[idx] + alpha[idx, None] * d, x0, eps)
        Ft = evaluate_many(m, trial)
        phit = np.linalg.norm(Ft - targets[idx], axis=1)
        improved = phit < phi[idx] - 1e-18

        gid = idx[improved]
        X[gid] = trial[improved]
        F[gid] = Ft[improved]
        phi[gid] = phit[improved]
        alpha[gid] = np.minimum(1.0, alpha[gid] * 2.0)
        bad = idx[~improved]
        alpha[bad] *= 0.25

        status[gid[phi[gid] <= inner_tol]] = _CONVERGED
        status[bad[alpha[bad] < _GN_STEP_FLOOR]] = _STATIONARY
        active = status == _BUDGET
    return X, phi, status


def _pair_samples(
    x0: np.ndarray, eps: float, n_pairs: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Half the pairs uniform in the ball, half on the sphere.

    Nonconvexity of a C^1,1 ball image is a boundary phenomenon (the
    sphere image bounds the image), so sphere pairs are the binding
    midpoints; interior pairs keep coverage honest.
    """
    rng = np.random.default_rng(seed)
    n_sphere = n_pairs // 2
    n_ball = n_pairs - n_sphere
    ball_pts = sample_in_ball(rng, x0, eps, 2 * n_ball)
    sph_pts = sample_on_sphere(rng, x0, eps, 2 * n_sphere)
    x1 = np.concatenate([ball_pts[0::2], sph_pts[0::2]])
    x2 = np.concatenate([ball_pts[1::2], sph_pts[1::2]])
    return x1, x2


def midpoint_convexity_residual(
    m: SmoothMap,
    x0,
    eps: float,
    n_pairs: int = 2000,
    seed: int = 0,
    inner_tol: float = 1e-9,
    tol: float = 1e-6,
    threads: int = 1,
) -> ConvexityReport:
    """Measure convexity of f(B(x0, eps)) by midpoint inclusion.

    For each sampled pair (x1, x2) the midpoint of images
    m = (f(x1) + f(x2)) / 2 must lie back in the image; the residual is
    the achieved minimum of ||f(x) - m|| over the ball (projected
    Gauss-Newton, five starts per pair including both endpoints). The
    report's worst residual decides pass/fail at `tol`.

    Raises SolverStallError when more than 1% of pairs exhaust the inner
    iteration budget without either reaching the target or converging to
    a local minimum.
    """
    x0 = np.asarray(x0, dtype=float)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if not surjectivity_check(m, x0).surjective:
        raise PreconditionError("derivative not surjective at x0; convexity principle void")
    if m.region is not None and not m.region.contains_ball(Ball(x0, eps)):
        raise PreconditionError("B(x0, eps) is not inside the map's region")

    x1, x2 = _pair_samples(x0, eps, n_pairs, seed)
    targets = 0.5 * (evaluate_many(m, x1) + evaluate_many(m, x2))

    # random fallback starts, fixed ahead of time so results are
    # independent of thread count
    rng_starts = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    rand_starts = sample_in_ball(rng_starts, x0, eps, 2 * n_pairs)

    # first pass: every pair from its midpoint start, batched
    mid_starts = _project_rows(0.5 * (x1 + x2), x0, eps)
    _, phi, status = _gauss_newton_to_targets(m, mid_starts, targets, x0, eps, inner_tol)

    residual = phi.copy()
    need_more = np.flatnonzero((phi > inner_tol))

    def _fallback(i: int) -> tuple[float, int]:
        starts = np.stack([x1[i], x2[i], rand_starts[2 * i], rand_starts[2 * i + 1]])
        tgt = np.broadcast_to(targets[i], (4, targets.shape[1]))
        _, p, s = _gauss_newton_to_targets(m, starts, tgt, x0, eps, inner_tol)
        return float(np.min(p)), int(np.min(s))

    results = ordered_map(_fallback, list(need_more), threads=threads)
    stalled = status == _BUDGET
    for i, (p, s) in zip(need_more, results):
        residual[i] = min(residual[i], p)
        # a pair counts as resolved if any attempt converged or went stationary
        stalled[i] = stalled[i] and s == _BUDGET

    stalled_fraction = float(np.mean(stalled & (residual > tol)))
    if stalled_fraction > _STALL_FRACTION:
        raise SolverStallError(
            f"{stalled_fraction:.1%} of midpoint inner solves exhausted the budget"
        )

    worst_idx = int(np.argmax(residual))  # argmax takes the lowest index on ties
    worst = float(residual[worst_idx])
    passed = worst <= tol
    return ConvexityReport(
        eps=float(eps),
        worst_midpoint_residual=worst,
        n_pairs=n_pairs,
        seed=seed,
        tol=tol,
        passed=passed,
        witness_pair=None if passed else (x1[worst_idx].copy(), x2[worst_idx].copy()),
        stalled_fraction=stalled_fraction,
    )


def estimate_convexity_radius(
    m: SmoothMap,
    x0,
    eps_max: float,
    tol: float = 1e-6,
    seed: int = 0,
    n_pairs: int = 2000,
    inner_tol: float = 1e-9,
    threads: int = 1,
) -> RadiusEstimate:
    """Largest radius in (0, eps_max] whose ball image verifies as convex.

    Bisection (geometric midpoints) on the midpoint-test predicate at
    fixed n_pairs. Guarantee on the non-flagged path: the returned
    radius passed and a radius within a factor 1.05 above it failed. If
    eps_max itself passes, it is returned flagged unbounded_in_window.
    """
    if eps_max <= 0:
        raise DomainError(f"eps_max must be positive, got {eps_max}")
    history: list[tuple[float, float, bool]] = []

    def probe(e: float) -> bool:
        rep = midpoint_convexity_residual(
            m, x0, e, n_pairs=n_pairs, seed=seed, inner_tol=inner_tol, tol=tol, threads=threads
        )
        history.append((e, rep.worst_midpoint_residual, rep.passed))
        return rep.passed

    if probe(eps_max):
        return RadiusEstimate(eps_max, True, n_pairs, seed, tol, tuple(history))

    hi = eps_max
    lo = 0.5 * eps_max
    while not probe(lo):
        hi = lo
        lo *= 0.5
        if lo < 1e-8 * eps_max:
            raise SolverStallError(
                "no passing radius found above 1e-8 * eps_max; surjectivity at x0 "
                "holds but the midpoint test failed at every probed scale"
            )
    while hi > 1.05 * lo:
        mid = float(np.sqrt(lo * hi))
        if probe(mid):
            lo = mid
        else:
            hi = mid
    return RadiusEstimate(lo, False, n_pairs, seed, tol, tuple(history))


def boundary_preimage_check(
    m: SmoothMap,
    x0,
    eps: float,
    n_boundary_samples: int = 100,
    seed: int = 0,
    tol: float = 1e-5,
) -> BoundaryPreimageReport:
    """Check that support maximizers over the ball sit on the sphere.

    For random unit directions d in the codomain, maximize <d, f(x)>
    over B(x0, eps) by projected gradient ascent; each maximizer x_hat
    probes a boundary point of the (convex) image and must satisfy
    ||x_hat - x0|| >= eps * (1 - tol). Assumes the midpoint test passes
    at this eps; on a nonconvex image the probes only see the hull.
    """
    x0 = np.asarray(x0, dtype=float)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if not surjectivity_check(m, x0).surjective:
        raise PreconditionError("derivative not surjective at x0")

    rng = np.random.default_rng(seed)
    D = rng.standard_normal((n_boundary_samples, m.codomain_dim))
    D /= np.linalg.norm(D, axis=1)[:, None]

    # first-order start: push x0 along the pulled-back direction
    J0T_D = jacobian_many(m, np.broadcast_to(x0, (1, x0.shape[0])))[0].T @ D.T  # (n, N)
    G0 = J0T_D.T
    g0n = np.linalg.norm(G0, axis=1)
    starts = x0 + eps * G0 / np.maximum(g0n, 1e-300)[:, None]
    starts[g0n < 1e-14] = x0  # degenerate pull-back, start at the center

    X = _project_rows(starts, x0, eps)
    val = np.einsum("nj,nj->n", evaluate_many(m, X), D)
    alpha = np.full(n_boundary_samples, float(eps))
    live = np.ones(n_boundary_samples, dtype=bool)
    for _ in range(300):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        J = jacobian_many(m, X[idx])
        g = np.einsum("nij,ni->nj", J, D[idx])
        trial = _project_rows(X[idx] + alpha[idx, None] * g, x0, eps)
        vt = np.einsum("nj,nj->n", evaluate_many(m, trial), D[idx])
        improved = vt > val[idx] + 1e-18
        gid = idx[improved]
        X[gid] = trial[improved]
        val[gid] = vt[improved]
        alpha[gid] = np.minimum(alpha[gid] * 2.0, 1e6 * eps)
        bad = idx[~improved]
        alpha[bad] *= 0.25
        live[bad[alpha[bad] < 1e-14 * eps]] = False

    gaps = 1.0 - np.linalg.norm(X - x0, axis=1) / eps
    max_gap = float(np.max(gaps))
    return BoundaryPreimageReport(
        eps=float(eps),
        n_samples=n_boundary_samples,
        seed=seed,
        tol=tol,
        max_interior_gap=max_gap,
        passed=max_gap <= tol,
    )
