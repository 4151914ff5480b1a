"""Smooth maps with analytic or finite-difference Jacobians, plus the
derivative diagnostics the rest of the toolkit runs on: Jacobian hygiene,
surjectivity (openness at a linear rate), and derivative-Lipschitz
estimation on balls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, PreconditionError
from .spaces import Ball
from .util import as_vector, operator_norm, sample_in_ball

__all__ = [
    "Box",
    "SmoothMap",
    "JacobianReport",
    "OpennessEstimate",
    "evaluate",
    "jacobian",
    "check_jacobian",
    "surjectivity_check",
    "estimate_derivative_lipschitz",
]

# Central-difference step scale: cube root of machine epsilon, the usual
# balance of truncation against roundoff for second-order differences.
FD_STEP_SCALE = float(np.finfo(float).eps ** (1.0 / 3.0))


@dataclass(frozen=True)
class Box:
    """Open axis-aligned box, the domain description for maps and problems."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lo, name="lo")
        hi = as_vector(self.hi, dim=lo.shape[0], name="hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not np.all(lo < hi):
            raise DomainError("box needs lo < hi componentwise")

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, x, margin: float = 0.0) -> bool:
        x = as_vector(x, self.dim)
        return bool(np.all(x > self.lo + margin) and np.all(x < self.hi - margin))

    def interior_margin(self, x) -> float:
        """Smallest distance from x to any face; negative outside."""
        x = as_vector(x, self.dim)
        return float(min(np.min(x - self.lo), np.min(self.hi - x)))

    def contains_ball(self, ball: Ball) -> bool:
        return self.interior_margin(ball.center) > ball.radius


class SmoothMap:
    """A C^1 (usually C^1,1) map f: R^n -> R^m on an open region.

    Parameters
    ----------
    domain_dim, codomain_dim : int
        n and m.
    fn : callable
        Single-point evaluator, (n,) -> (m,).
    jac : callable, optional
        Analytic Jacobian, (n,) -> (m, n). When absent, `jacobian` falls
        back to central differences.
    region : Box, optional
        Open domain of validity; None means all of R^n.
    fn_batch, jac_batch : callable, optional
        Vectorized evaluators over (N, n) stacks, used by samplers on hot
        paths. Must agree with fn/jac pointwise.
    label : str
        Free-form name for reports.
    """

    def __init__(
        self,
        domain_dim: int,
        codomain_dim: int,
        fn: Callable[[np.ndarray], np.ndarray],
        jac: Callable[[np.ndarray], np.ndarray] | None = None,
        *,
        region: Box | None = None,
        fn_batch: Callable[[np.ndarray], np.ndarray] | None = None,
        jac_batch: Callable[[np.ndarray], np.ndarray] | None = None,
        label: str = "",
        definition: dict | None = None,
    ):
        if domain_dim < 1 or codomain_dim < 1:
            raise DomainError("map dimensions must be >= 1")
        if region is not None and region.dim != domain_dim:
            raise DomainError("region dimension does not match domain_dim")
        self.domain_dim = int(domain_dim)
        self.codomain_dim = int(codomain_dim)
        self._fn = fn
        self._jac = jac
        self.region = region
        self._fn_batch = fn_batch
        self._jac_batch = jac_batch
        self.label = label
        # Catalog expression this map was built from, when there is one.
        self.definition = definition

    @property
    def has_analytic_jacobian(self) -> bool:
        return self._jac is not None

    def __repr__(self):
        name = self.label or "SmoothMap"
        return f"<{name}: R^{self.domain_dim} -> R^{self.codomain_dim}>"

    # Convenience instance forms; module-level operations below are the API.
    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)


def _check_in_region(m: SmoothMap, x: np.ndarray):
    if m.region is not None and not m.region.contains(x):
        raise DomainError(f"point {x} outside the open region of {m!r}")


def evaluate(m: SmoothMap, x) -> np.ndarray:
    """f(x) as a (codomain_dim,) vector; DomainError outside the region."""
    x = as_vector(x, m.domain_dim)
    _check_in_region(m, x)
    y = np.asarray(m._fn(x), dtype=float).reshape(-1)
    if y.shape[0] != m.codomain_dim:
        raise DomainError(
            f"evaluator returned length {y.shape[0]}, declared codomain_dim {m.codomain_dim}"
        )
    return y


def evaluate_many(m: SmoothMap, X: np.ndarray) -> np.ndarray:
    """f on an (N, n) stack, shape (N, m). Uses the batch evaluator if present."""
    X = np.asarray(X, dtype=float)
    if m._fn_batch is not None:
        Y = np.asarray(m._fn_batch(X), dtype=float)
        return Y.reshape(X.shape[0], m.codomain_dim)
    return np.stack([evaluate(m, x) for x in X])


def jacobian(m: SmoothMap, x) -> np.ndarray:
    """Df(x) as an (m, n) matrix.

    Analytic when the map carries one; otherwise central differences with
    per-coordinate step h_j = eps_mach^(1/3) * max(1, |x_j|).
    """
    x = as_vector(x, m.domain_dim)
    _check_in_region(m, x)
    if m._jac is not None:
        J = np.asarray(m._jac(x), dtype=float)
        return J.reshape(m.codomain_dim, m.domain_dim)
    return _fd_jacobian(m, x)


def jacobian_many(m: SmoothMap, X: np.ndarray) -> np.ndarray:
    """Df on an (N, n) stack, shape (N, m, n)."""
    X = np.asarray(X, dtype=float)
    if m._jac_batch is not None:
        J = np.asarray(m._jac_batch(X), dtype=float)
        return J.reshape(X.shape[0], m.codomain_dim, m.domain_dim)
    return np.stack([jacobian(m, x) for x in X])


def _fd_jacobian(m: SmoothMap, x: np.ndarray) -> np.ndarray:
    J = np.empty((m.codomain_dim, m.domain_dim))
    for j in range(m.domain_dim):
        h = FD_STEP_SCALE * max(1.0, abs(x[j]))
        e = np.zeros_like(x)
        e[j] = h
        J[:, j] = (evaluate(m, x + e) - evaluate(m, x - e)) / (2.0 * h)
    return J


@dataclass(frozen=True)
class JacobianReport:
    """Agreement of the analytic Jacobian with central differences at a point."""

    point: np.ndarray
    max_abs_error: float
    tol: float
    passed: bool


def check_jacobian(m: SmoothMap, x, tol: float = 1e-6) -> JacobianReport:
    """Compare the analytic Jacobian against central differences at x.

    Requires an analytic Jacobian; the finite-difference fallback would
    be compared against itself otherwise.
    """
    if not m.has_analytic_jacobian:
        raise PreconditionError("check_jacobian needs a map with an analytic Jacobian")
    x = as_vector(x, m.domain_dim)
    err = float(np.max(np.abs(jacobian(m, x) - _fd_jacobian(m, x))))
    return JacobianReport(point=x, max_abs_error=err, tol=tol, passed=err <= tol)


@dataclass(frozen=True)
class OpennessEstimate:
    """Constructive openness-at-a-linear-rate certificate at a point.

    A surjective derivative makes f open at linear rate sigma around the
    point (rate = smallest singular value of Df). The neighborhood sizes
    on which the rate is valid are not estimated here; sigma is the
    quantity every downstream guarantee consumes.
    """

    point: np.ndarray
    smallest_singular_value: float
    sigma: float
    surjective: bool
    rank_tol: float


def surjectivity_check(m: SmoothMap, x, rank_tol: float | None = None) -> OpennessEstimate:
    """Decide surjectivity of Df(x) from its singular values.

    rank_tol defaults to 1e-8 * sigma_max, a relative threshold so the
    verdict is invariant under rescaling the map. codomain_dim > domain_dim
    can never be surjective and short-circuits.
    """
    x = as_vector(x, m.domain_dim)
    if m.codomain_dim > m.domain_dim:
        return OpennessEstimate(
            point=x, smallest_singular_value=0.0, sigma=0.0, surjective=False,
            rank_tol=0.0 if rank_tol is None else rank_tol,
        )
    s = np.linalg.svd(jacobian(m, x), compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    smin = float(s[-1]) if s.size else 0.0
    tol = (1e-8 * smax) if rank_tol is None else float(rank_tol)
    surj = smin > tol
    return OpennessEstimate(
        point=x,
        smallest_singular_value=smin,
        sigma=smin if surj else 0.0,
        surjective=surj,
        rank_tol=tol,
    )


def estimate_derivative_lipschitz(
    m: SmoothMap, ball: Ball, n_samples: int = 1000, seed: int = 0
) -> float:
    """Sampled lower estimate of the Lipschitz constant of x -> Df(x) on a ball.

    Draws n_samples point pairs uniformly from the ball (one RNG stream,
    so estimates are nested by seed: more samples never decrease the
    value) and returns max ||Df(x1) - Df(x2)||_2 / ||x1 - x2||_2.
    """
    if n_samples < 2:
        raise DomainError("n_samples must be >= 2")
    rng = np.random.default_rng(seed)
    pts = sample_in_ball(rng, ball.center, ball.radius, 2 * n_samples)
    jacs = jacobian_many(m, pts)
    best = 0.0
    for i in range(n_samples):
        x1, x2 = pts[2 * i], pts[2 * i + 1]
        gap = float(np.linalg.norm(x1 - x2))
        if gap < 1e-12:
            continue
        best = max(best, operator_norm(jacs[2 * i] - jacs[2 * i + 1]) / gap)
    return best
