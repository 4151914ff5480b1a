"""Ordering cones and constraint sets.

Convex cones order the objective space; constraint sets receive g(x).
Both expose membership, projection, and normal-cone oracles that are
kept mutually consistent: v lies in the normal cone at y exactly when
projecting y + t v returns y for small t > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import nnls

from .errors import DimensionGuardError, DomainError
from .spaces import Ball
from .util import as_vector

__all__ = ["ConeSpec", "ConstraintSet", "NORMAL_CONE_STEP"]

# Step used in the projection characterization of normal-cone membership.
NORMAL_CONE_STEP = 1e-4

_DUAL_ENUM_MAX_DIM = 6
_DUAL_ENUM_MAX_GENS = 12


@dataclass(frozen=True, eq=False)
class ConeSpec:
    """A closed convex cone in R^dim.

    kind "nonneg_orthant": the cone of componentwise-nonnegative vectors.
    kind "polyhedral": finitely generated, cone{rows of generators}.
    """

    dim: int
    kind: str = "nonneg_orthant"
    generators: np.ndarray | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"cone dimension must be >= 1, got {self.dim}")
        if self.kind == "nonneg_orthant":
            if self.generators is not None:
                raise DomainError("nonneg_orthant takes no generator matrix")
        elif self.kind == "polyhedral":
            G = np.atleast_2d(np.asarray(self.generators, dtype=float))
            if G.shape[1] != self.dim:
                raise DomainError(f"generators have width {G.shape[1]}, cone dim is {self.dim}")
            norms = np.linalg.norm(G, axis=1)
            if np.any(norms < 1e-14):
                raise DomainError("zero generator in polyhedral cone")
            object.__setattr__(self, "generators", G / norms[:, None])
        else:
            raise DomainError(f"unknown cone kind '{self.kind}'")

    @classmethod
    def nonneg_orthant(cls, dim: int) -> "ConeSpec":
        return cls(dim=dim, kind="nonneg_orthant")

    @classmethod
    def polyhedral(cls, generators) -> "ConeSpec":
        G = np.atleast_2d(np.asarray(generators, dtype=float))
        return cls(dim=G.shape[1], kind="polyhedral", generators=G)

    def generator_matrix(self) -> np.ndarray:
        """Rows generate the cone (identity for the orthant)."""
        if self.kind == "nonneg_orthant":
            return np.eye(self.dim)
        return self.generators

    def contains(self, v, tol: float = 1e-9) -> bool:
        v = as_vector(v, self.dim)
        if self.kind == "nonneg_orthant":
            return bool(np.all(v >= -tol))
        # membership in a generated cone = zero residual of an NNLS fit
        scale = max(1.0, float(np.linalg.norm(v)))
        _, res = nnls(self.generators.T, v)
        return res <= tol * scale

    def project(self, v) -> np.ndarray:
        v = as_vector(v, self.dim)
        if self.kind == "nonneg_orthant":
            return np.maximum(v, 0.0)
        coeffs, _ = nnls(self.generators.T, v)
        return self.generators.T @ coeffs

    def dual_contains(self, w, tol: float = 1e-9) -> bool:
        """w in the dual cone: <w, k> >= 0 for every k in the cone."""
        w = as_vector(w, self.dim)
        scale = max(1.0, float(np.linalg.norm(w)))
        return bool(np.all(self.generator_matrix() @ w >= -tol * scale))

    def dual_violation(self, w) -> float:
        """max(0, -min_i <g_i, w>) over unit generators; 0 means w in the dual."""
        w = as_vector(w, self.dim)
        return float(max(0.0, -np.min(self.generator_matrix() @ w)))

    def is_pointed(self, tol: float = 1e-9) -> bool:
        """No generator's negative lies back in the cone."""
        for g in self.generator_matrix():
            if self.contains(-g, tol):
                return False
        return True

    def dual_spanning(self) -> tuple[np.ndarray, np.ndarray]:
        """Conic spanning set of the dual cone {w : G w >= 0}.

        Returns (rays, lineality_basis), both row-stacked; the dual is
        cone{rays} + span{lineality_basis}. Extreme rays are enumerated
        from (dim-1)-subsets of active generators, which is exact for
        polyhedral cones and cheap at desk scale.
        """
        G = self.generator_matrix()
        k, d = G.shape
        if self.kind == "nonneg_orthant":
            return np.eye(d), np.zeros((0, d))
        if d > _DUAL_ENUM_MAX_DIM or k > _DUAL_ENUM_MAX_GENS:
            raise DimensionGuardError(
                f"dual-ray enumeration guarded at dim <= {_DUAL_ENUM_MAX_DIM}, "
                f"generators <= {_DUAL_ENUM_MAX_GENS}; got dim={d}, k={k}"
            )
        lin = null_space(G)  # dual lineality: {w : G w = 0}
        lin_dim = lin.shape[1]
        rays: list[np.ndarray] = []

        def try_add(w: np.ndarray):
            nw = np.linalg.norm(w)
            if nw < 1e-12:
                return
            w = w / nw
            if np.min(G @ w) < -1e-10:
                return
            for r in rays:
                if np.linalg.norm(r - w) < 1e-9:
                    return
            rays.append(w)

        if d == 1:
            for s in (1.0, -1.0):
                try_add(np.array([s]))
        else:
            sizes = range(0, d)  # active sets of size up to d-1
            for size in sizes:
                for idx in combinations(range(k), size):
                    A = G[list(idx)] if idx else np.zeros((0, d))
                    ns = null_space(A) if A.size else np.eye(d)
                    # candidate extreme rays live one dimension above the lineality
                    if ns.shape[1] != lin_dim + 1:
                        continue
                    # direction within the null space, orthogonal to the lineality
                    if lin_dim:
                        proj = ns - lin @ (lin.T @ ns)
                        q, _ = np.linalg.qr(proj)
                        cand = q[:, :1]
                    else:
                        cand = ns
                    for col in cand.T:
                        try_add(col)
                        try_add(-col)
        return (np.array(rays).reshape(-1, d), lin.T)


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Target set C for the constraint g(x) in C.

    Kinds: "zero" (the singleton {0}), "cone" (a ConeSpec), "box"
    (componentwise bounds, lo <= hi, equal entries allowed), "ball".
    """

    dim: int
    kind: str
    cone: ConeSpec | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    ball: Ball | None = None

    # -- constructors --------------------------------------------------
    @classmethod
    def singleton_zero(cls, dim: int) -> "ConstraintSet":
        return cls(dim=dim, kind="zero")

    @classmethod
    def from_cone(cls, cone: ConeSpec) -> "ConstraintSet":
        return cls(dim=cone.dim, kind="cone", cone=cone)

    @classmethod
    def box(cls, lo, hi) -> "ConstraintSet":
        lo = as_vector(lo, name="lo")
        hi = as_vector(hi, dim=lo.shape[0], name="hi")
        if np.any(lo > hi):
            raise DomainError("box needs lo <= hi componentwise")
        return cls(dim=lo.shape[0], kind="box", lo=lo, hi=hi)

    @classmethod
    def from_ball(cls, ball: Ball) -> "ConstraintSet":
        if not ball.space.is_euclidean:
            raise DomainError("constraint balls must be euclidean")
        return cls(dim=ball.space.dim, kind="ball", ball=ball)

    def __post_init__(self):
        if self.kind not in ("zero", "cone", "box", "ball"):
            raise DomainError(f"unknown constraint-set kind '{self.kind}'")
        if self.kind == "cone" and self.cone.dim != self.dim:
            raise DomainError("cone dimension mismatch")

    @property
    def is_cone(self) -> bool:
        """True when complementarity <y*, g> = 0 is meaningful ({0} counts)."""
        return self.kind in ("zero", "cone")

    # -- the three oracles ----------------------------------------------
    def project(self, y) -> np.ndarray:
        y = as_vector(y, self.dim)
        if self.kind == "zero":
            return np.zeros(self.dim)
        if self.kind == "cone":
            return self.cone.project(y)
        if self.kind == "box":
            return np.clip(y, self.lo, self.hi)
        return self.ball.project(y)

    def distance(self, y) -> float:
        y = as_vector(y, self.dim)
        return float(np.linalg.norm(y - self.project(y)))

    def contains(self, y, tol: float = 1e-9) -> bool:
        return self.distance(y) <= tol

    def project_many(self, Y) -> np.ndarray:
        """Row-wise projection, vectorized for every kind except generic cones."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self.kind == "zero":
            return np.zeros_like(Y)
        if self.kind == "box":
            return np.clip(Y, self.lo, self.hi)
        if self.kind == "ball":
            D = Y - self.ball.center
            n = np.linalg.norm(D, axis=1)
            s = np.where(n > self.ball.radius, self.ball.radius / np.maximum(n, 1e-300), 1.0)
            return self.ball.center + D * s[:, None]
        if self.cone.kind == "nonneg_orthant":
            return np.maximum(Y, 0.0)
        return np.stack([self.cone.project(row) for row in Y])

    def distance_many(self, Y) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        return np.linalg.norm(Y - self.project_many(Y), axis=1)

    def normal_cone_residual(self, y, v, t: float = NORMAL_CONE_STEP) -> float:
        """Residual of the projection characterization of v in N_C(y).

        Returns ||P_C(y_hat + t v) - y_hat|| / (t ||v||) with y_hat = P_C(y);
        0 iff v is normal to C at y_hat. Evaluating at the projection makes
        the test robust to O(feasibility) noise in y.
        """
        y = as_vector(y, self.dim)
        v = as_vector(v, self.dim)
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return 0.0  # 0 is in every normal cone
        y_hat = self.project(y)
        return float(np.linalg.norm(self.project(y_hat + t * v) - y_hat) / (t * nv))

    def in_normal_cone(self, y, v, tol: float = 1e-8) -> bool:
        return self.normal_cone_residual(y, v) <= tol

    # -- structure used by multiplier recovery ---------------------------
    def normal_cone_spanning(self, y, active_tol: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
        """(rays, lineality_basis) spanning N_C(P_C(y)), row-stacked.

        Exact for every kind here: polars of polyhedral cones come from
        dual-ray enumeration restricted to the generators active at y.
        """
        y_hat = self.project(as_vector(y, self.dim))
        d = self.dim
        if self.kind == "zero":
            return np.zeros((0, d)), np.eye(d)
        if self.kind == "box":
            rays = []
            lin = []
            for j in range(d):
                span_j = self.hi[j] - self.lo[j]
                tol_j = active_tol * max(1.0, abs(self.hi[j]), abs(self.lo[j]))
                if span_j <= tol_j:
                    lin.append(np.eye(d)[j])  # pinned coordinate, normal is two-sided
                    continue
                if y_hat[j] >= self.hi[j] - tol_j:
                    rays.append(np.eye(d)[j])
                if y_hat[j] <= self.lo[j] + tol_j:
                    rays.append(-np.eye(d)[j])
            return (np.array(rays).reshape(-1, d), np.array(lin).reshape(-1, d))
        if self.kind == "ball":
            gap = self.ball.boundary_gap(y_hat)
            if gap > active_tol * max(1.0, self.ball.radius):
                return np.zeros((0, d)), np.zeros((0, d))
            ray = (y_hat - self.ball.center) / self.ball.radius
            return ray[None, :], np.zeros((0, d))
        # cone kind: N_C(y_hat) = {v in C^polar : <v, y_hat> = 0}; the polar's
        # extreme rays active at y_hat span it.
        polar_rays, polar_lin = self.cone.dual_spanning()
        polar_rays = -polar_rays  # polar = -dual
        scale = max(1.0, float(np.linalg.norm(y_hat)))
        keep = [r for r in polar_rays if abs(float(r @ y_hat)) <= active_tol * scale]
        if polar_lin.shape[0]:
            # lineality of the normal cone: dual lineality intersected with y_hat-perp
            A = np.vstack([self.cone.generator_matrix(), y_hat[None, :]])
            lin = null_space(A).T
        else:
            lin = np.zeros((0, d))
        return (np.array(keep).reshape(-1, d), lin)
