"""Uniformly convex normed spaces at desk scale.

Finite-dimensional stand-ins for the spaces where ball images of smooth
surjections stay convex: euclidean spaces (exact modulus of convexity)
and p-norm spaces with 1 < p < 2 (quadratic lower bound on the modulus).
Everything downstream that actually optimizes runs on euclidean spaces;
the p-norm kind exists for modulus diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .util import as_vector

__all__ = [
    "SpaceSpec",
    "ProductSpaceSpec",
    "Ball",
    "modulus_of_convexity",
    "quadratic_growth_constant",
    "project_to_ball",
]


@dataclass(frozen=True)
class SpaceSpec:
    """A normed space R^dim with either the euclidean or a p-norm, 1 < p < 2.

    p is None for the euclidean kind. The label is free-form, used only
    in reports.
    """

    dim: int
    p: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"dim must be >= 1, got {self.dim}")
        if self.p is not None and not (1.0 < self.p < 2.0):
            raise DomainError(f"p must lie in (1, 2), got {self.p}")

    @classmethod
    def euclidean(cls, dim: int, label: str = "") -> "SpaceSpec":
        return cls(dim=dim, p=None, label=label)

    @classmethod
    def p_norm(cls, dim: int, p: float, label: str = "") -> "SpaceSpec":
        return cls(dim=dim, p=float(p), label=label)

    @property
    def is_euclidean(self) -> bool:
        return self.p is None

    def norm(self, x) -> float:
        x = as_vector(x, self.dim)
        if self.p is None:
            return float(np.linalg.norm(x))
        return float(np.sum(np.abs(x) ** self.p) ** (1.0 / self.p))

    def norm_tag(self) -> str:
        """Serialization tag: "euclidean" or "p:<value>"."""
        return "euclidean" if self.p is None else f"p:{self.p:g}"


@dataclass(frozen=True)
class ProductSpaceSpec:
    """Direct sum of `copies` copies of a base space under the 2-norm.

    norm((x_1, ..., x_n)) = sqrt(sum_i norm_base(x_i)^2), which preserves
    uniform convexity of the base. For a euclidean base this is just the
    euclidean space of dimension copies * base.dim.
    """

    base: SpaceSpec
    copies: int

    def __post_init__(self):
        if self.copies < 1:
            raise DomainError(f"copies must be >= 1, got {self.copies}")

    @property
    def dim(self) -> int:
        return self.base.dim * self.copies

    def norm(self, x) -> float:
        x = as_vector(x, self.dim)
        blocks = x.reshape(self.copies, self.base.dim)
        return float(math.sqrt(sum(self.base.norm(b) ** 2 for b in blocks)))

    def flatten(self) -> SpaceSpec:
        """The product as a flat SpaceSpec; euclidean base only."""
        if not self.base.is_euclidean:
            raise DomainError("only euclidean products flatten to a single SpaceSpec")
        return SpaceSpec.euclidean(self.dim, label=self.base.label)


def modulus_of_convexity(space: SpaceSpec, eps: float) -> float:
    """Modulus of convexity delta(eps) of the space, eps in [0, 2].

    Euclidean: the exact value 1 - sqrt(1 - eps^2/4). For the p-norm kind
    (1 < p < 2) this returns the quadratic lower bound (p-1)/8 * eps^2;
    the exact modulus has no closed form we rely on, and every guarantee
    downstream only needs a bound of the form kappa * eps^2.
    """
    if not (0.0 <= eps <= 2.0):
        raise DomainError(f"eps must lie in [0, 2], got {eps}")
    if space.p is None:
        return 1.0 - math.sqrt(max(0.0, 1.0 - eps * eps / 4.0))
    return (space.p - 1.0) / 8.0 * eps * eps


def quadratic_growth_constant(space: SpaceSpec) -> float:
    """kappa with delta(eps) >= kappa * eps^2 on [0, 2].

    1/8 for euclidean spaces, (p-1)/8 for the p-norm kind.
    """
    if space.p is None:
        return 1.0 / 8.0
    return (space.p - 1.0) / 8.0


@dataclass(frozen=True)
class Ball:
    """Closed ball in a SpaceSpec. Membership uses the space's own norm."""

    center: np.ndarray
    radius: float
    space: SpaceSpec = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        center = as_vector(self.center, name="center")
        object.__setattr__(self, "center", center)
        if self.space is None:
            object.__setattr__(self, "space", SpaceSpec.euclidean(center.shape[0]))
        if center.shape[0] != self.space.dim:
            raise DomainError(
                f"center has length {center.shape[0]}, space has dim {self.space.dim}"
            )
        if not (self.radius > 0.0):
            raise DomainError(f"radius must be positive, got {self.radius}")

    def contains(self, x, rtol: float = 1e-12) -> bool:
        return self.space.norm(as_vector(x, self.space.dim) - self.center) <= self.radius * (1.0 + rtol)

    def boundary_gap(self, x) -> float:
        """|norm(x - center) - radius|, the distance-to-sphere residual."""
        return abs(self.space.norm(as_vector(x, self.space.dim) - self.center) - self.radius)

    def project(self, point) -> np.ndarray:
        return project_to_ball(self, point)


def project_to_ball(ball: Ball, point) -> np.ndarray:
    """Nearest point of the ball in the space's norm.

    Radial shrinking is optimal in any norm: dist(x, B(c, r)) >= norm(x-c) - r
    by the triangle inequality, and the radial point attains it. Interior
    points are returned unchanged.
    """
    x = as_vector(point, ball.space.dim, name="point")
    d = x - ball.center
    nd = ball.space.norm(d)
    if nd <= ball.radius:
        return x.copy()
    return ball.center + d * (ball.radius / nd)
