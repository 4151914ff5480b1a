"""The built-in map catalog.

Problem files can only define maps from this closed set, each of which
ships an analytic Jacobian and a vectorized evaluator:

    affine       x -> A x + b
    quadratic    x -> x^T Q x + a^T x + c          (scalar)
    polynomial   componentwise multivariate polynomials, total degree <= 4
    logsum       x -> log(1 + exp(a^T x))          (scalar, C^infinity)
    polar        (r, t) -> ((1+r) cos t, (1+r) sin t)
    compose      x -> outer(inner(x))
    stack        x -> (f_1(x), ..., f_k(x))

Code (tests, fixtures) may of course construct SmoothMap directly; the
catalog is the ceiling for declarative inputs, not for the library.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .calculus import Box, SmoothMap
from .errors import DomainError, InputError
from .util import as_vector

__all__ = [
    "affine_map",
    "quadratic_map",
    "polynomial_map",
    "logsum_map",
    "polar_map",
    "compose_maps",
    "stack_maps",
    "map_from_spec",
]

MAX_POLY_DEGREE = 4


def affine_map(A, b=None, *, region: Box | None = None, label: str = "") -> SmoothMap:
    """x -> A x + b."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    b = np.zeros(m) if b is None else as_vector(b, m, name="b")

    return SmoothMap(
        n, m,
        fn=lambda x: A @ x + b,
        jac=lambda x: A,
        fn_batch=lambda X: X @ A.T + b,
        jac_batch=lambda X: np.broadcast_to(A, (X.shape[0], m, n)).copy(),
        region=region,
        label=label or f"affine({n}->{m})",
        definition={"type": "affine", "A": A.tolist(), "b": b.tolist()},
    )


def quadratic_map(Q, a=None, c: float = 0.0, *, region: Box | None = None, label: str = "") -> SmoothMap:
    """Scalar quadratic x -> x^T Q x + a^T x + c."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[0] != Q.shape[1]:
        raise DomainError(f"Q must be square, got {Q.shape}")
    n = Q.shape[0]
    a = np.zeros(n) if a is None else as_vector(a, n, name="a")
    S = Q + Q.T  # gradient of the form

    return SmoothMap(
        n, 1,
        fn=lambda x: np.array([x @ Q @ x + a @ x + c]),
        jac=lambda x: (S @ x + a)[None, :],
        fn_batch=lambda X: (np.einsum("ni,ij,nj->n", X, Q, X) + X @ a + c)[:, None],
        jac_batch=lambda X: (X @ S.T + a)[:, None, :],
        region=region,
        label=label or f"quadratic({n})",
        definition={"type": "quadratic", "Q": Q.tolist(), "a": a.tolist(), "c": float(c)},
    )


def _check_terms(n_inputs: int, components):
    cleaned = []
    for k, comp in enumerate(components):
        terms = []
        for coef, powers in comp:
            powers = tuple(int(p) for p in powers)
            if len(powers) != n_inputs:
                raise DomainError(
                    f"component {k}: powers tuple has length {len(powers)}, expected {n_inputs}"
                )
            if any(p < 0 for p in powers):
                raise DomainError(f"component {k}: negative exponent in {powers}")
            if sum(powers) > MAX_POLY_DEGREE:
                raise DomainError(
                    f"component {k}: total degree {sum(powers)} exceeds the cap {MAX_POLY_DEGREE}"
                )
            terms.append((float(coef), powers))
        cleaned.append(terms)
    return cleaned


def polynomial_map(n_inputs: int, components, *, region: Box | None = None, label: str = "") -> SmoothMap:
    """Componentwise multivariate polynomials of total degree <= 4.

    components[k] is a list of (coef, powers) monomials for output k,
    powers a length-n_inputs tuple of nonnegative exponents.
    """
    comps = _check_terms(n_inputs, components)
    m = len(comps)
    if m == 0:
        raise DomainError("polynomial map needs at least one component")

    def fn_batch(X):
        X = np.atleast_2d(X)
        out = np.zeros((X.shape[0], m))
        for k, terms in enumerate(comps):
            for coef, powers in terms:
                t = np.full(X.shape[0], coef)
                for i, p in enumerate(powers):
                    if p:
                        t = t * X[:, i] ** p
                out[:, k] += t
        return out

    def jac_batch(X):
        X = np.atleast_2d(X)
        J = np.zeros((X.shape[0], m, n_inputs))
        for k, terms in enumerate(comps):
            for coef, powers in terms:
                for j, pj in enumerate(powers):
                    if pj == 0:
                        continue
                    t = np.full(X.shape[0], coef * pj)
                    for i, p in enumerate(powers):
                        q = p - 1 if i == j else p
                        if q:
                            t = t * X[:, i] ** q
                    J[:, k, j] += t
        return J

    return SmoothMap(
        n_inputs, m,
        fn=lambda x: fn_batch(x[None, :])[0],
        jac=lambda x: jac_batch(x[None, :])[0],
        fn_batch=fn_batch,
        jac_batch=jac_batch,
        region=region,
        label=label or f"polynomial({n_inputs}->{m})",
        definition={
            "type": "polynomial",
            "inputs": n_inputs,
            "components": [[[c, list(p)] for c, p in terms] for terms in comps],
        },
    )


def logsum_map(a, *, region: Box | None = None, label: str = "") -> SmoothMap:
    """Scalar softplus of a linear functional: x -> log(1 + exp(a^T x))."""
    a = as_vector(a, name="a")
    n = a.shape[0]

    return SmoothMap(
        n, 1,
        fn=lambda x: np.array([np.logaddexp(0.0, a @ x)]),
        jac=lambda x: (expit(a @ x) * a)[None, :],
        fn_batch=lambda X: np.logaddexp(0.0, X @ a)[:, None],
        jac_batch=lambda X: expit(X @ a)[:, None, None] * a[None, None, :],
        region=region,
        label=label or f"logsum({n})",
        definition={"type": "logsum", "a": a.tolist()},
    )


def polar_map(*, region: Box | None = None, label: str = "") -> SmoothMap:
    """(r, t) -> ((1+r) cos t, (1+r) sin t), the polar-coordinates chart.

    Its derivative is surjective wherever 1 + r != 0, yet images of balls
    wrap around the origin and lose convexity at a computable radius,
    which makes it the canonical stress case for the convexity probes.
    """

    def fn_batch(X):
        r, t = X[:, 0], X[:, 1]
        return np.stack([(1.0 + r) * np.cos(t), (1.0 + r) * np.sin(t)], axis=1)

    def jac_batch(X):
        r, t = X[:, 0], X[:, 1]
        c, s = np.cos(t), np.sin(t)
        J = np.empty((X.shape[0], 2, 2))
        J[:, 0, 0] = c
        J[:, 0, 1] = -(1.0 + r) * s
        J[:, 1, 0] = s
        J[:, 1, 1] = (1.0 + r) * c
        return J

    return SmoothMap(
        2, 2,
        fn=lambda x: fn_batch(x[None, :])[0],
        jac=lambda x: jac_batch(x[None, :])[0],
        fn_batch=fn_batch,
        jac_batch=jac_batch,
        region=region,
        label=label or "polar",
        definition={"type": "polar"},
    )


def compose_maps(outer: SmoothMap, inner: SmoothMap, label: str = "") -> SmoothMap:
    """x -> outer(inner(x)), Jacobian by the chain rule.

    The outer map must be total (no region); a region on the outer map has
    no computable preimage description in this catalog.
    """
    if inner.codomain_dim != outer.domain_dim:
        raise DomainError(
            f"cannot compose: inner codomain {inner.codomain_dim} != outer domain {outer.domain_dim}"
        )
    if outer.region is not None:
        raise DomainError("compose requires the outer map to be region-free")

    both_batch = inner._fn_batch is not None and outer._fn_batch is not None
    both_jac = both_batch and inner._jac_batch is not None and outer._jac_batch is not None

    definition = None
    if outer.definition is not None and inner.definition is not None:
        definition = {"type": "compose", "outer": outer.definition, "inner": inner.definition}

    from .calculus import evaluate, jacobian  # local import, avoids cycle at module load

    return SmoothMap(
        inner.domain_dim, outer.codomain_dim,
        fn=lambda x: evaluate(outer, evaluate(inner, x)),
        jac=lambda x: jacobian(outer, evaluate(inner, x)) @ jacobian(inner, x),
        fn_batch=(lambda X: outer._fn_batch(inner._fn_batch(X))) if both_batch else None,
        jac_batch=(
            lambda X: np.einsum(
                "nij,njk->nik",
                outer._jac_batch(inner._fn_batch(X)),
                inner._jac_batch(X),
            )
        ) if both_jac else None,
        region=inner.region,
        label=label or f"({outer.label} . {inner.label})",
        definition=definition,
    )


def stack_maps(parts: list[SmoothMap], label: str = "") -> SmoothMap:
    """x -> (f_1(x), ..., f_k(x)) for maps sharing one domain."""
    if not parts:
        raise DomainError("stack needs at least one part")
    n = parts[0].domain_dim
    for p in parts:
        if p.domain_dim != n:
            raise DomainError("stacked maps must share the domain dimension")
    m = sum(p.codomain_dim for p in parts)

    regions = [p.region for p in parts if p.region is not None]
    region = regions[0] if regions else None
    for r in regions[1:]:
        if not (np.array_equal(r.lo, region.lo) and np.array_equal(r.hi, region.hi)):
            raise DomainError("stacked maps must share one region (or have none)")

    all_batch = all(p._fn_batch is not None for p in parts)
    all_jac = all(p._jac_batch is not None for p in parts)

    definition = None
    if all(p.definition is not None for p in parts):
        definition = {"type": "stack", "parts": [p.definition for p in parts]}

    from .calculus import evaluate, jacobian

    return SmoothMap(
        n, m,
        fn=lambda x: np.concatenate([evaluate(p, x) for p in parts]),
        jac=lambda x: np.vstack([jacobian(p, x) for p in parts]),
        fn_batch=(lambda X: np.concatenate([p._fn_batch(X).reshape(X.shape[0], p.codomain_dim) for p in parts], axis=1)) if all_batch else None,
        jac_batch=(lambda X: np.concatenate([p._jac_batch(X).reshape(X.shape[0], p.codomain_dim, n) for p in parts], axis=1)) if all_jac else None,
        region=region,
        label=label or f"stack({', '.join(p.label for p in parts)})",
        definition=definition,
    )


# ---- declarative form -------------------------------------------------

def _require(d: dict, key: str, where: str):
    if key not in d:
        raise InputError(f"{where}: missing key '{key}'")
    return d[key]


def map_from_spec(spec: dict, where: str = "map") -> SmoothMap:
    """Build a catalog map from its declarative (problem-file) form.

    Raises InputError naming the offending key path on any violation.
    """
    if not isinstance(spec, dict):
        raise InputError(f"{where}: expected a mapping with a 'type' key, got {type(spec).__name__}")
    kind = _require(spec, "type", where)
    try:
        if kind == "affine":
            return affine_map(_require(spec, "A", where), spec.get("b"))
        if kind == "quadratic":
            return quadratic_map(_require(spec, "Q", where), spec.get("a"), float(spec.get("c", 0.0)))
        if kind == "polynomial":
            n = int(_require(spec, "inputs", where))
            comps_raw = _require(spec, "components", where)
            comps = []
            for comp in comps_raw:
                terms = []
                for t in comp:
                    if isinstance(t, dict):
                        terms.append((t["coef"], t["powers"]))
                    else:
                        terms.append((t[0], t[1]))
                comps.append(terms)
            return polynomial_map(n, comps)
        if kind == "logsum":
            return logsum_map(_require(spec, "a", where))
        if kind == "polar":
            return polar_map()
        if kind == "compose":
            return compose_maps(
                map_from_spec(_require(spec, "outer", where), f"{where}.outer"),
                map_from_spec(_require(spec, "inner", where), f"{where}.inner"),
            )
        if kind == "stack":
            parts = _require(spec, "parts", where)
            return stack_maps([map_from_spec(p, f"{where}.parts[{i}]") for i, p in enumerate(parts)])
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from exc
    raise InputError(
        f"{where}: unknown map type '{kind}' "
        "(catalog: affine, quadratic, polynomial, logsum, polar, compose, stack)"
    )
