"""Problem and economy definition files.

Inputs are YAML documents over a closed map catalog. Three kinds:

    kind: map             a bare map with a center and radii (convexity runs)
    kind: vector_problem  h, g, constraint, order cone, x0, eps, weights
    kind: economy         consumers, endowment, net-demand cone, x0, eps, weights

Loaders return fully validated objects; anything wrong raises InputError,
with line/column when the YAML parser can locate the offense and the key
path otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from .calculus import Box, SmoothMap
from .catalog import map_from_spec
from .cones import ConeSpec, ConstraintSet
from .economy import Allocation, Consumer, Economy
from .errors import DomainError, InputError
from .spaces import Ball, SpaceSpec
from .vopt import VectorProblem

__all__ = ["RunSpec", "load_document", "load_run_spec", "load_problem"]


@dataclass(frozen=True, eq=False)
class RunSpec:
    """A parsed input file: the object under study plus run geometry."""

    kind: str
    path: str
    x0: np.ndarray
    eps_list: tuple[float, ...]
    weight_grid: tuple[np.ndarray, ...] | None
    space: SpaceSpec
    problem: VectorProblem | None = None
    economy: Economy | None = None
    map: SmoothMap | None = None


def load_document(path: str) -> dict:
    try:
        with open(path, "r") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}")
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        if mark is not None:
            raise InputError(
                str(exc.problem or exc), line=mark.line + 1, column=mark.column + 1
            ) from exc
        raise InputError(str(exc)) from exc
    except yaml.YAMLError as exc:
        raise InputError(str(exc)) from exc
    if not isinstance(doc, dict):
        raise InputError("top level must be a mapping with a 'kind' key")
    return doc


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise InputError(f"{where}: missing key '{key}'")
    return doc[key]


def _vector(node, where: str, dim: int | None = None) -> np.ndarray:
    try:
        v = np.asarray(node, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: not a numeric vector ({exc})")
    if v.ndim != 1:
        raise InputError(f"{where}: expected a flat list of numbers")
    if dim is not None and v.shape[0] != dim:
        raise InputError(f"{where}: expected length {dim}, got {v.shape[0]}")
    return v


def _matrix(node, where: str) -> np.ndarray:
    try:
        m = np.asarray(node, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: not a numeric matrix ({exc})")
    if m.ndim != 2:
        raise InputError(f"{where}: expected a list of equal-length rows")
    return m


def _parse_constraint(node, where: str) -> ConstraintSet:
    if not isinstance(node, dict):
        raise InputError(f"{where}: expected a mapping with a 'kind' key")
    kind = _require(node, "kind", where)
    try:
        if kind == "zero":
            return ConstraintSet.singleton_zero(int(_require(node, "dim", where)))
        if kind == "cone":
            gens = _matrix(_require(node, "generators", where), f"{where}.generators")
            return ConstraintSet.from_cone(ConeSpec.polyhedral(gens))
        if kind == "neg_orthant":
            dim = int(_require(node, "dim", where))
            return ConstraintSet.from_cone(ConeSpec.polyhedral(-np.eye(dim)))
        if kind == "box":
            return ConstraintSet.box(
                _vector(_require(node, "lo", where), f"{where}.lo"),
                _vector(_require(node, "hi", where), f"{where}.hi"),
            )
        if kind == "ball":
            center = _vector(_require(node, "center", where), f"{where}.center")
            return ConstraintSet.from_ball(
                Ball(center, float(_require(node, "radius", where)))
            )
    except DomainError as exc:
        raise InputError(f"{where}: {exc}") from exc
    raise InputError(f"{where}: unknown constraint kind '{kind}' (zero, cone, neg_orthant, box, ball)")


def _parse_order_cone(node, where: str) -> ConeSpec:
    if not isinstance(node, dict):
        raise InputError(f"{where}: expected a mapping with a 'kind' key")
    kind = _require(node, "kind", where)
    try:
        if kind == "nonneg_orthant":
            cone = ConeSpec.nonneg_orthant(int(_require(node, "dim", where)))
        elif kind == "polyhedral":
            cone = ConeSpec.polyhedral(
                _matrix(_require(node, "generators", where), f"{where}.generators")
            )
        else:
            raise InputError(f"{where}: unknown cone kind '{kind}' (nonneg_orthant, polyhedral)")
    except DomainError as exc:
        raise InputError(f"{where}: {exc}") from exc
    if not cone.is_pointed():
        raise InputError(f"{where}: K not pointed (contains a line)")
    return cone


def _parse_box_or_ball(node, where: str):
    if not isinstance(node, dict):
        raise InputError(f"{where}: expected a mapping ('box' or 'ball')")
    try:
        if "box" in node:
            spec = node["box"]
            return Box(
                _vector(_require(spec, "lo", where), f"{where}.lo"),
                _vector(_require(spec, "hi", where), f"{where}.hi"),
            )
        if "ball" in node:
            spec = node["ball"]
            center = _vector(_require(spec, "center", where), f"{where}.center")
            return Ball(center, float(_require(spec, "radius", where)))
    except DomainError as exc:
        if "empty interior" in str(exc) or "lo < hi" in str(exc):
            raise InputError(f"{where}: consumption set has empty interior ({exc})") from exc
        raise InputError(f"{where}: {exc}") from exc
    raise InputError(f"{where}: expected a 'box' or 'ball' entry")


def _parse_space(node, where: str, dim: int) -> SpaceSpec:
    if node is None:
        return SpaceSpec.euclidean(dim)
    if not isinstance(node, dict):
        raise InputError(f"{where}: expected a mapping like {{p: 1.5}}")
    try:
        if "p" in node:
            return SpaceSpec.p_norm(dim, float(node["p"]))
        return SpaceSpec.euclidean(dim)
    except DomainError as exc:
        raise InputError(f"{where}: {exc}") from exc


def _parse_eps(node, where: str) -> tuple[float, ...]:
    if node is None:
        raise InputError(f"{where}: missing")
    values = node if isinstance(node, (list, tuple)) else [node]
    out = []
    for i, v in enumerate(values):
        try:
            e = float(v)
        except (TypeError, ValueError):
            raise InputError(f"{where}[{i}]: not a number")
        if not (e > 0):
            raise InputError(f"{where}[{i}]: eps must be positive, got {e}")
        out.append(e)
    return tuple(out)


def _parse_weights(node, where: str, dim: int) -> tuple[np.ndarray, ...] | None:
    if node is None:
        return None
    if not isinstance(node, (list, tuple)) or not node:
        raise InputError(f"{where}: expected a nonempty list of weight vectors")
    return tuple(_vector(w, f"{where}[{i}]", dim) for i, w in enumerate(node))


def _parse_theta(node, where: str, m: int) -> ConstraintSet:
    try:
        if node == "zero":
            return ConstraintSet.singleton_zero(m)
        if node == "neg_orthant":
            return ConstraintSet.from_cone(ConeSpec.polyhedral(-np.eye(m)))
        if isinstance(node, dict) and "generators" in node:
            gens = _matrix(node["generators"], f"{where}.generators")
            return ConstraintSet.from_cone(ConeSpec.polyhedral(gens))
    except DomainError as exc:
        raise InputError(f"{where}: {exc}") from exc
    raise InputError(
        f"{where}: expected 'zero', 'neg_orthant', or {{generators: [...]}}"
    )


def _load_vector_problem(doc: dict, path: str) -> RunSpec:
    h = map_from_spec(_require(doc, "h", "h"), "h")
    g = map_from_spec(_require(doc, "g", "g"), "g")
    C = _parse_constraint(_require(doc, "constraint", "constraint"), "constraint")
    K = _parse_order_cone(_require(doc, "order_cone", "order_cone"), "order_cone")
    region = None
    if doc.get("region") is not None:
        spec = doc["region"]
        try:
            region = Box(
                _vector(_require(spec, "lo", "region"), "region.lo"),
                _vector(_require(spec, "hi", "region"), "region.hi"),
            )
        except DomainError as exc:
            raise InputError(f"region: {exc}") from exc
    try:
        problem = VectorProblem(h, g, C, K, region)
    except DomainError as exc:
        raise InputError(str(exc)) from exc
    x0 = _vector(_require(doc, "x0", "x0"), "x0", problem.dim)
    return RunSpec(
        kind="vector_problem",
        path=path,
        x0=x0,
        eps_list=_parse_eps(_require(doc, "eps", "eps"), "eps"),
        weight_grid=_parse_weights(doc.get("weights"), "weights", K.dim),
        space=_parse_space(doc.get("space"), "space", problem.dim),
        problem=problem,
    )


def _load_economy(doc: dict, path: str) -> RunSpec:
    m = int(_require(doc, "commodities", "commodities"))
    consumers_raw = _require(doc, "consumers", "consumers")
    if not isinstance(consumers_raw, list) or not consumers_raw:
        raise InputError("consumers: expected a nonempty list")
    consumers = []
    for i, node in enumerate(consumers_raw):
        where = f"consumers[{i}]"
        if not isinstance(node, dict):
            raise InputError(f"{where}: expected a mapping")
        utility = map_from_spec(_require(node, "utility", where), f"{where}.utility")
        region = _parse_box_or_ball(_require(node, "region", where), f"{where}.region")
        try:
            consumers.append(Consumer(region, utility))
        except DomainError as exc:
            raise InputError(f"{where}: {exc}") from exc
    endowment = _vector(_require(doc, "endowment", "endowment"), "endowment", m)
    theta = _parse_theta(_require(doc, "theta", "theta"), "theta", m)
    try:
        economy = Economy(tuple(consumers), SpaceSpec.euclidean(m), endowment, theta)
    except DomainError as exc:
        raise InputError(str(exc)) from exc

    n = economy.n_consumers
    x0_raw = _matrix(_require(doc, "x0", "x0"), "x0")
    if x0_raw.shape != (n, m):
        raise InputError(f"x0: expected {n} bundles of length {m}")
    return RunSpec(
        kind="economy",
        path=path,
        x0=Allocation(x0_raw).stacked,
        eps_list=_parse_eps(_require(doc, "eps", "eps"), "eps"),
        weight_grid=_parse_weights(doc.get("weights"), "weights", n),
        space=_parse_space(doc.get("space"), "space", n * m),
        economy=economy,
    )


def _load_map(doc: dict, path: str) -> RunSpec:
    m = map_from_spec(_require(doc, "map", "map"), "map")
    x0 = _vector(_require(doc, "x0", "x0"), "x0", m.domain_dim)
    return RunSpec(
        kind="map",
        path=path,
        x0=x0,
        eps_list=_parse_eps(_require(doc, "eps", "eps"), "eps"),
        weight_grid=None,
        space=_parse_space(doc.get("space"), "space", m.domain_dim),
        map=m,
    )


def load_run_spec(path: str) -> RunSpec:
    """Parse and validate any input file; the entry point the CLI uses."""
    doc = load_document(path)
    kind = _require(doc, "kind", "top level")
    if kind == "vector_problem":
        return _load_vector_problem(doc, path)
    if kind == "economy":
        return _load_economy(doc, path)
    if kind == "map":
        return _load_map(doc, path)
    raise InputError(f"top level: unknown kind '{kind}' (map, vector_problem, economy)")


def load_problem(path: str):
    """Load a problem file as its domain object (VectorProblem or Economy)."""
    spec = load_run_spec(path)
    if spec.kind == "vector_problem":
        return spec.problem
    if spec.kind == "economy":
        return spec.economy
    raise InputError(f"{path}: defines a bare map, not a problem")
