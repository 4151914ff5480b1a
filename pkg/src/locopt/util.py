"""Small shared numerics helpers: seeded sampling, norms, ordered parallel map."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Coerce to a float64 1-D array, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        v = v.reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {dim}")
    return v


def operator_norm(M: np.ndarray) -> float:
    """Spectral norm of a matrix (largest singular value)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def sample_in_ball(rng: np.random.Generator, center: np.ndarray, radius: float, n: int) -> np.ndarray:
    """Uniform samples from a euclidean ball, shape (n, dim).

    Direction from normalized Gaussians, radius from the u^(1/d) law.
    """
    center = np.asarray(center, dtype=float)
    d = center.shape[0]
    z = rng.standard_normal((n, d))
    norms = np.linalg.norm(z, axis=1)
    norms[norms == 0] = 1.0
    r = radius * rng.random(n) ** (1.0 / d)
    return center + z * (r / norms)[:, None]


def sample_on_sphere(rng: np.random.Generator, center: np.ndarray, radius: float, n: int) -> np.ndarray:
    """Uniform samples from a euclidean sphere, shape (n, dim)."""
    center = np.asarray(center, dtype=float)
    d = center.shape[0]
    z = rng.standard_normal((n, d))
    norms = np.linalg.norm(z, axis=1)
    norms[norms == 0] = 1.0
    return center + z * (radius / norms)[:, None]


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> list[R]:
    """Apply fn to items, preserving order.

    With threads > 1 the work runs on a thread pool; the reduction is by
    index, so results are identical to the sequential path bit for bit.
    """
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def seeded_streams(seed: int, n: int) -> list[np.random.Generator]:
    """n independent deterministic generators derived from one seed."""
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n)]
