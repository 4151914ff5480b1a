"""Independent brute-force oracles used to freeze expected values.

These deliberately avoid the library's solver paths: maps are plain
vectorized formulas, convexity is decided by rasterizing the image on a
dense grid and testing midpoint coverage, and transitions are bracketed
by bisection on that rasterized verdict.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import binary_dilation

DOMAIN_GRID = 2001  # grid points per axis over the ball's bounding square


def raster_convexity_verdict(
    fx,
    fy,
    x0,
    eps: float,
    seed: int = 0,
    n_interior_pairs: int = 2000,
    n_boundary: int = 700,
    n_grid: int = DOMAIN_GRID,
):
    """Decide convexity of f(B(x0, eps)) for a 2-D map by rasterization.

    Rasterizes the image of a 2001^2 ball grid into a codomain bitmap
    whose pixel size at least matches the local image stretch (so the
    rasterized image has no spurious holes), dilates by one pixel, and
    requires every midpoint of sampled image-point pairs to land on an
    occupied pixel. Pairs mix random interior points with all pairs of a
    dense boundary sample; ball-image nonconvexity shows up at boundary
    midpoints first.
    """
    x0 = np.asarray(x0, dtype=float)
    t = np.linspace(-eps, eps, n_grid)
    X, Y = np.meshgrid(x0[0] + t, x0[1] + t, indexing="ij")
    mask = (X - x0[0]) ** 2 + (Y - x0[1]) ** 2 <= eps * eps
    U = fx(X, Y)
    V = fy(X, Y)

    # local stretch between neighboring grid images, to size pixels
    d0 = np.hypot(np.diff(U, axis=0), np.diff(V, axis=0))
    d1 = np.hypot(np.diff(U, axis=1), np.diff(V, axis=1))
    both0 = mask[:-1, :] & mask[1:, :]
    both1 = mask[:, :-1] & mask[:, 1:]
    stretch = float(max(d0[both0].max(initial=0.0), d1[both1].max(initial=0.0)))

    Um, Vm = U[mask], V[mask]
    umin, umax = float(Um.min()), float(Um.max())
    vmin, vmax = float(Vm.min()), float(Vm.max())
    span = max(umax - umin, vmax - vmin, 1e-12)
    pixel = max(span / 1500.0, 1.05 * stretch)

    nu = int(np.floor((umax - umin) / pixel)) + 2
    nv = int(np.floor((vmax - vmin) / pixel)) + 2
    bitmap = np.zeros((nu, nv), dtype=bool)
    iu = np.clip(((Um - umin) / pixel).astype(int), 0, nu - 1)
    iv = np.clip(((Vm - vmin) / pixel).astype(int), 0, nv - 1)
    bitmap[iu, iv] = True
    dilated = binary_dilation(bitmap, iterations=1)

    def covered(u, v):
        ju = np.clip(((u - umin) / pixel).astype(int), 0, nu - 1)
        jv = np.clip(((v - vmin) / pixel).astype(int), 0, nv - 1)
        inside_box = (u >= umin - pixel) & (u <= umax + pixel) & (v >= vmin - pixel) & (v <= vmax + pixel)
        return dilated[ju, jv] & inside_box

    rng = np.random.default_rng(seed)

    # interior pairs
    pts = []
    while len(pts) < 2 * n_interior_pairs:
        cand = x0 + eps * (2.0 * rng.random((4 * n_interior_pairs, 2)) - 1.0)
        keep = np.sum((cand - x0) ** 2, axis=1) <= eps * eps
        pts.extend(cand[keep])
    P = np.asarray(pts[: 2 * n_interior_pairs])
    u1, v1 = fx(P[0::2, 0], P[0::2, 1]), fy(P[0::2, 0], P[0::2, 1])
    u2, v2 = fx(P[1::2, 0], P[1::2, 1]), fy(P[1::2, 0], P[1::2, 1])
    ok_interior = covered(0.5 * (u1 + u2), 0.5 * (v1 + v2))

    # all pairs from a dense boundary sample
    ang = np.linspace(0.0, 2.0 * np.pi, n_boundary, endpoint=False)
    bx = x0[0] + eps * np.cos(ang)
    by = x0[1] + eps * np.sin(ang)
    bu, bv = fx(bx, by), fy(bx, by)
    iu_, ju_ = np.triu_indices(n_boundary, k=1)
    ok_boundary = covered(0.5 * (bu[iu_] + bu[ju_]), 0.5 * (bv[iu_] + bv[ju_]))

    n_bad = int(np.count_nonzero(~ok_interior)) + int(np.count_nonzero(~ok_boundary))
    return n_bad == 0, n_bad


def raster_transition_radius(fx, fy, x0, lo: float, hi: float, rel: float = 0.02, seed: int = 0):
    """Bracket the convexity transition radius by bisection on the raster verdict.

    Assumes convex at lo and nonconvex at hi; returns (lo, hi) with
    hi/lo <= 1 + rel.
    """
    ok_lo, _ = raster_convexity_verdict(fx, fy, x0, lo, seed=seed)
    ok_hi, _ = raster_convexity_verdict(fx, fy, x0, hi, seed=seed)
    if not ok_lo or ok_hi:
        raise AssertionError(f"bad bracket: convex(lo)={ok_lo}, convex(hi)={ok_hi}")
    while hi > lo * (1.0 + rel):
        mid = float(np.sqrt(lo * hi))
        ok, _ = raster_convexity_verdict(fx, fy, x0, mid, seed=seed)
        if ok:
            lo = mid
        else:
            hi = mid
    return lo, hi


# plain-formula versions of the 2-D fixture maps

def shear_fx(X, Y):
    return X


def shear_fy(X, Y):
    return Y + X * X


def polar_fx(X, Y):
    return (1.0 + X) * np.cos(Y)


def polar_fy(X, Y):
    return (1.0 + X) * np.sin(Y)
