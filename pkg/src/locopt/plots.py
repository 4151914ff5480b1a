"""Figure rendering for CLI reports.

All figures are rendered headlessly to PNG next to the report. The
Software metadata chunk is stripped so repeated runs produce identical
bytes on one matplotlib version.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_front_figure", "render_radius_figure", "render_bundle_figure"]

_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def render_front_figure(path: str, h_values: np.ndarray, weights: np.ndarray | None = None) -> str:
    """Scatter of attained objective values along a weight sweep."""
    h_values = np.atleast_2d(np.asarray(h_values, dtype=float))
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(h_values[:, 0], h_values[:, 1], "o-", ms=4, lw=0.8)
    if weights is not None and len(weights) == len(h_values):
        for hv, w in zip(h_values, np.asarray(weights)):
            ax.annotate(f"{w[0]:.2f}", hv, fontsize=6, xytext=(2, 2), textcoords="offset points")
    ax.set_xlabel("objective 1")
    ax.set_ylabel("objective 2")
    ax.set_title("attained frontier")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def render_radius_figure(path: str, history, radius: float, tol: float) -> str:
    """Residual-versus-radius trace of a convexity radius search."""
    hist = sorted((float(e), float(r)) for e, r, _ in history)
    eps = np.array([h[0] for h in hist])
    res = np.maximum([h[1] for h in hist], 1e-18)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(eps, res, "o-", ms=4, lw=0.8)
    ax.axhline(tol, color="tab:red", lw=0.8, label="tolerance")
    ax.axvline(radius, color="tab:green", lw=0.8, label="estimated radius")
    ax.set_xlabel("ball radius")
    ax.set_ylabel("worst midpoint residual")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def render_bundle_figure(path: str, x0_bundles: np.ndarray, bundles: np.ndarray, price: np.ndarray | None = None) -> str:
    """Movement of consumer bundles from the center to the solved allocation."""
    x0_bundles = np.atleast_2d(x0_bundles)
    bundles = np.atleast_2d(bundles)
    fig, ax = plt.subplots(figsize=(5, 4))
    for i, (a, b) in enumerate(zip(x0_bundles, bundles)):
        ax.annotate(
            "", xy=b[:2], xytext=a[:2],
            arrowprops={"arrowstyle": "->", "color": f"C{i}", "lw": 1.2},
        )
        ax.plot(*a[:2], "o", color=f"C{i}", ms=5)
        ax.plot(*b[:2], "s", color=f"C{i}", ms=5, label=f"consumer {i}")
    if price is not None and np.linalg.norm(price[:2]) > 0:
        c = bundles[:, :2].mean(axis=0)
        p = price[:2] / np.linalg.norm(price[:2])
        ax.annotate("price", xy=c + 0.3 * p, xytext=c,
                    arrowprops={"arrowstyle": "->", "color": "k", "lw": 1.0}, fontsize=7)
    ax.set_xlabel("good 1")
    ax.set_ylabel("good 2")
    ax.legend(fontsize=7)
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path
