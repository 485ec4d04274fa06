"""Shared test oracles, independent of the library's query paths."""

import numpy as np


def brute_force_knn(points: np.ndarray, x, k: int):
    """k nearest neighbours by full distance sort.

    Sorts all stored points by (distance, original index) and takes the
    first k; the reference semantics for every index query.
    """
    pts = np.asarray(points, dtype=np.float64)
    query = np.atleast_1d(np.asarray(x, dtype=np.float64))
    dists = np.linalg.norm(pts - query[None, :], axis=1)
    order = sorted(range(len(pts)), key=lambda i: (dists[i], i))
    chosen = order[:k]
    return [(i, float(dists[i])) for i in chosen]


def holder_budget(f, rng, n_pairs: int = 10_000, grid: int = 2_000):
    """Empirical sup-norm plus beta-Holder seminorm over f's domain."""
    lo = np.asarray(f.domain[0], dtype=np.float64)
    hi = np.asarray(f.domain[1], dtype=np.float64)
    d = f.dimension
    xs = lo + (hi - lo) * rng.random((n_pairs, d))
    ys = lo + (hi - lo) * rng.random((n_pairs, d))
    fx = np.asarray(f(xs), dtype=np.float64)
    fy = np.asarray(f(ys), dtype=np.float64)
    gaps = np.linalg.norm(xs - ys, axis=1)
    keep = gaps > 0
    seminorm = float(np.max(np.abs(fx - fy)[keep] / gaps[keep] ** f.beta))
    grid_pts = lo + (hi - lo) * rng.random((grid, d))
    sup = float(np.max(np.abs(f(grid_pts))))
    return sup + seminorm
