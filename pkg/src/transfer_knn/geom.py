"""Point sets and exact k-nearest-neighbour queries.

Distances are Euclidean.  Ties in distance are broken by ascending
original index so that results are reproducible across runs and
platforms.  The index is immutable after construction; concurrent
read-only queries are safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

# Extra neighbours fetched beyond k so that ties straddling the cut can be
# reordered deterministically without a second tree query in the common case.
_TIE_PAD = 8


class PointSet:
    """An immutable set of points in R^d (duplicates retained)."""

    def __init__(self, points, allow_empty: bool = False):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array of shape (n, d)")
        if pts.shape[0] == 0 and not allow_empty:
            raise ValueError("point set must be nonempty")
        if pts.shape[1] < 1:
            raise ValueError("dimension must be >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("all coordinates must be finite")
        self._points = pts
        self._points.setflags(write=False)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dimension(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]


@dataclass(frozen=True)
class NeighborResult:
    """One neighbour: index into the source PointSet and its distance."""

    index: int
    distance: float


class NeighborIndex:
    """Exact nearest-neighbour index over a fixed PointSet."""

    def __init__(self, source: PointSet):
        if len(source) == 0:
            raise ValueError("cannot index an empty point set")
        self.source = source
        self._tree = cKDTree(source.points)

    def __len__(self) -> int:
        return len(self.source)

    @property
    def dimension(self) -> int:
        return self.source.dimension

    def query_batch(self, queries, k: int, workers: int = 1):
        """k nearest neighbours for each query row.

        Returns (distances, indices), each of shape (q, k), distances
        nondecreasing along axis 1 and ties resolved by ascending index.
        """
        n = len(self)
        if not 1 <= k <= n:
            raise ValueError(f"k={k} out of range [1, {n}]")
        q = np.ascontiguousarray(queries, dtype=np.float64)
        if q.ndim == 1:
            q = q[:, None] if self.dimension == 1 else q[None, :]
        if q.shape[1] != self.dimension:
            raise ValueError(
                f"query dimension {q.shape[1]} != index dimension {self.dimension}"
            )
        if not np.all(np.isfinite(q)):
            raise ValueError("query coordinates must be finite")

        kq = min(n, k + _TIE_PAD)
        dist, idx = self._tree.query(q, k=kq, workers=workers)
        dist = dist.reshape(len(q), kq)
        idx = idx.reshape(len(q), kq)
        order = np.lexsort((idx, dist), axis=-1)
        dist = np.take_along_axis(dist, order, axis=-1)
        idx = np.take_along_axis(idx, order, axis=-1)

        if kq < n:
            # A tie block truncated by the padding cannot be reordered from
            # what the tree returned; redo those rows exhaustively.
            stale = dist[:, k - 1] >= dist[:, kq - 1]
            for row in np.nonzero(stale)[0]:
                d_all = np.linalg.norm(self.source.points - q[row], axis=1)
                full = np.lexsort((np.arange(n), d_all))[:kq]
                dist[row] = d_all[full]
                idx[row] = full
        return dist[:, :k], idx[:, :k]

    def query(self, x, k: int) -> list[NeighborResult]:
        dist, idx = self.query_batch(_as_query_row(x), k)
        return [NeighborResult(int(i), float(d)) for i, d in zip(idx[0], dist[0])]


def _as_query_row(x) -> np.ndarray:
    """Coerce a single point (scalar, sequence, or array) to shape (1, d)."""
    return np.atleast_1d(np.asarray(x, dtype=np.float64))[None, :]


def build_index(points: PointSet) -> NeighborIndex:
    """Build an immutable exact-kNN index over the given points."""
    if not isinstance(points, PointSet):
        points = PointSet(points)
    return NeighborIndex(points)


def query_knn(index: NeighborIndex, x, k: int) -> list[NeighborResult]:
    """The k nearest stored points to x, sorted by distance then index."""
    return index.query(x, k)


def kth_distance(index: NeighborIndex, x, k: int) -> float:
    """Distance from x to its k-th nearest stored point (R_k(x))."""
    dist, _ = index.query_batch(_as_query_row(x), k)
    return float(dist[0, -1])
