"""Pure-numpy fallback for the compiled kernels.

Matches `_kernels_cy` bit for bit: squared distances accumulate in the
same order and every arg-scan keeps the first (lowest-index) winner on
ties. Pairwise work is chunked to bound peak memory.
"""

import numpy as np

# ~4M pair entries per chunk (32 MB of float64).
_CHUNK_PAIRS = 1 << 22


def _chunk_rows(n_queries, n_points):
    return max(1, _CHUNK_PAIRS // max(n_points, 1))


def nearest_squared(queries, points):
    """Per query: (squared distance to, index of) the nearest point."""
    n = queries.shape[0]
    d2 = np.empty(n, dtype=np.float64)
    idx = np.empty(n, dtype=np.int64)
    step = _chunk_rows(n, points.shape[0])
    for s in range(0, n, step):
        q = queries[s:s + step]
        diff = q[:, None, :] - points[None, :, :]
        dd = (diff * diff).sum(axis=-1)
        rows = np.arange(q.shape[0])
        best = dd.argmin(axis=1)
        d2[s:s + step] = dd[rows, best]
        idx[s:s + step] = best
    return d2, idx


def knn(points, queries, k):
    """Indices of the k nearest points per query, ascending distance.

    Ties resolve to the lower index (stable argsort).
    """
    n = queries.shape[0]
    idx = np.empty((n, k), dtype=np.int64)
    step = _chunk_rows(n, points.shape[0])
    for s in range(0, n, step):
        q = queries[s:s + step]
        diff = q[:, None, :] - points[None, :, :]
        dd = (diff * diff).sum(axis=-1)
        order = np.argsort(dd, axis=1, kind="stable")
        idx[s:s + step] = order[:, :k]
    return idx


def farthest_point_indices(points, k, seed_index):
    """Greedy farthest-point subset of size k, starting at seed_index."""
    idx = np.empty(k, dtype=np.int64)
    idx[0] = seed_index
    diff = points - points[seed_index]
    mind2 = (diff * diff).sum(axis=-1)
    for t in range(1, k):
        best = int(mind2.argmax())
        idx[t] = best
        diff = points - points[best]
        dd = (diff * diff).sum(axis=-1)
        np.minimum(mind2, dd, out=mind2)
    return idx
