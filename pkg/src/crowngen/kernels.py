"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is selected when
it is unavailable. Set CROWNGEN_KERNELS=python or =c to force a backend
(benchmarks and the bit-equality tests import both directly).
"""

import os

from crowngen import _kernels_py

_forced = os.environ.get("CROWNGEN_KERNELS", "").lower()

if _forced == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from crowngen import _kernels_cy as _impl
        BACKEND = "c"
    except ImportError:
        if _forced == "c":
            raise
        _impl = _kernels_py
        BACKEND = "python"


def _as_points(arr, name):
    import numpy as np

    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one point")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr


def nearest_squared(queries, points):
    queries = _as_points(queries, "queries")
    points = _as_points(points, "points")
    return _impl.nearest_squared(queries, points)


def knn(points, queries, k):
    points = _as_points(points, "points")
    queries = _as_points(queries, "queries")
    if not 1 <= k <= points.shape[0]:
        raise ValueError(f"k={k} out of range for {points.shape[0]} points")
    return _impl.knn(points, queries, int(k))


def farthest_point_indices(points, k, seed_index=0):
    points = _as_points(points, "points")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for {n} points")
    if not 0 <= seed_index < n:
        raise ValueError(f"seed_index={seed_index} out of range for {n} points")
    return _impl.farthest_point_indices(points, int(k), int(seed_index))
