# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled nearest-neighbor kernels.

Arithmetic here must stay bit-identical to `_kernels_py`: squared
distances accumulate as ((dx*dx + dy*dy) + dz*dz) and all arg-scans keep
the first (lowest-index) winner on ties.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF INF = 1e308


def nearest_squared(double[:, ::1] queries, double[:, ::1] points):
    """Per query: (squared distance to, index of) the nearest point."""
    cdef Py_ssize_t n = queries.shape[0]
    cdef Py_ssize_t m = points.shape[0]
    d2_arr = np.empty(n, dtype=np.float64)
    idx_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] d2 = d2_arr
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef Py_ssize_t i, j, best_j
    cdef double qx, qy, qz, dx, dy, dz, dd, best
    for i in range(n):
        qx = queries[i, 0]
        qy = queries[i, 1]
        qz = queries[i, 2]
        best = INF
        best_j = 0
        for j in range(m):
            dx = points[j, 0] - qx
            dy = points[j, 1] - qy
            dz = points[j, 2] - qz
            dd = dx * dx + dy * dy + dz * dz
            if dd < best:
                best = dd
                best_j = j
        d2[i] = best
        idx[i] = best_j
    return d2_arr, idx_arr


def knn(double[:, ::1] points, double[:, ::1] queries, Py_ssize_t k):
    """Indices of the k nearest points per query, ascending distance.

    Ties resolve to the lower index (matches a stable argsort).
    """
    cdef Py_ssize_t n = queries.shape[0]
    cdef Py_ssize_t m = points.shape[0]
    idx_arr = np.empty((n, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] idx = idx_arr
    row_arr = np.empty(m, dtype=np.float64)
    used_arr = np.zeros(m, dtype=np.uint8)
    cdef double[::1] row = row_arr
    cdef cnp.uint8_t[::1] used = used_arr
    cdef Py_ssize_t i, j, t, best_j
    cdef double qx, qy, qz, dx, dy, dz, best
    for i in range(n):
        qx = queries[i, 0]
        qy = queries[i, 1]
        qz = queries[i, 2]
        for j in range(m):
            dx = points[j, 0] - qx
            dy = points[j, 1] - qy
            dz = points[j, 2] - qz
            row[j] = dx * dx + dy * dy + dz * dz
            used[j] = 0
        for t in range(k):
            best = INF
            best_j = -1
            for j in range(m):
                if used[j] == 0 and row[j] < best:
                    best = row[j]
                    best_j = j
            idx[i, t] = best_j
            used[best_j] = 1
    return idx_arr


def farthest_point_indices(double[:, ::1] points, Py_ssize_t k,
                           Py_ssize_t seed_index):
    """Greedy farthest-point subset of size k, starting at seed_index."""
    cdef Py_ssize_t n = points.shape[0]
    idx_arr = np.empty(k, dtype=np.int64)
    cdef cnp.int64_t[::1] idx = idx_arr
    mind2_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] mind2 = mind2_arr
    cdef Py_ssize_t i, t, cur, best_i
    cdef double cx, cy, cz, dx, dy, dz, dd, best
    idx[0] = seed_index
    cur = seed_index
    cx = points[cur, 0]
    cy = points[cur, 1]
    cz = points[cur, 2]
    for i in range(n):
        dx = points[i, 0] - cx
        dy = points[i, 1] - cy
        dz = points[i, 2] - cz
        mind2[i] = dx * dx + dy * dy + dz * dz
    for t in range(1, k):
        best = -1.0
        best_i = 0
        for i in range(n):
            if mind2[i] > best:
                best = mind2[i]
                best_i = i
        idx[t] = best_i
        cx = points[best_i, 0]
        cy = points[best_i, 1]
        cz = points[best_i, 2]
        for i in range(n):
            dx = points[i, 0] - cx
            dy = points[i, 1] - cy
            dz = points[i, 2] - cz
            dd = dx * dx + dy * dy + dz * dz
            if dd < mind2[i]:
                mind2[i] = dd
    return idx_arr
