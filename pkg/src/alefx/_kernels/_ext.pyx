# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Must stay arithmetically identical to ``_pure``."""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

# relative tolerance (of the sum of squares) for equal split gains
cdef double TIE_RTOL = 1e-12

cnp.import_array()


def group_sum(const long long[::1] ids, const double[::1] values, Py_ssize_t ncells):
    cdef double[::1] out = np.zeros(ncells, dtype=np.float64)
    cdef Py_ssize_t i, n = ids.shape[0]
    for i in range(n):
        out[ids[i]] += values[i]
    return np.asarray(out)


def nearest_nonempty(const unsigned char[::1] nonempty, tuple shape):
    cdef Py_ssize_t ndim = len(shape)
    cdef Py_ssize_t ncells = nonempty.shape[0]
    cdef long long[:, ::1] coords = np.ascontiguousarray(
        np.stack(np.unravel_index(np.arange(ncells), shape), axis=1).astype(np.int64)
    )
    cdef long long[::1] full = np.flatnonzero(np.asarray(nonempty)).astype(np.int64)
    cdef long long[::1] source = np.arange(ncells, dtype=np.int64)
    cdef Py_ssize_t c, q, a, nfull = full.shape[0]
    cdef long long best, diff, dist, best_dist
    if nfull == 0:
        raise ValueError("no nonempty cell to impute from")
    for c in range(ncells):
        if nonempty[c]:
            continue
        best = -1
        best_dist = 0
        for q in range(nfull):
            dist = 0
            for a in range(ndim):
                diff = coords[c, a] - coords[full[q], a]
                dist += diff * diff
            # full is ascending so the first minimum is the lexicographically smallest
            if best < 0 or dist < best_dist:
                best = full[q]
                best_dist = dist
        source[c] = best
    return np.asarray(source)


def tree_predict(const long long[::1] feature, const double[::1] threshold,
                 const long long[::1] left, const long long[::1] right,
                 const double[::1] value, const double[:, :] X):
    cdef Py_ssize_t i, m = X.shape[0]
    cdef long long node
    cdef double[::1] out = np.empty(m, dtype=np.float64)
    for i in range(m):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return np.asarray(out)


def best_split(const double[::1] xs, const double[::1] ys, Py_ssize_t min_leaf):
    cdef Py_ssize_t i, n = xs.shape[0]
    cdef double s = 0.0, s2 = 0.0, total, total2, sse_parent
    cdef double sse_left, sse_right, gain, nl, nr, sr
    cdef double best_gain = -INFINITY, tol
    cdef Py_ssize_t best_pos = -1
    cdef double[::1] cs = np.empty(n, dtype=np.float64)
    cdef double[::1] cs2 = np.empty(n, dtype=np.float64)
    for i in range(n):
        s += ys[i]
        s2 += ys[i] * ys[i]
        cs[i] = s
        cs2[i] = s2
    total = cs[n - 1]
    total2 = cs2[n - 1]
    sse_parent = total2 - total * total / n
    for i in range(min_leaf, n - min_leaf + 1):
        if xs[i - 1] >= xs[i]:
            continue
        nl = i
        nr = n - i
        sse_left = cs2[i - 1] - cs[i - 1] * cs[i - 1] / nl
        sr = total - cs[i - 1]
        sse_right = (total2 - cs2[i - 1]) - sr * sr / nr
        gain = sse_parent - sse_left - sse_right
        if gain > best_gain:
            best_gain = gain
    if best_gain == -INFINITY:
        return best_gain, best_pos, sse_parent
    # gains within roundoff of the best are ties; the earliest wins
    tol = TIE_RTOL * total2
    for i in range(min_leaf, n - min_leaf + 1):
        if xs[i - 1] >= xs[i]:
            continue
        nl = i
        nr = n - i
        sse_left = cs2[i - 1] - cs[i - 1] * cs[i - 1] / nl
        sr = total - cs[i - 1]
        sse_right = (total2 - cs2[i - 1]) - sr * sr / nr
        gain = sse_parent - sse_left - sse_right
        if gain >= best_gain - tol:
            return gain, i, sse_parent
    return best_gain, best_pos, sse_parent
