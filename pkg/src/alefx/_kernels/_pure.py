"""Numpy implementations of the compiled kernels.

Every function here mirrors ``_ext.pyx`` operation for operation so both
backends return bit-identical results.
"""
import numpy as np

# relative tolerance (of the sum of squares) for equal split gains
TIE_RTOL = 1e-12


def group_sum(ids, values, ncells):
    return np.bincount(ids, weights=values, minlength=ncells).astype(np.float64)


def nearest_nonempty(nonempty, shape):
    nonempty = np.asarray(nonempty, dtype=bool)
    ncells = nonempty.shape[0]
    full = np.flatnonzero(nonempty)
    if full.size == 0:
        raise ValueError("no nonempty cell to impute from")
    source = np.arange(ncells, dtype=np.int64)
    empty = np.flatnonzero(~nonempty)
    if empty.size == 0:
        return source
    coords = np.stack(np.unravel_index(np.arange(ncells), shape), axis=1).astype(np.int64)
    # chunked to bound memory at |empty| * |full|
    step = max(1, 2_000_000 // full.size)
    for start in range(0, empty.size, step):
        block = empty[start:start + step]
        diff = coords[block][:, None, :] - coords[full][None, :, :]
        dist = (diff * diff).sum(axis=2)
        source[block] = full[np.argmin(dist, axis=1)]
    return source


def tree_predict(feature, threshold, left, right, value, X):
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        idx = np.flatnonzero(active)
        cur = node[idx]
        go_left = X[idx, feature[cur]] <= threshold[cur]
        node[idx] = np.where(go_left, left[cur], right[cur])
        active[idx] = feature[node[idx]] >= 0
    return value[node].astype(np.float64)


def best_split(xs, ys, min_leaf):
    n = xs.shape[0]
    cs = np.cumsum(ys)
    cs2 = np.cumsum(ys * ys)
    total = cs[n - 1]
    total2 = cs2[n - 1]
    sse_parent = total2 - total * total / n
    pos = np.arange(min_leaf, n - min_leaf + 1)
    pos = pos[xs[pos - 1] < xs[pos]]
    if pos.size == 0:
        return -np.inf, -1, float(sse_parent)
    nl = pos.astype(np.float64)
    nr = (n - pos).astype(np.float64)
    sl = cs[pos - 1]
    sse_left = cs2[pos - 1] - sl * sl / nl
    sr = total - sl
    sse_right = (total2 - cs2[pos - 1]) - sr * sr / nr
    gain = sse_parent - sse_left - sse_right
    # gains within roundoff of the best are ties; the earliest wins
    best = int(np.argmax(gain >= gain.max() - TIE_RTOL * total2))
    return float(gain[best]), int(pos[best]), float(sse_parent)
