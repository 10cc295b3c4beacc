"""Hot inner loops, compiled when available.

``BACKEND`` is ``"cython"`` when the extension imported and ``"python"``
otherwise. Set ``ALEFX_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

import numpy as np

from . import _pure

if os.environ.get("ALEFX_PURE_PYTHON") == "1":
    _impl = _pure
    BACKEND = "python"
else:
    try:
        from . import _ext as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pure
        BACKEND = "python"


def group_sum(ids, values, ncells):
    """Sum ``values`` into ``ncells`` buckets, in input order."""
    return _impl.group_sum(
        np.ascontiguousarray(ids, dtype=np.int64),
        np.ascontiguousarray(values, dtype=np.float64),
        int(ncells),
    )


def nearest_nonempty(nonempty, shape):
    """Flat index of the nearest nonempty cell for every cell of a grid.

    Distance is Euclidean between integer index vectors; ties go to the
    lexicographically smallest index. Nonempty cells map to themselves.
    """
    return _impl.nearest_nonempty(
        np.ascontiguousarray(nonempty, dtype=np.uint8), tuple(int(s) for s in shape)
    )


def tree_predict(feature, threshold, left, right, value, X):
    return _impl.tree_predict(
        np.ascontiguousarray(feature, dtype=np.int64),
        np.ascontiguousarray(threshold, dtype=np.float64),
        np.ascontiguousarray(left, dtype=np.int64),
        np.ascontiguousarray(right, dtype=np.int64),
        np.ascontiguousarray(value, dtype=np.float64),
        np.asarray(X, dtype=np.float64),
    )


def best_split(xs, ys, min_leaf):
    """Best threshold position on presorted ``xs``.

    Returns ``(gain, pos, sse_parent)``; ``pos`` is the size of the left
    child (``-1`` when no admissible split exists). Earliest position wins
    ties.
    """
    return _impl.best_split(
        np.ascontiguousarray(xs, dtype=np.float64),
        np.ascontiguousarray(ys, dtype=np.float64),
        int(min_leaf),
    )
