"""Per-cell averaged finite differences shared by all ALE orders.

For an index set ``J`` the model is evaluated at the ``2**|J|`` corners of
the cell holding each observation, with the observation's own values kept
for the other predictors. All rows go to the model in one ``predict``
call, laid out cell by cell (cells in C order over their 0-based indices,
observations in dataset order); within a cell block come one sub-block per
corner, corners in lexicographic order of their lower/upper selection
(lower first). For a single feature this is: bin 1 lower endpoints, bin 1
upper endpoints, bin 2 lower endpoints, and so on.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .data import Dataset, QuantilePartition, build_quantile_partition, cell_indices
from .predictor import Predictor

DEFAULT_K = {1: 100, 2: 40}
DEFAULT_K_HIGHER = 10


def default_K(order: int) -> int:
    return DEFAULT_K.get(order, DEFAULT_K_HIGHER)


def corner_selections(r: int) -> np.ndarray:
    """All lower(0)/upper(1) selections for ``r`` axes, lexicographic."""
    return np.array(list(itertools.product((0, 1), repeat=r)), dtype=np.int64).reshape(-1, r)


def resolve_K(K, r: int) -> tuple[int, ...]:
    if K is None:
        return (default_K(r),) * r
    if np.isscalar(K):
        return (int(K),) * r
    K = tuple(int(k) for k in K)
    if len(K) != r:
        raise ValueError(f"got {len(K)} interval counts for {r} features")
    return K


def build_partitions(data: Dataset, features: Sequence[int], K) -> list[QuantilePartition]:
    Ks = resolve_K(K, len(features))
    return [build_quantile_partition(data, j, k) for j, k in zip(features, Ks)]


def recursive_difference(values: np.ndarray) -> np.ndarray:
    """Collapse trailing ``(2,)*r`` corner axes into the ``r``-order difference.

    Differences are taken along the first feature axis first, then the
    next, so for two axes this is
    ``[f(k, m) - f(k-1, m)] - [f(k, m-1) - f(k-1, m-1)]``.
    """
    r = values.ndim - 1
    out = values
    for _ in range(r):
        out = out[:, 1] - out[:, 0]
    return out


@dataclass(frozen=True)
class CellEffects:
    """Averaged local effects on the cell grid of an index set.

    ``means`` is NaN on empty cells; ``filled`` replaces each of those with
    the value of ``source`` (flat index of the nearest nonempty cell).
    """

    features: tuple[int, ...]
    partitions: tuple[QuantilePartition, ...]
    counts: np.ndarray
    means: np.ndarray
    filled: np.ndarray
    source: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts.shape

    @property
    def empty(self) -> np.ndarray:
        return self.counts == 0


def corner_rows(data: Dataset, partitions: Sequence[QuantilePartition]):
    """Build the batched prediction matrix.

    Returns ``(rows, position, flat, order, counts)`` where
    ``position[i, s]`` is the row of ``rows`` holding sorted observation
    ``i`` at corner selection ``s``.
    """
    features = [p.feature for p in partitions]
    r = len(partitions)
    shape = tuple(p.K for p in partitions)
    idx = cell_indices(data, partitions)
    flat = np.ravel_multi_index(tuple(idx.T), shape)
    order = np.argsort(flat, kind="stable")
    flat_sorted = flat[order]
    counts = np.bincount(flat_sorted, minlength=int(np.prod(shape)))
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    n = data.n
    within = np.arange(n) - start[flat_sorted]
    sel = corner_selections(r)
    nc = sel.shape[0]
    cell_start = nc * start[flat_sorted] + within
    position = cell_start[:, None] + np.arange(nc)[None, :] * counts[flat_sorted][:, None]
    rows = np.empty((nc * n, data.d), dtype=np.float64)
    base = data.values[order]
    idx_sorted = idx[order]
    for s in range(nc):
        block = base.copy()
        for a, j in enumerate(features):
            block[:, j] = partitions[a].breakpoints[idx_sorted[:, a] + sel[s, a]]
        rows[position[:, s]] = block
    return rows, position, flat_sorted, order, counts.reshape(shape)


def cell_local_effects(
    model: Predictor,
    data: Dataset,
    features: Sequence[int],
    K=None,
    partitions: Sequence[QuantilePartition] | None = None,
) -> CellEffects:
    """Average the ``|J|``-order finite differences within each cell."""
    features = tuple(data.index(j) for j in features)
    if len(set(features)) != len(features):
        raise ValueError(f"repeated feature in {features}")
    if partitions is None:
        partitions = build_partitions(data, features, K)
    r = len(features)
    rows, position, flat_sorted, _, counts = corner_rows(data, partitions)
    preds = model.predict(rows)
    corner_values = preds[position].reshape((data.n,) + (2,) * r)
    diffs = recursive_difference(corner_values)
    shape = counts.shape
    sums = _kernels.group_sum(flat_sorted, diffs, counts.size).reshape(shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    source = _kernels.nearest_nonempty((counts > 0).ravel(), shape)
    filled = means.ravel()[source].reshape(shape)
    return CellEffects(features, tuple(partitions), counts, means, filled, source.reshape(shape))


def accumulate(increments: np.ndarray) -> np.ndarray:
    """Prefix-sum cell increments onto the corner lattice, zero on base faces."""
    out = np.pad(increments, [(1, 0)] * increments.ndim)
    for axis in range(out.ndim):
        out = np.cumsum(out, axis=axis)
    return out


def weighted_mean_upper(lattice: np.ndarray, counts: np.ndarray) -> float:
    """Count-weighted mean of lattice values at the upper corners of cells."""
    upper = lattice[tuple(slice(1, None) for _ in range(lattice.ndim))]
    return float(np.sum(counts * upper) / np.sum(counts))
