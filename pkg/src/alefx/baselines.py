"""Partial dependence and marginal (M) plot estimators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, build_quantile_partition
from .local import default_K, resolve_K
from .predictor import Predictor

# rows per predict call when sweeping a PD grid
PD_CHUNK_ROWS = 2_000_000


@dataclass(frozen=True)
class PDEffect:
    """Partial dependence over ``features`` on a Cartesian grid.

    ``values`` has one axis per feature, indexed like ``grid``.
    """

    features: tuple[int, ...]
    names: tuple[str, ...]
    grid: tuple[np.ndarray, ...]
    values: np.ndarray
    n_evaluations: int


@dataclass(frozen=True)
class MEffect:
    """Marginal plot: mean of ``f(z_k, x_{i,\\j})`` over the rows in bin ``k``."""

    feature: int
    name: str
    grid: np.ndarray
    values: np.ndarray
    sizes: np.ndarray


def pd_effect(model: Predictor, data: Dataset, J, grid=None, K=None) -> PDEffect:
    """Average the model over the data with ``x_J`` pinned at each grid point.

    The default grid per feature is the upper bin edges ``z_1..z_K`` of the
    ALE quantile partition, so ``K**|J| * n`` rows are evaluated.
    """
    if np.isscalar(J) or isinstance(J, str):
        J = [J]
    J = tuple(data.index(j) for j in J)
    if not J:
        raise ValueError("index set must be nonempty")
    if grid is None:
        Ks = resolve_K(K, len(J))
        grid = tuple(build_quantile_partition(data, j, k).breakpoints[1:] for j, k in zip(J, Ks))
    else:
        if len(grid) != len(J):
            raise ValueError(f"got {len(grid)} grid axes for {len(J)} features")
        grid = tuple(np.asarray(g, dtype=float) for g in grid)
    shape = tuple(g.shape[0] for g in grid)
    mesh = np.meshgrid(*grid, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    n = data.n
    per_call = max(1, PD_CHUNK_ROWS // n)
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], per_call):
        block = points[start:start + per_call]
        rows = np.tile(data.values, (block.shape[0], 1))
        for a, j in enumerate(J):
            rows[:, j] = np.repeat(block[:, a], n)
        out[start:start + block.shape[0]] = model.predict(rows).reshape(block.shape[0], n).mean(axis=1)
    return PDEffect(
        features=J,
        names=tuple(data.columns[j] for j in J),
        grid=grid,
        values=out.reshape(shape),
        n_evaluations=points.shape[0] * n,
    )


def m_effect(model: Predictor, data: Dataset, j, K: int | None = None) -> MEffect:
    """Marginal plot with the ALE quantile bins as neighborhoods.

    Evaluated at the upper edge ``z_k`` of each bin; costs ``n`` rows.
    """
    j = data.index(j)
    part = build_quantile_partition(data, j, default_K(1) if K is None else K)
    k = part.locate(data.values[:, j])
    rows = data.values.copy()
    rows[:, j] = part.breakpoints[k]
    preds = model.predict(rows)
    sums = np.bincount(k - 1, weights=preds, minlength=part.K)
    return MEffect(
        feature=j,
        name=data.columns[j],
        grid=part.breakpoints[1:],
        values=sums / part.counts,
        sizes=part.counts,
    )
