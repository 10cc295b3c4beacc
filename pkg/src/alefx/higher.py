"""ALE effects of arbitrary order on Cartesian corner lattices.

An effect over an index set ``J`` is estimated by accumulating the
``|J|``-order cell differences, then peeling off lower-order content from
the highest order down: at each order ``r`` every subset ``v`` of size
``r`` has its discrete effect extracted from the current grid and
subtracted, and a final count-weighted grand mean removes the constant.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .data import Dataset, joint_count_array
from .local import (
    accumulate,
    build_partitions,
    cell_local_effects,
    corner_selections,
    resolve_K,
    weighted_mean_upper,
)
from .predictor import Predictor

MAX_ORDER = 4


@dataclass(frozen=True)
class EffectGrid:
    """Values on the lattice ``prod_j (K_j + 1)`` of corners over ``features``.

    ``counts`` is the joint cell count array (shape ``prod_j K_j``) of the
    grid's own index set. ``stage`` is ``"uncentered"``, ``"centered"``
    (all lower-order effects and the constant removed) or ``"residual"``.
    """

    features: tuple[int, ...]
    names: tuple[str, ...]
    breakpoints: tuple[np.ndarray, ...]
    values: np.ndarray
    counts: np.ndarray
    stage: str = "uncentered"
    source: np.ndarray | None = field(default=None, compare=False)

    @property
    def order(self) -> int:
        return len(self.features)

    @property
    def empty(self) -> np.ndarray:
        return self.counts == 0

    def weighted_mean(self) -> float:
        return weighted_mean_upper(self.values, self.counts)


def finite_difference_general(
    g: Callable[[np.ndarray], np.ndarray],
    u: Sequence[int],
    lower: Sequence[float],
    upper: Sequence[float],
    background,
):
    """``|u|``-order difference of ``g`` across one cell, by inclusion-exclusion.

    Sums ``(-1)**(|u| - sum(s)) * g(corner(s), background)`` over all
    lower/upper selections ``s``. ``background`` is a full row (or rows);
    its columns in ``u`` are overwritten.
    """
    u = list(u)
    if not u:
        raise ValueError("need at least one feature")
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    sel = corner_selections(len(u))
    rows = np.repeat(bg, sel.shape[0], axis=0)
    for a, j in enumerate(u):
        rows[:, j] = np.tile(np.where(sel[:, a] == 1, upper[a], lower[a]), bg.shape[0])
    vals = np.asarray(g(rows), dtype=float).reshape(bg.shape[0], sel.shape[0])
    signs = (-1.0) ** (len(u) - sel.sum(axis=1))
    out = vals @ signs
    return float(out[0]) if np.ndim(background) == 1 else out


def _resolve(data: Dataset, J, max_order: int) -> tuple[int, ...]:
    J = tuple(data.index(j) for j in J)
    if not J:
        raise ValueError("index set must be nonempty")
    if len(set(J)) != len(J):
        raise ValueError(f"repeated feature in {J}")
    if len(J) > data.d:
        raise ValueError(f"|J|={len(J)} exceeds d={data.d}")
    if len(J) > max_order:
        raise ValueError(f"|J|={len(J)} exceeds the order cap {max_order}; raise max_order to allow it")
    return J


def ale_general_uncentered(
    model: Predictor, data: Dataset, J, K=None, max_order: int = MAX_ORDER
) -> EffectGrid:
    """Accumulated cell-averaged ``|J|``-order differences.

    Issues exactly ``2**|J| * n`` prediction rows. Empty cells take the
    increment of the nearest nonempty cell (Euclidean in index space,
    lexicographic ties).
    """
    J = _resolve(data, J, max_order)
    cells = cell_local_effects(model, data, J, K=K)
    return EffectGrid(
        features=J,
        names=tuple(data.columns[j] for j in J),
        breakpoints=tuple(p.breakpoints for p in cells.partitions),
        values=accumulate(cells.filled),
        counts=cells.counts,
        stage="uncentered",
        source=cells.source,
    )


def extract_lower_order(grid: EffectGrid, v, counts: np.ndarray | None = None) -> EffectGrid:
    """Discrete effect over ``v`` of a lattice function over ``grid.features``.

    Takes the ``|v|``-order differences along ``v``'s axes, averages them
    over the remaining axes (upper cell edges) with weights
    ``n_J(k) / n_v(k_v)``, and prefix-sums along ``v``. Cells of ``v`` with
    no observations take the average of their nearest nonempty ``v`` cell.
    ``v`` may be given as feature indices of the grid.
    """
    v = tuple(v)
    if not v:
        raise ValueError("v must be nonempty")
    missing = [j for j in v if j not in grid.features]
    if missing:
        raise ValueError(f"{missing} not in the grid's features {grid.features}")
    counts = grid.counts if counts is None else np.asarray(counts)
    axes = sorted(grid.features.index(j) for j in v)
    other = tuple(a for a in range(grid.order) if a not in axes)
    diff = grid.values
    for a in range(grid.order):
        diff = np.diff(diff, axis=a) if a in axes else np.take(diff, np.arange(1, diff.shape[a]), axis=a)
    num = (counts * diff).sum(axis=other)
    n_v = counts.sum(axis=other)
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = np.where(n_v > 0, num / np.maximum(n_v, 1), np.nan)
    if (n_v == 0).any():
        src = _kernels.nearest_nonempty((n_v > 0).ravel(), n_v.shape)
        avg = avg.ravel()[src].reshape(n_v.shape)
    feats = tuple(grid.features[a] for a in axes)
    return EffectGrid(
        features=feats,
        names=tuple(grid.names[a] for a in axes),
        breakpoints=tuple(grid.breakpoints[a] for a in axes),
        values=accumulate(avg),
        counts=n_v,
        stage="uncentered",
    )


def broadcast_to(sub: EffectGrid, grid: EffectGrid) -> np.ndarray:
    """Extend a lower-order lattice function to ``grid``'s lattice."""
    axes = [grid.features.index(j) for j in sub.features]
    # sub's axes are in grid order already when produced by extract_lower_order
    order = np.argsort(axes)
    vals = np.transpose(sub.values, order)
    shape = [1] * grid.order
    for a in sorted(axes):
        shape[a] = grid.values.shape[a]
    return np.broadcast_to(vals.reshape(shape), grid.values.shape)


def remove_lower_orders(grid: EffectGrid) -> EffectGrid:
    """Apply the right-to-left composition to an uncentered grid."""
    current = grid.values.copy()
    r_all = grid.order
    for r in range(r_all - 1, 0, -1):
        state = replace(grid, values=current)
        subtract = np.zeros_like(current)
        for v in itertools.combinations(grid.features, r):
            subtract += broadcast_to(extract_lower_order(state, v), grid)
        current = current - subtract
    centered = current - weighted_mean_upper(current, grid.counts)
    return replace(grid, values=centered, stage="centered")


def ale_general(model: Predictor, data: Dataset, J, K=None, max_order: int = MAX_ORDER) -> EffectGrid:
    """Centered ``|J|``-order ALE effect with all lower-order effects removed."""
    return remove_lower_orders(ale_general_uncentered(model, data, J, K=K, max_order=max_order))


@dataclass(frozen=True)
class Decomposition:
    """Every ALE effect of a model over all predictors, plus the residual.

    ``effects`` maps each nonempty proper subset of features (sorted tuple)
    to its centered grid; ``constant`` is the mean prediction over the data;
    ``residual`` is the model at the full lattice corners minus the constant
    and all lower-order effects there.
    """

    constant: float
    effects: dict
    residual: EffectGrid


def decomposition_residual(
    model: Predictor, data: Dataset, K=None, max_order: int = MAX_ORDER
) -> Decomposition:
    """Evaluate the full decomposition over all ``d`` predictors.

    Costs ``n`` rows for the constant, ``2**|v| * n`` rows per proper
    subset ``v``, and ``prod_j (K_j + 1)`` rows for the model on the lattice.
    """
    D = _resolve(data, range(data.d), max_order)
    Ks = resolve_K(K, len(D))
    parts = build_partitions(data, D, Ks)
    constant = float(np.mean(model.predict(data.values)))
    effects = {}
    for r in range(1, len(D)):
        for v in itertools.combinations(D, r):
            effects[v] = ale_general(model, data, v, K=[Ks[D.index(j)] for j in v], max_order=max_order)
    mesh = np.meshgrid(*[p.breakpoints for p in parts], indexing="ij")
    corners = np.stack([m.ravel() for m in mesh], axis=1)
    f_lattice = model.predict(corners).reshape(mesh[0].shape)
    full = EffectGrid(
        features=D,
        names=tuple(data.columns),
        breakpoints=tuple(p.breakpoints for p in parts),
        values=f_lattice,
        counts=joint_count_array(data, parts),
        stage="residual",
    )
    residual = f_lattice - constant
    for v, eff in effects.items():
        residual = residual - broadcast_to(eff, full)
    return Decomposition(constant, effects, replace(full, values=residual))
