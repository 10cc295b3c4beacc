"""Second-order ALE surfaces and the unaccumulated local-effect alternative."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import Dataset
from .local import accumulate, cell_local_effects
from .predictor import Predictor


@dataclass(frozen=True)
class EffectSurface:
    """Second-order ALE effect of a feature pair on the corner lattice.

    Lattice arrays have shape ``(K_j + 1, K_l + 1)``; cell arrays have shape
    ``(K_j, K_l)``. ``source[k, m]`` is the 1-based cell whose averaged
    increment was used for cell ``(k + 1, m + 1)`` (itself when nonempty).
    """

    features: tuple[int, int]
    names: tuple[str, str]
    breakpoints: tuple[np.ndarray, np.ndarray]
    uncentered: np.ndarray
    main_removed: np.ndarray
    centered: np.ndarray
    main_effects: tuple[np.ndarray, np.ndarray]
    counts: np.ndarray
    increments: np.ndarray
    source: np.ndarray
    offset: float

    @property
    def empty(self) -> np.ndarray:
        return self.counts == 0

    @property
    def n_imputed(self) -> int:
        return int(self.empty.sum())

    def transpose(self) -> "EffectSurface":
        return EffectSurface(
            features=self.features[::-1],
            names=self.names[::-1],
            breakpoints=self.breakpoints[::-1],
            uncentered=self.uncentered.T,
            main_removed=self.main_removed.T,
            centered=self.centered.T,
            main_effects=self.main_effects[::-1],
            counts=self.counts.T,
            increments=self.increments.T,
            source=self.source.transpose(1, 0, 2)[..., ::-1],
            offset=self.offset,
        )


def second_order_difference(model: Predictor, background, j: int, l: int, zj, zl):
    """Second-order finite difference across the cell ``zj x zl``.

    ``background`` is a full predictor row (or matrix of rows) whose
    columns ``j`` and ``l`` are overwritten by the corner coordinates;
    ``zj`` and ``zl`` are ``(lower, upper)`` pairs. Computes
    ``[f(hi, hi) - f(lo, hi)] - [f(hi, lo) - f(lo, lo)]`` with the first
    coordinate on feature ``j``.
    """
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    m = bg.shape[0]
    rows = np.repeat(bg, 4, axis=0)
    # corner order: (lo,lo), (lo,hi), (hi,lo), (hi,hi)
    rows[:, j] = np.tile([zj[0], zj[0], zj[1], zj[1]], m)
    rows[:, l] = np.tile([zl[0], zl[1], zl[0], zl[1]], m)
    f = model.predict(rows).reshape(m, 2, 2)
    out = (f[:, 1, 1] - f[:, 0, 1]) - (f[:, 1, 0] - f[:, 0, 0])
    return float(out[0]) if np.ndim(background) == 1 else out


def impute_empty_cells(increments: np.ndarray, counts: np.ndarray):
    """Fill empty cells with the increment of the nearest nonempty cell.

    Nearness is Euclidean distance between integer cell indices; ties go to
    the lexicographically smallest index. Returns ``(filled, source)`` where
    ``source[k, m]`` is the 1-based ``(k, m)`` that supplied each value.
    """
    counts = np.asarray(counts)
    nonempty = counts > 0
    if not nonempty.any():
        raise ValueError("every cell is empty")
    flat_source = _kernels.nearest_nonempty(nonempty.ravel(), counts.shape)
    filled = np.asarray(increments, dtype=float).ravel()[flat_source].reshape(counts.shape)
    source = np.stack(np.unravel_index(flat_source, counts.shape), axis=-1).reshape(counts.shape + (2,)) + 1
    return filled, source


def main_effect_extraction(lattice: np.ndarray, counts: np.ndarray, axis: int) -> np.ndarray:
    """Discrete main effect of a lattice function along ``axis``.

    For ``axis=0`` this is, for each ``k``, the running sum over ``k' <= k``
    of ``sum_m n(k', m) [F(k', m) - F(k'-1, m)] / n_j(k')`` with ``m`` over
    the upper cell edges.
    """
    if axis == 1:
        return main_effect_extraction(lattice.T, counts.T, 0)
    diff = lattice[1:, 1:] - lattice[:-1, 1:]
    per_bin = (counts * diff).sum(axis=1) / counts.sum(axis=1)
    return np.concatenate([[0.0], np.cumsum(per_bin)])


def ale_second(model: Predictor, data: Dataset, j, l, K=None) -> EffectSurface:
    """Estimate the second-order ALE effect of features ``j`` and ``l``.

    Issues exactly ``4 * n`` prediction rows in one call. Empty cells take
    the averaged increment of their nearest nonempty cell before
    accumulation, so imputation costs no extra model evaluations. Defaults
    to ``K = 40`` bins per axis.
    """
    j, l = data.index(j), data.index(l)
    if j == l:
        raise ValueError("second-order effects need two distinct features")
    cells = cell_local_effects(model, data, [j, l], K=K)
    filled, source = impute_empty_cells(cells.means, cells.counts)
    counts = cells.counts
    uncentered = accumulate(filled)
    main_j = main_effect_extraction(uncentered, counts, 0)
    main_l = main_effect_extraction(uncentered, counts, 1)
    main_removed = uncentered - main_j[:, None] - main_l[None, :]
    offset = float(np.sum(counts * main_removed[1:, 1:]) / data.n)
    return EffectSurface(
        features=(j, l),
        names=(data.columns[j], data.columns[l]),
        breakpoints=(cells.partitions[0].breakpoints, cells.partitions[1].breakpoints),
        uncentered=uncentered,
        main_removed=main_removed,
        centered=main_removed - offset,
        main_effects=(main_j, main_l),
        counts=counts,
        increments=cells.means,
        source=source,
        offset=offset,
    )


@dataclass(frozen=True)
class LocalEffectSurface:
    """Unaccumulated cell-averaged second differences divided by cell area.

    Empty cells are NaN and flagged in ``empty``; nothing is imputed.
    """

    features: tuple[int, int]
    names: tuple[str, str]
    breakpoints: tuple[np.ndarray, np.ndarray]
    values: np.ndarray
    counts: np.ndarray

    @property
    def empty(self) -> np.ndarray:
        return self.counts == 0


def local_effect_surface(model: Predictor, data: Dataset, j, l, K=None) -> LocalEffectSurface:
    """Per-cell average second difference in units of a second derivative."""
    j, l = data.index(j), data.index(l)
    if j == l:
        raise ValueError("second-order effects need two distinct features")
    cells = cell_local_effects(model, data, [j, l], K=K)
    zj, zl = cells.partitions[0].breakpoints, cells.partitions[1].breakpoints
    area = np.diff(zj)[:, None] * np.diff(zl)[None, :]
    return LocalEffectSurface(
        features=(j, l),
        names=(data.columns[j], data.columns[l]),
        breakpoints=(zj, zl),
        values=cells.means / area,
        counts=cells.counts,
    )
