"""First-order (main effect) ALE curves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .local import accumulate, cell_local_effects
from .predictor import Predictor


@dataclass(frozen=True)
class EffectCurve:
    """ALE main effect of one feature, tabulated at its breakpoints.

    ``uncentered[0]`` is 0 by construction. ``centered`` equals
    ``uncentered - offset``, where ``offset`` is the count-weighted mean of
    the uncentered values at the upper bin edges.
    """

    feature: int
    name: str
    breakpoints: np.ndarray
    uncentered: np.ndarray
    centered: np.ndarray
    counts: np.ndarray
    offset: float

    @property
    def K(self) -> int:
        return self.counts.shape[0]

    def __call__(self, x):
        return evaluate_curve(self, x)

    def step(self, x):
        """The estimator's own step-function value at ``x``: the centered value
        at the upper edge of the bin holding ``x``."""
        k = np.clip(np.searchsorted(self.breakpoints, np.asarray(x, dtype=float), side="left"), 1, self.K)
        return self.centered[k]


def ale_first(model: Predictor, data: Dataset, j, K: int | None = None) -> EffectCurve:
    """Estimate the ALE main effect of feature ``j``.

    Issues exactly ``2 * n`` prediction rows in one call, independent of
    ``K``. Defaults to ``K = 100`` quantile bins.
    """
    cells = cell_local_effects(model, data, [j], K=K)
    part = cells.partitions[0]
    uncentered = accumulate(cells.filled)
    offset = float(np.sum(cells.counts * uncentered[1:]) / data.n)
    return EffectCurve(
        feature=part.feature,
        name=data.columns[part.feature],
        breakpoints=part.breakpoints,
        uncentered=uncentered,
        centered=uncentered - offset,
        counts=cells.counts,
        offset=offset,
    )


def evaluate_curve(curve: EffectCurve, x):
    """Piecewise-linear interpolation of the centered curve, clamped outside
    ``[z_0, z_K]``. Returns a float for scalar input."""
    out = np.interp(np.asarray(x, dtype=float), curve.breakpoints, curve.centered)
    return float(out) if np.ndim(out) == 0 else out
