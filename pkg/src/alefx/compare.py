"""Side-by-side ALE, PD and M main effects on a shared axis."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import m_effect, pd_effect
from .data import Dataset
from .first import ale_first
from .predictor import Predictor


@dataclass
class Comparison:
    """Centered main-effect curves at the breakpoints ``z_0..z_K``.

    PD and M are defined at ``z_1..z_K`` only; their entry at ``z_0`` is
    NaN. Every curve is centered with the bin counts as weights at
    ``z_1..z_K``. ``ledger`` holds the prediction rows each method used.
    """

    feature: int
    name: str
    breakpoints: np.ndarray
    counts: np.ndarray
    curves: dict
    ledger: dict
    truth: str | None = None
    rmse: dict = field(default_factory=dict)
    central: np.ndarray | None = None


def center(values: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Subtract the count-weighted mean of ``values`` (one per bin)."""
    return values - np.sum(counts * values) / np.sum(counts)


def central_mask(data: Dataset, j: int, breakpoints: np.ndarray, coverage: float = 0.9) -> np.ndarray:
    """Breakpoints inside the central ``coverage`` quantile range of feature ``j``."""
    tail = (1.0 - coverage) / 2.0
    lo, hi = np.quantile(data.values[:, j], [tail, 1.0 - tail])
    return (breakpoints >= lo) & (breakpoints <= hi)


def rmse_against(curve: np.ndarray, truth: np.ndarray, mask: np.ndarray) -> float:
    sel = mask.copy()
    sel[0] = False
    err = curve[sel] - truth[sel]
    return float(np.sqrt(np.mean(err ** 2)))


def compare_main_effects(
    model: Predictor,
    data: Dataset,
    j,
    K: int | None = None,
    truth_model: Predictor | None = None,
    truth_label: str | None = None,
) -> Comparison:
    """Compute ALE, PD and M curves for feature ``j`` on the ALE breakpoints.

    With ``truth_model`` the true effect is that model's own ALE curve on
    the same data (exact for additive truths), and per-method RMSE over
    the central 90% of breakpoints is reported.
    """
    j = data.index(j)
    start = model.ledger.total_rows_predicted
    ale = ale_first(model, data, j, K)
    after_ale = model.ledger.total_rows_predicted
    pd = pd_effect(model, data, [j], grid=[ale.breakpoints[1:]])
    after_pd = model.ledger.total_rows_predicted
    m = m_effect(model, data, j, K)
    after_m = model.ledger.total_rows_predicted

    counts = ale.counts
    nan = np.array([np.nan])
    curves = {
        "ALE": ale.centered,
        "PD": np.concatenate([nan, center(pd.values, counts)]),
        "M": np.concatenate([nan, center(m.values, counts)]),
    }
    comp = Comparison(
        feature=j,
        name=ale.name,
        breakpoints=ale.breakpoints,
        counts=counts,
        curves=curves,
        ledger={"ALE": after_ale - start, "PD": after_pd - after_ale, "M": after_m - after_pd},
        truth=truth_label,
    )
    if truth_model is not None:
        truth_curve = ale_first(truth_model, data, j, K).centered
        comp.curves["truth"] = truth_curve
        comp.central = central_mask(data, j, ale.breakpoints)
        comp.rmse = {
            name: rmse_against(curves[name], truth_curve, comp.central) for name in ("ALE", "PD", "M")
        }
    return comp
