"""The batch prediction contract every black-box model is reached through."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class PredictionError(RuntimeError):
    """A model failed to produce valid predictions."""


@dataclass
class EvalLedger:
    """Running count of model rows evaluated."""

    total_rows_predicted: int = 0
    calls: int = 0

    def record(self, m: int) -> None:
        self.total_rows_predicted += int(m)
        self.calls += 1

    def reset(self) -> None:
        self.total_rows_predicted = 0
        self.calls = 0


class Predictor:
    """Base class for models: ``predict`` maps an ``m x d`` matrix to ``m`` values.

    Subclasses implement ``_predict``. The public ``predict`` validates
    shapes, records the row count in ``ledger`` and rejects non-finite
    output. Implementations must be deterministic.
    """

    label = "model"

    def __init__(self, ledger: EvalLedger | None = None):
        self.ledger = ledger if ledger is not None else EvalLedger()

    def _predict(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2:
            raise PredictionError(f"expected a 2-D row matrix, got shape {rows.shape}")
        self.ledger.record(rows.shape[0])
        out = np.asarray(self._predict(rows), dtype=np.float64).reshape(-1)
        if out.shape[0] != rows.shape[0]:
            raise PredictionError(
                f"{self.label}: {out.shape[0]} predictions for {rows.shape[0]} rows"
            )
        bad = ~np.isfinite(out)
        if bad.any():
            raise PredictionError(f"{self.label}: non-finite prediction at row {int(np.argmax(bad))}")
        return out

    __call__ = predict


class FunctionPredictor(Predictor):
    """Wrap any vectorized callable, e.g. a fitted estimator's ``predict``."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], label: str = "function",
                 ledger: EvalLedger | None = None):
        super().__init__(ledger)
        self.fn = fn
        self.label = label

    def _predict(self, rows):
        return self.fn(rows)
