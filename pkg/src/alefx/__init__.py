"""Accumulated local effects (ALE), partial dependence and marginal plots
for black-box models."""
from ._kernels import BACKEND
from .baselines import MEffect, PDEffect, m_effect, pd_effect
from .data import (
    DataError,
    Dataset,
    QuantilePartition,
    build_quantile_partition,
    joint_cell_counts,
    joint_count_array,
    load_csv,
    locate_bin,
)
from .first import EffectCurve, ale_first, evaluate_curve
from .higher import (
    EffectGrid,
    ale_general,
    ale_general_uncentered,
    decomposition_residual,
    extract_lower_order,
    finite_difference_general,
)
from .predictor import EvalLedger, FunctionPredictor, PredictionError, Predictor
from .second import (
    EffectSurface,
    ale_second,
    impute_empty_cells,
    local_effect_surface,
    second_order_difference,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DataError",
    "Dataset",
    "EffectCurve",
    "EffectGrid",
    "EffectSurface",
    "EvalLedger",
    "FunctionPredictor",
    "MEffect",
    "PDEffect",
    "PredictionError",
    "Predictor",
    "QuantilePartition",
    "ale_first",
    "ale_general",
    "ale_general_uncentered",
    "ale_second",
    "build_quantile_partition",
    "decomposition_residual",
    "evaluate_curve",
    "extract_lower_order",
    "finite_difference_general",
    "impute_empty_cells",
    "joint_cell_counts",
    "joint_count_array",
    "load_csv",
    "local_effect_surface",
    "locate_bin",
    "m_effect",
    "pd_effect",
    "second_order_difference",
]
