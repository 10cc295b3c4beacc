"""Built-in model sources: expressions, regression trees, synthetic data."""
from .expr import ExprEvalError, ExprModel, ExprSyntaxError, parse_expression
from .generators import GeneratorSpec, generate_synthetic
from .tree import TreeModel, fit_regression_tree

__all__ = [
    "ExprEvalError",
    "ExprModel",
    "ExprSyntaxError",
    "GeneratorSpec",
    "TreeModel",
    "eval_model_batch",
    "fit_regression_tree",
    "generate_synthetic",
    "parse_expression",
]


def eval_model_batch(model, rows):
    """Evaluate an expression or tree model on a row matrix (ledger-counted)."""
    return model.predict(rows)
