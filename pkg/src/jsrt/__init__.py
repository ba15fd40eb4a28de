"""Regression trees with James-Stein leaf estimation."""

from .baselines import NeighborConfig, kernel_predict, knn_predict
from .config import InductionConfig, JsConfig
from .construction import fit_js_tree, js_best_split
from .data import Dataset, FoldPlan, load_csv, make_folds, mse
from .persist import load_model, save_model
from .shrinkage import JsResult, apply_js_to_leaves, js_gamma, js_shrink, shrink_weight
from .tree import LeafStats, SplitRule, TreeModel, best_split, fit_cart, predict

__version__ = "0.1.0"


def fit(X, y, config: InductionConfig | None = None) -> TreeModel:
    """Fit any tree method named by ``config.method``."""
    config = config or InductionConfig()
    if config.method in ("C-JSRT", "CP-JSRT"):
        return fit_js_tree(X, y, config)
    model = fit_cart(X, y, InductionConfig(config.min_split, config.min_leaf))
    if config.method == "P-JSRT":
        model = apply_js_to_leaves(model, config.js)
    return model


__all__ = [
    "Dataset", "FoldPlan", "InductionConfig", "JsConfig", "JsResult", "LeafStats",
    "NeighborConfig", "SplitRule", "TreeModel", "apply_js_to_leaves", "best_split",
    "fit", "fit_cart", "fit_js_tree", "js_best_split", "js_gamma", "js_shrink",
    "kernel_predict", "knn_predict", "load_csv", "load_model", "make_folds", "mse",
    "predict", "save_model", "shrink_weight",
]
