"""Positive-part James-Stein estimation of leaf values.

Leaf means are shrunk jointly towards their unweighted grand mean::

    gamma    = (m - 3) / sum_i n_i / var_i * (mean_i - GM)**2
    estimate = GM + max(0, 1 - lam * gamma) * (mean_i - GM)

with ``lam = 1`` for the plain estimator used at prediction time.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import C_JSRT, CART, CP_JSRT, P_JSRT, InductionConfig, JsConfig
from .errors import InvalidStats, NotJsEstimate, TooFewGroups
from .tree import LeafStats, TreeModel


@dataclass(frozen=True)
class JsResult:
    estimates: np.ndarray
    grand_mean: float
    gamma: float
    shrink_factor: float
    used_js: bool
    lam: float = 1.0


def _as_arrays(groups: Sequence[LeafStats]):
    n = np.array([g.n for g in groups], dtype=np.float64)
    means = np.array([g.mean for g in groups], dtype=np.float64)
    var = np.array([g.variance for g in groups], dtype=np.float64)
    return n, means, var


def _check(n, var):
    if (n < 2).any():
        raise InvalidStats("every group needs n_i >= 2")
    if (var < 0).any() or not np.isfinite(var).all():
        raise InvalidStats("group variances must be finite and non-negative")


def gamma_from_arrays(n, means, var, variance_floor: float = 1e-12) -> tuple[float, float]:
    """Return ``(gamma, grand_mean)``; gamma is +inf for a zero denominator."""
    m = means.shape[0]
    gm = float(np.mean(means))
    dev = means - gm
    denom = float(np.sum(n / np.maximum(var, variance_floor) * dev * dev))
    if denom == 0.0:
        return math.inf, gm
    return (m - 3) / denom, gm


def js_gamma(groups: Sequence[LeafStats], variance_floor: float = 1e-12) -> float:
    if len(groups) < 4:
        raise TooFewGroups(f"James-Stein needs at least 4 groups, got {len(groups)}")
    n, means, var = _as_arrays(groups)
    _check(n, var)
    return gamma_from_arrays(n, means, var, variance_floor)[0]


def shrink_factor_of(gamma: float, lam: float) -> float:
    # lam == 0 means plain MLE, including the 0 * inf case
    if lam == 0.0:
        return 1.0
    if math.isinf(gamma):
        return 0.0
    return max(0.0, 1.0 - lam * gamma)


def js_from_arrays(n, means, var, lam: float = 1.0, variance_floor: float = 1e-12) -> JsResult:
    _check(n, var)
    gamma, gm = gamma_from_arrays(n, means, var, variance_floor)
    f = shrink_factor_of(gamma, lam)
    if f == 1.0:
        est = means.copy()
    else:
        est = gm + f * (means - gm)
    return JsResult(est, gm, gamma, f, True, lam)


def js_shrink(groups: Sequence[LeafStats], config: JsConfig | None = None) -> JsResult:
    """Jointly estimate the group means with the scaled positive-part estimator."""
    config = config or JsConfig()
    if len(groups) < config.min_groups_js:
        raise TooFewGroups(
            f"James-Stein needs at least {config.min_groups_js} groups, got {len(groups)}"
        )
    n, means, var = _as_arrays(groups)
    return js_from_arrays(n, means, var, config.lam, config.variance_floor)


def shrink_weight(result: JsResult) -> float:
    """Weight placed on the grand mean, ``min(lam * gamma, 1)``."""
    if not result.used_js:
        raise NotJsEstimate("MLE fallback carries no shrink weight")
    return 1.0 - result.shrink_factor


def apply_js_to_leaves(model: TreeModel, config: JsConfig | None = None) -> TreeModel:
    """Re-estimate all leaf values of a fitted tree jointly.

    Trees with fewer than ``config.min_groups_js`` leaves keep their leaf
    means. The estimator always runs with ``lam = 1`` here; only the variance
    floor and the group gate are taken from ``config``.
    """
    config = config or JsConfig()
    leaves = model.leaves
    n = np.fromiter((s.n for s in leaves), np.float64, len(leaves))
    means = np.fromiter((s.mean for s in leaves), np.float64, len(leaves))
    if len(leaves) >= config.min_groups_js:
        var = np.fromiter((s.variance for s in leaves), np.float64, len(leaves))
        res = js_from_arrays(n, means, var, 1.0, config.variance_floor)
        preds = res.estimates
        meta = {
            "used_js": True,
            "gamma": res.gamma,
            "grand_mean": res.grand_mean,
            "shrink_factor": res.shrink_factor,
            "shrink_weight": shrink_weight(res),
        }
    else:
        if (n < 2).any():
            raise InvalidStats("every leaf needs n_i >= 2")
        preds = means
        meta = {"used_js": False}
    cfg = model.config
    if cfg.method == CART:
        cfg = InductionConfig(cfg.min_split, cfg.min_leaf, P_JSRT, config)
    elif cfg.method == C_JSRT:
        cfg = InductionConfig(cfg.min_split, cfg.min_leaf, CP_JSRT, cfg.js)
    return dataclasses.replace(
        model, leaf_predictions=preds, config=cfg, metadata={**model.metadata, **meta}
    )
