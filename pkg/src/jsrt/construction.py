"""Tree construction with jointly shrunk child values (C-JSRT / CP-JSRT).

While a node is being split, each candidate's two children are estimated
together with every other current leaf of the partial tree using the scaled
James-Stein estimator, and the split with the smallest squared loss under
those shrunk child values wins. With fewer than three other leaves the
children fall back to their own means.
"""

from __future__ import annotations

import math

import numpy as np

from .config import C_JSRT, CP_JSRT, InductionConfig
from .errors import ConfigError
from .shrinkage import apply_js_to_leaves, shrink_factor_of
from .tree import (
    Frontier,
    SplitResult,
    TreeModel,
    _two_child_loss,
    best_split,
    enumerate_candidates,
    grow_tree,
    leaf_stats,
    select_candidate,
)

# other current leaves required before children are estimated jointly
MIN_FRONTIER = 3

JsSplitOutcome = SplitResult


def js_best_split(
    X: np.ndarray,
    y: np.ndarray,
    frontier,
    config: InductionConfig,
    order: np.ndarray | None = None,
) -> JsSplitOutcome | None:
    """Best split when child values are shrunk jointly with the frontier.

    ``frontier`` is a :class:`Frontier` or a sequence of ``LeafStats``;
    ``order`` optionally passes presorted feature orders of ``X``.
    """
    if config.js is None:
        raise ConfigError("js_best_split needs a JS configuration")
    if not isinstance(frontier, Frontier):
        frontier = Frontier.from_leaves(frontier)
    if len(frontier) < MIN_FRONTIER:
        return best_split(X, y, config, order)

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    cand = enumerate_candidates(X, y, config.min_leaf, order)
    if cand is None:
        return None
    lam = config.js.lam
    floor = config.js.variance_floor

    fn, fm, fv = frontier.n, frontier.mean, frontier.variance
    m = fm.shape[0] + 2

    # frontier part of the gamma denominator as a function of the grand mean:
    # sum w (fm - gm)^2 = spread + W * (gm - mu)^2
    fw = fn / np.maximum(fv, floor)
    W = float(fw.sum())
    mu = float(fw @ fm) / W
    spread = float(fw @ ((fm - mu) ** 2))
    fsum = float(fm.sum())

    # candidate statistics, means kept relative to the node centre
    nl = cand.n_left
    nr = X.shape[0] - nl
    ml = cand.sum_left / nl
    mr = cand.sum_right / nr
    wl = nl / np.maximum(cand.sse_left / (nl - 1), floor)
    wr = nr / np.maximum(cand.sse_right / (nr - 1), floor)
    gm = (fsum - (m - 2) * cand.center + ml + mr) / m
    dl, dr = ml - gm, mr - gm
    denom = spread + W * (gm + cand.center - mu) ** 2 + wl * dl * dl + wr * dr * dr
    if lam == 0.0:
        approx = cand.sse_left + cand.sse_right
    else:
        with np.errstate(divide="ignore"):
            f = np.maximum(0.0, 1.0 - lam * (m - 3) / denom)
        # children valued at gm + f * (mean - gm) add n * (1 - f)^2 * (mean - gm)^2
        g = (1.0 - f) ** 2
        approx = cand.sse_left + cand.sse_right + g * (nl * dl * dl + nr * dr * dr)

    def exact(j):
        left, right = cand.partition(j)
        yl, yr = y[left], y[right]
        sl, sr = leaf_stats(yl), leaf_stats(yr)
        e1, e2 = _shrunk_pair(sl, sr)
        return _two_child_loss(yl, e1, yr, e2), e1, e2, sl, sr, left, right

    def _shrunk_pair(sl, sr):
        # the joint estimate restricted to the two children, in scalar form
        g = (fsum + sl.mean + sr.mean) / m
        w1 = sl.n / max(sl.variance, floor)
        w2 = sr.n / max(sr.variance, floor)
        a, b, c = g - mu, sl.mean - g, sr.mean - g
        den = spread + W * a * a + w1 * b * b + w2 * c * c
        f = shrink_factor_of((m - 3) / den if den > 0 else math.inf, lam)
        if f == 1.0:
            return sl.mean, sr.mean
        return g + f * b, g + f * c

    j, (loss, e1, e2, sl, sr, left, right) = select_candidate(cand.masked(approx), cand.sst, exact)
    return SplitResult(cand.rule(j), left, right, loss, e1, e2, sl, sr)


def fit_js_tree(X, y, config: InductionConfig) -> TreeModel:
    """Grow a tree whose splits are scored with shrunk child values.

    CP-JSRT additionally re-estimates the final leaves jointly (``lam = 1``);
    C-JSRT keeps the leaf means.
    """
    if config.method not in (C_JSRT, CP_JSRT):
        raise ConfigError(f"fit_js_tree builds C-JSRT or CP-JSRT, not {config.method}")
    if config.js.lam == 0.0:
        # shrink factor 1: every candidate keeps its child means, as in CART
        model = grow_tree(X, y, config, lambda Xn, yn, _front, order: best_split(Xn, yn, config, order))
    else:
        model = grow_tree(X, y, config,
                          lambda Xn, yn, front, order: js_best_split(Xn, yn, front, config, order),
                          with_frontier=True)
    model.metadata["lambda"] = config.js.lam
    if config.method == CP_JSRT:
        model = apply_js_to_leaves(model, config.js)
    return model
