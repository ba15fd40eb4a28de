"""CART regression trees.

Split search runs on sorted prefix sums for speed. Prefix-sum losses are only
used to shortlist candidates: every candidate within a small band of the best
approximate loss is re-scored with a correctly rounded sum, so the chosen
split is the same one an exhaustive enumeration with exact sums would pick.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import CART, InductionConfig
from .errors import DimensionMismatch, EmptyTrainingSet, InvalidStats

# relative width of the shortlist band around the best approximate loss
_BAND = 1e-9


@dataclass(frozen=True)
class SplitRule:
    """Route ``x[feature_index] <= threshold`` left, everything else right."""

    feature_index: int
    threshold: float

    def goes_left(self, x) -> bool:
        return x[self.feature_index] <= self.threshold


@dataclass(frozen=True)
class LeafStats:
    leaf_id: int
    n: int
    mean: float
    variance: float


def exact_mean(y) -> float:
    return math.fsum(y.tolist() if isinstance(y, np.ndarray) else y) / len(y)


def leaf_stats(y, leaf_id: int = -1) -> LeafStats:
    """Sample count, mean and unbiased variance of a node's targets."""
    return _stats_and_squares(y, leaf_id)[0]


def _stats_and_squares(y, leaf_id: int = -1) -> tuple[LeafStats, list]:
    # the squared residuals are returned so callers can reuse them in a loss
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if n < 2:
        raise InvalidStats(f"a leaf needs at least 2 samples, got {n}")
    m = math.fsum(y.tolist()) / n
    d = y - m
    sq = (d * d).tolist()
    return LeafStats(leaf_id, n, m, math.fsum(sq) / (n - 1)), sq


@dataclass
class SplitResult:
    rule: SplitRule
    left: np.ndarray
    right: np.ndarray
    loss: float
    c1: float = math.nan
    c2: float = math.nan
    left_stats: LeafStats | None = None
    right_stats: LeafStats | None = None


@dataclass
class Candidates:
    """Prefix-sum statistics of every cut position of one node.

    Matrices are indexed ``[feature, position]``; position ``p`` puts the
    first ``lo + 1 + p`` samples (in that feature's sorted order) on the
    left. ``valid`` marks positions between two distinct feature values.
    Child sums are taken over targets centred on the node mean.
    """

    n_left: np.ndarray
    sum_left: np.ndarray
    sum_right: np.ndarray
    sse_left: np.ndarray
    sse_right: np.ndarray
    valid: np.ndarray
    xs: np.ndarray
    order: np.ndarray
    lo: int
    center: float
    sst: float

    def locate(self, j: int) -> tuple[int, int]:
        """Feature and cut (left size) of flat candidate index ``j``."""
        f, p = divmod(j, self.valid.shape[1])
        return f, self.lo + 1 + p

    def rule(self, j: int) -> SplitRule:
        f, c = self.locate(j)
        lo, hi = float(self.xs[f, c - 1]), float(self.xs[f, c])
        mid = 0.5 * (lo + hi)
        # adjacent floats: the midpoint may round up onto the upper value
        return SplitRule(f, mid if mid < hi else lo)

    def partition(self, j: int):
        f, c = self.locate(j)
        return np.sort(self.order[f, :c]), np.sort(self.order[f, c:])

    def masked(self, loss: np.ndarray) -> np.ndarray:
        """``loss`` with infeasible positions set to infinity."""
        return np.where(self.valid, loss, np.inf)


def sorted_orders(X: np.ndarray) -> np.ndarray:
    """Row ``j`` lists the sample indices stably sorted by feature ``j``."""
    return np.argsort(X.T, axis=1, kind="stable")


def enumerate_candidates(X: np.ndarray, y: np.ndarray, min_leaf: int,
                         order: np.ndarray | None = None) -> Candidates | None:
    """Prefix-sum statistics for every cut of one node, or None if none is feasible.

    ``order`` may pass in precomputed :func:`sorted_orders` of ``X``.
    """
    n = X.shape[0]
    lo, hi = min_leaf - 1, n - min_leaf  # cut after sorted positions lo..hi-1
    if lo >= hi:
        return None
    if order is None:
        order = sorted_orders(X)
    xs = np.take_along_axis(X.T, order, axis=1)
    valid = xs[:, lo:hi] < xs[:, lo + 1:hi + 1]
    if not valid.any():
        return None
    center = float(y.sum()) / n
    ys = (y - center)[order]
    cs = np.cumsum(ys, axis=1)
    cq = np.cumsum(ys * ys, axis=1)
    nl = np.arange(lo + 1, hi + 1, dtype=np.float64)
    sl = cs[:, lo:hi]
    ql = cq[:, lo:hi]
    # per-feature totals differ only by summation order
    sr = cs[:, -1:] - sl
    qr = cq[:, -1:] - ql
    return Candidates(
        n_left=nl,
        sum_left=sl,
        sum_right=sr,
        sse_left=np.maximum(ql - sl * sl / nl, 0.0),
        sse_right=np.maximum(qr - sr * sr / (n - nl), 0.0),
        valid=valid,
        xs=xs,
        order=order,
        lo=lo,
        center=center,
        sst=float(cq[0, -1]),
    )


def select_candidate(
    approx: np.ndarray,
    scale: float,
    exact: Callable[[int], tuple],
) -> tuple[int, tuple]:
    """Shortlist near-minimal candidates and return the exact winner.

    ``approx`` is a (feature, position) loss matrix with infeasible entries
    set to infinity; candidates are numbered in its row-major order.
    ``exact(j)`` returns a tuple whose first item is the exact loss. Ties
    resolve to the lowest index, i.e. lowest feature, then lowest threshold.
    """
    flat = approx.ravel()
    best_a = float(flat.min())
    tol = _BAND * max(scale, abs(best_a))
    short = np.flatnonzero(flat <= best_a + tol)
    best_j, best = -1, None
    for j in short.tolist():
        res = exact(j)
        if best is None or res[0] < best[0]:
            best_j, best = j, res
    return best_j, best


def best_split(X: np.ndarray, y: np.ndarray, config: InductionConfig,
               order: np.ndarray | None = None) -> SplitResult | None:
    """Best squared-loss split with child means as child values.

    Returns None when no threshold leaves ``min_leaf`` samples on both sides.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    cand = enumerate_candidates(X, y, config.min_leaf, order)
    if cand is None:
        return None

    def exact(j):
        left, right = cand.partition(j)
        sl, ql = _stats_and_squares(y[left])
        sr, qr = _stats_and_squares(y[right])
        return math.fsum(ql + qr), sl, sr, left, right

    approx = cand.masked(cand.sse_left + cand.sse_right)
    j, (loss, sl, sr, left, right) = select_candidate(approx, cand.sst, exact)
    return SplitResult(cand.rule(j), left, right, loss, sl.mean, sr.mean, sl, sr)


def _two_child_loss(yl, c1, yr, c2) -> float:
    dl = yl - c1
    dr = yr - c2
    return math.fsum((dl * dl).tolist() + (dr * dr).tolist())


@dataclass
class TreeModel:
    """Array-encoded binary tree.

    ``feature[i] == -1`` marks node ``i`` as a leaf whose id is ``leaf[i]``.
    ``leaf_predictions`` is indexed by leaf id; ``leaves[i].leaf_id == i``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf: np.ndarray
    leaves: tuple[LeafStats, ...]
    leaf_predictions: np.ndarray
    config: InductionConfig
    n_features: int
    metadata: dict = field(default_factory=dict)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def same_structure(self, other: "TreeModel") -> bool:
        return (
            np.array_equal(self.feature, other.feature)
            and np.array_equal(self.threshold, other.threshold)
            and np.array_equal(self.left, other.left)
            and np.array_equal(self.right, other.right)
            and np.array_equal(self.leaf, other.leaf)
            and self.leaves == other.leaves
        )

    def apply(self, X) -> np.ndarray:
        """Leaf id reached by every row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got shape {X.shape}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return self.leaf[node]

    def predict(self, X) -> np.ndarray:
        return self.leaf_predictions[self.apply(X)]


def predict(model: TreeModel, x):
    """Predict one feature vector (returns a float) or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        if x.shape[0] != model.n_features:
            raise DimensionMismatch(f"expected {model.n_features} features, got {x.shape[0]}")
        return float(model.predict(x[None, :])[0])
    return model.predict(x)


class Frontier:
    """Stats of the current leaves of a partially grown tree.

    Held as parallel arrays; the node being split is never included.
    """

    def __init__(self, n, mean, variance):
        self.n = np.asarray(n, dtype=np.float64)
        self.mean = np.asarray(mean, dtype=np.float64)
        self.variance = np.asarray(variance, dtype=np.float64)

    @classmethod
    def from_leaves(cls, leaves) -> "Frontier":
        leaves = list(leaves)
        return cls([s.n for s in leaves], [s.mean for s in leaves], [s.variance for s in leaves])

    @property
    def leaves(self) -> list[LeafStats]:
        return [LeafStats(i, int(n), float(m), float(v))
                for i, (n, m, v) in enumerate(zip(self.n, self.mean, self.variance))]

    def __len__(self):
        return self.n.shape[0]


# chooser(X_node, y_node, frontier, order) -> SplitResult | None
Chooser = Callable[[np.ndarray, np.ndarray, "Frontier | None", np.ndarray], "SplitResult | None"]


def grow_tree(X, y, config: InductionConfig, chooser: Chooser, with_frontier: bool = False) -> TreeModel:
    """Breadth-first greedy growth shared by CART and the JS-built trees.

    With ``with_frontier`` the chooser receives a :class:`Frontier` of every
    current leaf except the node being split; otherwise it receives None.
    Features are sorted once at the root; each child's per-feature orders
    are filtered out of its parent's, which keeps them stably sorted.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] == 0:
        raise EmptyTrainingSet("cannot fit a tree on zero samples")
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch("features/targets shape mismatch")

    feature, threshold, left, right = [-1], [0.0], [-1], [-1]
    n_all = y.shape[0]
    # per queued node: sample indices (ascending) and per-feature sorted orders
    samples = {0: (np.arange(n_all), sorted_orders(X))}
    local = np.empty(n_all, dtype=np.int64)
    in_left = np.zeros(n_all, dtype=bool)
    stats = [_node_stats(y)]
    # per-node buffers; current[i] marks node i as a leaf of the partial tree
    cap = 2 * (y.shape[0] // max(config.min_leaf, 1)) + 3
    buf = np.zeros((3, cap))
    buf[:, 0] = stats[0].n, stats[0].mean, stats[0].variance
    current = np.zeros(cap, dtype=bool)
    current[0] = True
    queue = deque([0])
    while queue:
        node = queue.popleft()
        idx, order = samples.pop(node)
        yn = y[idx]
        if idx.size < config.min_split or yn.min() == yn.max():
            continue
        frontier = None
        if with_frontier:
            mask = current.copy()
            mask[node] = False
            nb, mb, vb = buf[:, mask]
            frontier = Frontier(nb, mb, vb)
        local[idx] = np.arange(idx.size)
        res = chooser(X[idx], yn, frontier, local[order])
        if res is None:
            continue
        in_left[idx[res.left]] = True
        go_left = in_left[order]
        in_left[idx] = False
        d = order.shape[0]
        child_orders = {True: order[go_left].reshape(d, -1), False: order[~go_left].reshape(d, -1)}
        stats_by_side = {
            True: res.left_stats or _node_stats(y[idx[res.left]]),
            False: res.right_stats or _node_stats(y[idx[res.right]]),
        }
        current[node] = False
        feature[node] = res.rule.feature_index
        threshold[node] = res.rule.threshold
        for side, sub in ((left, res.left), (right, res.right)):
            child = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            side[node] = child
            samples[child] = (idx[sub], child_orders[side is left])
            st = stats_by_side[side is left]
            stats.append(st)
            buf[:, child] = st.n, st.mean, st.variance
            current[child] = True
            queue.append(child)

    feature = np.array(feature, dtype=np.int64)
    leaf = np.full(feature.shape[0], -1, dtype=np.int64)
    leaves = []
    for node in np.flatnonzero(feature < 0):
        leaf[node] = len(leaves)
        s = stats[int(node)]
        leaves.append(LeafStats(len(leaves), s.n, s.mean, s.variance))
    return TreeModel(
        feature=feature,
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        leaf=leaf,
        leaves=tuple(leaves),
        leaf_predictions=np.array([s.mean for s in leaves], dtype=np.float64),
        config=config,
        n_features=X.shape[1],
    )


def _node_stats(y) -> LeafStats:
    if len(y) >= 2:
        return leaf_stats(y)
    # only reachable for a root with one sample; no variance is defined
    return LeafStats(-1, len(y), exact_mean(y), 0.0)


def fit_cart(X, y, config: InductionConfig | None = None) -> TreeModel:
    """Grow a CART tree; leaves predict their sample means."""
    if config is None:
        config = InductionConfig()
    if config.method != CART:
        config = InductionConfig(config.min_split, config.min_leaf, CART)
    return grow_tree(X, y, config, lambda Xn, yn, _front, order: best_split(Xn, yn, config, order))
