import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jsrt import fit
from jsrt.config import InductionConfig, JsConfig
from jsrt.construction import fit_js_tree, js_best_split
from jsrt.errors import ConfigError
from jsrt.shrinkage import apply_js_to_leaves
from jsrt.tree import LeafStats, best_split, fit_cart, grow_tree

from oracles import fsum_mean, js_direct, sq


def js_cfg(lam=1.0, min_split=2, min_leaf=2, method="C-JSRT"):
    return InductionConfig(min_split=min_split, min_leaf=min_leaf, method=method, js=JsConfig(lam=lam))


FRONTIER3 = [LeafStats(i, 10, m, 1.0) for i, m in enumerate([0.0, 10.0, 20.0])]


def unbiased_var(v):
    c = fsum_mean(v)
    return math.fsum(sq(a - c) for a in v) / (len(v) - 1)


def brute_force_js_split(X, y, frontier, lam, min_leaf):
    """Score every (feature, midpoint) with children shrunk jointly with the frontier."""
    n, d = len(y), len(X[0])
    best = None
    for a in range(d):
        values = sorted({row[a] for row in X})
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2
            if not thr < hi:
                thr = lo
            left = [y[i] for i in range(n) if X[i][a] <= thr]
            right = [y[i] for i in range(n) if X[i][a] > thr]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            est, _, _ = js_direct(
                [s.n for s in frontier] + [len(left), len(right)],
                [s.mean for s in frontier] + [fsum_mean(left), fsum_mean(right)],
                [s.variance for s in frontier] + [unbiased_var(left), unbiased_var(right)],
                lam,
            )
            c1, c2 = est[-2], est[-1]
            loss = math.fsum([sq(v - c1) for v in left] + [sq(v - c2) for v in right])
            if best is None or loss < best[2]:
                best = (a, thr, loss)
    return best


def test_empty_frontier_is_plain_split():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(50, 3)), rng.normal(size=50)
    res = js_best_split(X, y, [], js_cfg())
    ref = best_split(X, y, js_cfg())
    assert res.rule == ref.rule and res.loss == ref.loss
    assert res.c1 == ref.c1 and res.c2 == ref.c2


def test_small_frontier_uses_means():
    rng = np.random.default_rng(1)
    X, y = rng.normal(size=(30, 2)), rng.normal(size=30)
    res = js_best_split(X, y, FRONTIER3[:2], js_cfg(lam=40.0))
    assert res.rule == best_split(X, y, js_cfg()).rule
    assert res.c1 == fsum_mean(y[res.left].tolist())


def test_three_leaf_frontier_matches_five_group_estimate():
    # one feature, min_leaf 5: the only feasible cut is between 5 and 6
    X = np.arange(1.0, 11.0)[:, None]
    y = np.array([4.0, 5.0, 6.0, 5.0, 5.0, 14.0, 15.0, 16.0, 15.0, 15.0])
    res = js_best_split(X, y, FRONTIER3, js_cfg(min_leaf=5))
    assert res.rule.threshold == 5.5
    # children: n 5, mean 5 and 15, variance 0.5
    est, gm, f = js_direct([10, 10, 10, 5, 5], [0.0, 10.0, 20.0, 5.0, 15.0], [1.0, 1.0, 1.0, 0.5, 0.5])
    assert gm == 10.0
    assert 0.0 < f < 1.0
    assert res.c1 == pytest.approx(est[3], rel=1e-13)
    assert res.c2 == pytest.approx(est[4], rel=1e-13)
    expected = math.fsum([sq(v - est[3]) for v in y[:5]] + [sq(v - est[4]) for v in y[5:]])
    assert res.loss == pytest.approx(expected, rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(
    n=st.integers(6, 40),
    d=st.integers(1, 3),
    seed=st.integers(0, 10**6),
    lam=st.sampled_from([0.5, 1.0, 10.0, 45.0]),
    m=st.integers(3, 8),
)
def test_matches_brute_force_js_split(n, d, seed, lam, m):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)).round(2)
    y = rng.normal(size=n) * 5
    frontier = [LeafStats(i, int(rng.integers(2, 30)), float(rng.normal() * 5), float(rng.uniform(0.1, 10)))
                for i in range(m)]
    res = js_best_split(X, y, frontier, js_cfg(lam=lam))
    ref = brute_force_js_split(X.tolist(), y.tolist(), frontier, lam, 2)
    if ref is None:
        assert res is None
        return
    assert res.loss == pytest.approx(ref[2], rel=1e-10, abs=1e-12)
    # the chosen pair is always a genuine minimizer; the pair itself agrees unless the
    # two best losses are within rounding of each other
    if abs(res.loss - ref[2]) == 0.0:
        assert (res.rule.feature_index, res.rule.threshold) == ref[:2]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(10, 60), seed=st.integers(0, 10**6), lam=st.sampled_from([1.0, 20.0]))
def test_js_loss_not_below_mle_loss_for_same_pair(n, seed, lam):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(n, 2)), rng.normal(size=n) * 3
    frontier = [LeafStats(i, 10, float(v), 1.0) for i, v in enumerate(rng.normal(size=5) * 4)]
    res = js_best_split(X, y, frontier, js_cfg(lam=lam))
    yl, yr = y[res.left].tolist(), y[res.right].tolist()
    cl, cr = fsum_mean(yl), fsum_mean(yr)
    mle_loss = math.fsum([sq(v - cl) for v in yl] + [sq(v - cr) for v in yr])
    assert res.loss >= mle_loss * (1 - 1e-12)
    # shrunk child values sit between the child mean and the joint grand mean
    means = [s.mean for s in frontier] + [cl, cr]
    gm = fsum_mean(means)
    for c, mu in ((res.c1, cl), (res.c2, cr)):
        assert min(mu, gm) - 1e-9 <= c <= max(mu, gm) + 1e-9


def synthetic(n=800, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, 3))
    y = np.floor(X[:, 0] * 6) * 2 + np.where(X[:, 1] > 0.4, 3.0, 0.0) + rng.normal(size=n) * 1.5
    return X, y


def test_lambda_zero_tree_equals_cart():
    X, y = synthetic()
    cart = fit_cart(X, y, InductionConfig(min_split=20, min_leaf=5))
    js = fit_js_tree(X, y, js_cfg(lam=0.0, min_split=20, min_leaf=5))
    assert cart.n_leaves > 10
    assert js.same_structure(cart)
    np.testing.assert_array_equal(js.leaf_predictions, cart.leaf_predictions)


def test_lambda_zero_cp_equals_p_jsrt():
    X, y = synthetic(seed=3)
    cp = fit_js_tree(X, y, js_cfg(lam=0.0, min_split=20, min_leaf=5, method="CP-JSRT"))
    pj = apply_js_to_leaves(fit_cart(X, y, InductionConfig(min_split=20, min_leaf=5)))
    assert cp.same_structure(pj)
    np.testing.assert_array_equal(cp.leaf_predictions, pj.leaf_predictions)


def test_c_jsrt_leaf_values_are_means_and_cp_shrinks():
    X, y = synthetic(seed=4)
    c = fit_js_tree(X, y, js_cfg(lam=30.0, min_split=20, min_leaf=5))
    np.testing.assert_array_equal(c.leaf_predictions, [s.mean for s in c.leaves])
    assert c.metadata["lambda"] == 30.0
    cp = fit_js_tree(X, y, js_cfg(lam=30.0, min_split=20, min_leaf=5, method="CP-JSRT"))
    assert cp.same_structure(c)
    assert cp.metadata["used_js"] is True
    ref, _, _ = js_direct([s.n for s in c.leaves], [s.mean for s in c.leaves], [s.variance for s in c.leaves], 1.0)
    np.testing.assert_allclose(cp.leaf_predictions, ref, rtol=1e-12)


def test_leaves_partition_training_set():
    X, y = synthetic(seed=5)
    model = fit_js_tree(X, y, js_cfg(lam=10.0, min_split=20, min_leaf=5))
    counts = np.bincount(model.apply(X), minlength=model.n_leaves)
    assert counts.tolist() == [s.n for s in model.leaves]
    assert sum(counts) == y.size
    assert min(counts) >= 5


def test_deterministic():
    X, y = synthetic(seed=6)
    a = fit_js_tree(X, y, js_cfg(lam=5.0, min_split=20, min_leaf=5))
    b = fit_js_tree(X, y, js_cfg(lam=5.0, min_split=20, min_leaf=5))
    assert a.same_structure(b)
    np.testing.assert_array_equal(a.leaf_predictions, b.leaf_predictions)


def test_method_dispatch_and_errors():
    X, y = synthetic(n=200)
    with pytest.raises(ConfigError):
        fit_js_tree(X, y, InductionConfig())
    with pytest.raises(ConfigError):
        js_best_split(X, y, [], InductionConfig())
    assert fit(X, y, js_cfg(method="CP-JSRT", min_split=20, min_leaf=5)).config.method == "CP-JSRT"
    assert fit(X, y, InductionConfig(method="P-JSRT")).config.method == "P-JSRT"


@settings(max_examples=40, deadline=None)
@given(n=st.integers(10, 60), seed=st.integers(0, 10**6))
def test_lambda_zero_js_search_is_plain_search(n, seed):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(n, 3)).round(1), rng.normal(size=n)
    frontier = [LeafStats(i, 10, float(v), 1.0) for i, v in enumerate(rng.normal(size=6))]
    res = js_best_split(X, y, frontier, js_cfg(lam=0.0))
    ref = best_split(X, y, js_cfg())
    assert (res.rule, res.loss, res.c1, res.c2) == (ref.rule, ref.loss, ref.c1, ref.c2)


def test_lambda_zero_growth_through_js_search_equals_cart():
    # drive the JS search itself at lambda 0 rather than the fit_js_tree shortcut
    X, y = synthetic(seed=7)
    config = js_cfg(lam=0.0, min_split=20, min_leaf=5)
    grown = grow_tree(X, y, config, lambda Xn, yn, front, order: js_best_split(Xn, yn, front, config, order),
                      with_frontier=True)
    cart = fit_cart(X, y, InductionConfig(min_split=20, min_leaf=5))
    assert grown.same_structure(cart)
    np.testing.assert_array_equal(grown.leaf_predictions, cart.leaf_predictions)
