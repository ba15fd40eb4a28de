"""Neighbour-based leaf predictors used as comparison baselines.

Both search the whole training set by brute force with Euclidean distance;
no index structure is built, on purpose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionMismatch, EmptyInput, KTooLarge

# rows per distance block, keeps the (rows, n_train, d) temporary small
_BLOCK_BYTES = 32 * 2**20


@dataclass(frozen=True)
class NeighborConfig:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")


def _check(train_X, train_y, X):
    train_X = np.asarray(train_X, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if train_y.size == 0:
        raise EmptyInput("empty training set")
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != train_X.shape[1]:
        raise DimensionMismatch(f"expected {train_X.shape[1]} features, got {X.shape[1]}")
    return train_X, train_y, X, single


def _distance_blocks(train_X, X):
    n, d = train_X.shape
    step = max(1, _BLOCK_BYTES // (8 * n * d))
    for lo in range(0, X.shape[0], step):
        diff = X[lo:lo + step, None, :] - train_X[None, :, :]
        yield lo, np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def knn_predict(train_X, train_y, X, config: NeighborConfig | None = None):
    """Mean target of the ``k`` nearest training points.

    Distance ties go to the lower training index. ``X`` may be a single
    vector (returns a float) or a matrix of rows.
    """
    config = config or NeighborConfig()
    train_X, train_y, X, single = _check(train_X, train_y, X)
    k = config.k
    if k > train_y.shape[0]:
        raise KTooLarge(f"k={k} exceeds training size {train_y.shape[0]}")
    out = np.empty(X.shape[0])
    for lo, dist in _distance_blocks(train_X, X):
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
        out[lo:lo + dist.shape[0]] = train_y[nearest].mean(axis=1)
    return float(out[0]) if single else out


def kernel_predict(train_X, train_y, X):
    """Inverse-distance weighted mean over all training points.

    A query sitting exactly on training points returns the plain mean of
    those points' targets.
    """
    train_X, train_y, X, single = _check(train_X, train_y, X)
    out = np.empty(X.shape[0])
    for lo, dist in _distance_blocks(train_X, X):
        zero = dist == 0.0
        hit = zero.any(axis=1)
        with np.errstate(divide="ignore"):
            w = 1.0 / dist
        w[hit] = zero[hit]
        out[lo:lo + dist.shape[0]] = (w @ train_y) / w.sum(axis=1)
    return float(out[0]) if single else out
