"""Datasets, CSV ingestion, repeated k-fold plans and the MSE metric."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyAfterFiltering,
    EmptyInput,
    InvalidFoldCount,
    LengthMismatch,
    NonNumericColumn,
    TargetColumnMissing,
)


@dataclass(frozen=True)
class Dataset:
    feature_names: tuple[str, ...]
    features: np.ndarray
    targets: np.ndarray
    name: str = ""

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.targets, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise LengthMismatch("features row count must equal targets length")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise EmptyInput("dataset needs n >= 1 and d >= 1")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("dataset values must be finite")
        if len(self.feature_names) != X.shape[1]:
            raise ValueError("one feature name per column required")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.targets.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.feature_names, self.features[idx], self.targets[idx], self.name)


def _parse(cell: str) -> float | None:
    cell = cell.strip()
    if not cell:
        return None
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, target_column: str | int = -1, header: bool = True) -> Dataset:
    """Read a numeric CSV file into a :class:`Dataset`.

    Rows holding an empty or unparseable cell in any used column are dropped.
    A feature column without a single parseable cell is rejected with
    :class:`NonNumericColumn`, since categorical encoding is not supported.
    ``target_column`` is a header name or a (possibly negative) column index.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if header:
        if not rows:
            raise EmptyAfterFiltering(f"{path}: no header row")
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
    else:
        width = max((len(r) for r in rows), default=0)
        names = [f"x{j}" for j in range(width)]
    ncol = len(names)

    if isinstance(target_column, str):
        if target_column in names:
            t = names.index(target_column)
        elif target_column.lstrip("-").isdigit():
            t = int(target_column)
        else:
            raise TargetColumnMissing(f"{path}: no column named {target_column!r}")
    else:
        t = int(target_column)
    if not -ncol <= t < ncol:
        raise TargetColumnMissing(f"{path}: target index {t} out of range for {ncol} columns")
    t %= ncol
    feat_cols = [j for j in range(ncol) if j != t]
    if not feat_cols:
        raise NonNumericColumn(f"{path}: at least one feature column is required")

    parsed = []
    for r in rows:
        r = list(r) + [""] * (ncol - len(r))
        parsed.append([_parse(c) for c in r[:ncol]])

    for j in feat_cols:
        if rows and all(p[j] is None for p in parsed):
            if any(r[j].strip() if j < len(r) else "" for r in rows):
                raise NonNumericColumn(f"{path}: column {names[j]!r} is not numeric")

    kept = [p for p in parsed if all(v is not None for v in p)]
    if not kept:
        raise EmptyAfterFiltering(f"{path}: no complete numeric rows")
    arr = np.array(kept, dtype=np.float64)
    return Dataset(
        feature_names=[names[j] for j in feat_cols],
        features=arr[:, feat_cols],
        targets=arr[:, t],
        name=os.path.splitext(os.path.basename(path))[0],
    )


@dataclass(frozen=True)
class FoldPlan:
    """``assignments[r, i]`` is the test fold of sample ``i`` in repeat ``r``."""

    n: int
    k: int
    repeats: int
    seed: int
    assignments: np.ndarray

    def splits(self, repeat: int):
        """Yield ``(fold, train_idx, test_idx)`` for one repeat."""
        a = self.assignments[repeat]
        for f in range(self.k):
            yield f, np.flatnonzero(a != f), np.flatnonzero(a == f)


def make_folds(n: int, k: int, repeats: int = 1, seed: int = 0) -> FoldPlan:
    if k < 2 or k > n:
        raise InvalidFoldCount(f"need 2 <= k <= n, got k={k}, n={n}")
    if repeats < 1:
        raise InvalidFoldCount("repeats must be >= 1")
    base = np.arange(n) % k
    out = np.empty((repeats, n), dtype=np.int64)
    for r in range(repeats):
        rng = np.random.default_rng([int(seed), r])
        out[r, rng.permutation(n)] = base
    out.setflags(write=False)
    return FoldPlan(n, k, repeats, int(seed), out)


def mse(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape} vs {t.shape}")
    if p.size == 0:
        raise EmptyInput("mse of empty vectors")
    return float(np.mean((p - t) ** 2))
