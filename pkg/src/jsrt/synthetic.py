"""Bundled synthetic regression problems.

Each problem draws features uniformly from the unit cube and assigns targets
from a random axis-aligned piecewise-constant function plus Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset


@dataclass(frozen=True)
class PiecewiseSpec:
    name: str
    n: int
    d: int
    cells: int
    signal_sd: float
    noise_sd: float
    seed: int


# n spans 500..5000; cell counts and noise keep fitted trees well above 10 leaves
SUITE = (
    PiecewiseSpec("pw_small", 500, 3, 12, 3.0, 2.0, 101),
    PiecewiseSpec("pw_noisy", 1000, 4, 16, 2.0, 3.0, 102),
    PiecewiseSpec("pw_mid", 1500, 5, 24, 4.0, 2.5, 103),
    PiecewiseSpec("pw_wide", 2500, 8, 20, 3.0, 2.0, 104),
    PiecewiseSpec("pw_large", 4000, 4, 40, 5.0, 4.0, 105),
    PiecewiseSpec("pw_xlarge", 5000, 6, 32, 2.5, 2.0, 106),
)


def _random_cells(rng, d, cells):
    """Split the unit cube into ``cells`` boxes by repeatedly halving a box."""
    boxes = [(np.zeros(d), np.ones(d))]
    while len(boxes) < cells:
        i = int(rng.integers(len(boxes)))
        lo, hi = boxes.pop(i)
        a = int(rng.integers(d))
        cut = lo[a] + (hi[a] - lo[a]) * rng.uniform(0.25, 0.75)
        hi1 = hi.copy()
        hi1[a] = cut
        lo2 = lo.copy()
        lo2[a] = cut
        boxes += [(lo, hi1), (lo2, hi)]
    return boxes


def make_piecewise(spec: PiecewiseSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    boxes = _random_cells(rng, spec.d, spec.cells)
    levels = rng.normal(0.0, spec.signal_sd, size=len(boxes))
    X = rng.uniform(size=(spec.n, spec.d))
    signal = np.zeros(spec.n)
    for (lo, hi), level in zip(boxes, levels):
        inside = np.all((X >= lo) & (X < hi), axis=1)
        signal[inside] = level
    y = signal + rng.normal(0.0, spec.noise_sd, size=spec.n)
    return Dataset([f"x{j}" for j in range(spec.d)], X, y, spec.name)


def make_constant(n: int = 200, d: int = 3, value: float = 4.25, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset([f"x{j}" for j in range(d)], rng.uniform(size=(n, d)), np.full(n, value), "constant")


def suite(names=None) -> list[Dataset]:
    specs = SUITE if names is None else [s for s in SUITE if s.name in names]
    return [make_piecewise(s) for s in specs]


def by_name(name: str, n: int | None = None, seed: int | None = None) -> Dataset:
    """Look up a bundled problem, optionally overriding its size or seed."""
    if name == "constant":
        return make_constant(n or 200)
    for s in SUITE:
        if s.name == name:
            if n is not None or seed is not None:
                s = PiecewiseSpec(s.name, n or s.n, s.d, s.cells, s.signal_sd, s.noise_sd,
                                  s.seed if seed is None else seed)
            return make_piecewise(s)
    raise KeyError(f"unknown synthetic dataset {name!r}")
