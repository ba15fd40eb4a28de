"""Repeated k-fold benchmarks: MSE and timing tables, shrinkage analysis and
the lambda ablation.

All MSE fields of a report are a deterministic function of the run spec.
Timings are wall-clock prediction times and are kept in separate fields.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import synthetic
from .baselines import NeighborConfig, kernel_predict, knn_predict
from .config import (
    ALL_METHODS,
    C_JSRT,
    CART,
    CP_JSRT,
    KNNRT,
    KRT,
    P_JSRT,
    InductionConfig,
    JsConfig,
)
from .construction import fit_js_tree
from .data import Dataset, load_csv, make_folds, mse
from .errors import ConfigError, DatasetLoadError, InsufficientData
from .shrinkage import apply_js_to_leaves
from .tree import fit_cart

log = logging.getLogger(__name__)

SPEC_VERSION = 1
REPORT_VERSION = 1
TABLE_ORDER = (CART, P_JSRT, C_JSRT, CP_JSRT, KNNRT, KRT)


@dataclass(frozen=True)
class DatasetRef:
    """A CSV file (``path`` + ``target``) or a bundled synthetic problem."""

    path: str | None = None
    target: str | int = -1
    header: bool = True
    synthetic: str | None = None
    n: int | None = None
    seed: int | None = None

    def load(self) -> Dataset:
        if self.synthetic is not None:
            try:
                return synthetic.by_name(self.synthetic, self.n, self.seed)
            except KeyError as exc:
                raise DatasetLoadError(str(exc)) from exc
        if self.path is None:
            raise ConfigError("dataset entry needs 'path' or 'synthetic'")
        try:
            return load_csv(self.path, self.target, self.header)
        except FileNotFoundError as exc:
            raise DatasetLoadError(f"dataset not found: {self.path}") from exc

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetRef":
        return cls(**{k: d[k] for k in ("path", "target", "header", "synthetic", "n", "seed") if k in d})

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class RunSpec:
    datasets: tuple[DatasetRef, ...]
    methods: tuple[str, ...] = (CART, P_JSRT)
    k: int = 10
    repeats: int = 10
    seed: int = 0
    min_split: int = 20
    min_leaf: int = 5
    lam: float = 1.0
    lambdas: tuple[float, ...] = ()
    knn_k: int = 5
    variance_floor: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if not self.datasets:
            raise ConfigError("run spec lists no datasets")
        if not self.methods:
            raise ConfigError("run spec lists no methods")
        bad = [m for m in self.methods if m not in ALL_METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {list(ALL_METHODS)}")
        if self.k < 2 or self.repeats < 1 or self.knn_k < 1:
            raise ConfigError("need k >= 2, repeats >= 1, knn_k >= 1")
        if any(v < 0 for v in self.lambdas) or self.lam < 0:
            raise ConfigError("lambda values must be >= 0")
        self.induction()

    def induction(self, method: str = CART, lam: float | None = None) -> InductionConfig:
        js = None
        if method != CART:
            js = JsConfig(self.lam if lam is None else lam, self.variance_floor)
        return InductionConfig(self.min_split, self.min_leaf, method, js)

    def to_dict(self) -> dict:
        return {
            "schema_version": SPEC_VERSION,
            "datasets": [d.to_dict() for d in self.datasets],
            "methods": list(self.methods),
            "k": self.k,
            "repeats": self.repeats,
            "seed": self.seed,
            "min_split": self.min_split,
            "min_leaf": self.min_leaf,
            "lambda": self.lam,
            "lambdas": list(self.lambdas),
            "knn_k": self.knn_k,
            "variance_floor": self.variance_floor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunSpec":
        version = d.get("schema_version", SPEC_VERSION)
        if version != SPEC_VERSION:
            raise ConfigError(f"run spec schema {version!r} unsupported (expected {SPEC_VERSION})")
        known = {"schema_version", "datasets", "methods", "k", "repeats", "seed", "min_split",
                 "min_leaf", "lambda", "lambdas", "knn_k", "variance_floor"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown run spec fields {sorted(extra)}")
        kw = {k: d[k] for k in ("k", "repeats", "seed", "min_split", "min_leaf", "knn_k",
                                "variance_floor") if k in d}
        if "lambda" in d:
            kw["lam"] = float(d["lambda"])
        if "methods" in d:
            kw["methods"] = tuple(d["methods"])
        if "lambdas" in d:
            kw["lambdas"] = tuple(d["lambdas"])
        return cls(datasets=tuple(DatasetRef.from_dict(x) for x in d.get("datasets", [])), **kw)


@dataclass
class FoldRecord:
    repeat: int
    fold: int
    mse: float
    time_ms: float
    n_leaves: int | None = None
    shrink_weight: float | None = None


@dataclass
class MethodResult:
    method: str
    folds: list[FoldRecord] = field(default_factory=list)

    @property
    def mse_mean(self) -> float:
        return float(np.mean([f.mse for f in self.folds]))

    @property
    def mse_std(self) -> float:
        v = [f.mse for f in self.folds]
        return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0

    @property
    def time_ms(self) -> float:
        return float(np.median([f.time_ms for f in self.folds]))

    def to_dict(self) -> dict:
        return {
            "mse_mean": self.mse_mean,
            "mse_std": self.mse_std,
            "time_ms": self.time_ms,
            "folds": [asdict(f) for f in self.folds],
        }


def reduction_pct(cart_mse: float, method_mse: float) -> float | None:
    """MSE reduction of a method relative to CART, in percent."""
    if cart_mse == 0.0:
        return None
    return 100.0 * (cart_mse - method_mse) / cart_mse


@dataclass
class DatasetResult:
    name: str
    n: int
    d: int
    methods: dict[str, MethodResult]

    def reductions(self) -> dict[str, float | None]:
        if CART not in self.methods:
            return {}
        base = self.methods[CART].mse_mean
        return {m: reduction_pct(base, r.mse_mean) for m, r in self.methods.items()
                if m in (P_JSRT, C_JSRT, CP_JSRT)}

    def avg_shrink_weight(self) -> float | None:
        if P_JSRT not in self.methods:
            return None
        w = [f.shrink_weight for f in self.methods[P_JSRT].folds if f.shrink_weight is not None]
        return float(np.mean(w)) if w else None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "d": self.d,
            "methods": {m: r.to_dict() for m, r in self.methods.items()},
            "reduction_pct": self.reductions(),
            "avg_shrink_weight": self.avg_shrink_weight(),
        }


@dataclass
class BenchmarkReport:
    spec: RunSpec
    datasets: list[DatasetResult]
    kind: str = "bench"

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_VERSION,
            "kind": self.kind,
            "spec": self.spec.to_dict(),
            "datasets": [d.to_dict() for d in self.datasets],
        }


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, (time.perf_counter() - t0) * 1e3


def _cv_dataset(ds: Dataset, spec: RunSpec, methods, lam: float | None = None) -> dict[str, MethodResult]:
    """Run every requested method over all folds of one dataset.

    CART, P-JSRT and the neighbour baselines share the fold's CART tree;
    C-JSRT and CP-JSRT share the fold's JS-grown tree.
    """
    plan = make_folds(ds.n, spec.k, spec.repeats, spec.seed)
    out = {m: MethodResult(m) for m in TABLE_ORDER if m in methods}
    js_cfg = JsConfig(1.0, spec.variance_floor)
    need_cart = bool({CART, P_JSRT, KNNRT, KRT} & set(methods))
    need_js = bool({C_JSRT, CP_JSRT} & set(methods))
    X, y = ds.features, ds.targets
    for r in range(spec.repeats):
        for f, tr, te in plan.splits(r):
            Xtr, ytr, Xte, yte = X[tr], y[tr], X[te], y[te]
            if need_cart:
                cart = fit_cart(Xtr, ytr, spec.induction(CART))
                if CART in out:
                    pred, ms = _timed(lambda: cart.predict(Xte))
                    out[CART].folds.append(FoldRecord(r, f, mse(pred, yte), ms, cart.n_leaves))
                if P_JSRT in out:
                    (pj, pred), ms = _timed(lambda: _js_predict(cart, js_cfg, Xte))
                    out[P_JSRT].folds.append(FoldRecord(
                        r, f, mse(pred, yte), ms, pj.n_leaves, pj.metadata.get("shrink_weight")))
                if KNNRT in out:
                    pred, ms = _timed(lambda: knn_predict(Xtr, ytr, Xte, NeighborConfig(spec.knn_k)))
                    out[KNNRT].folds.append(FoldRecord(r, f, mse(pred, yte), ms, cart.n_leaves))
                if KRT in out:
                    pred, ms = _timed(lambda: kernel_predict(Xtr, ytr, Xte))
                    out[KRT].folds.append(FoldRecord(r, f, mse(pred, yte), ms, cart.n_leaves))
            if need_js:
                ctree = fit_js_tree(Xtr, ytr, spec.induction(C_JSRT, lam))
                if C_JSRT in out:
                    pred, ms = _timed(lambda: ctree.predict(Xte))
                    out[C_JSRT].folds.append(FoldRecord(r, f, mse(pred, yte), ms, ctree.n_leaves))
                if CP_JSRT in out:
                    (cp, pred), ms = _timed(lambda: _js_predict(ctree, js_cfg, Xte))
                    out[CP_JSRT].folds.append(FoldRecord(
                        r, f, mse(pred, yte), ms, cp.n_leaves, cp.metadata.get("shrink_weight")))
    return out


def _js_predict(model, js_cfg, X):
    m = apply_js_to_leaves(model, js_cfg)
    return m, m.predict(X)


def _load_all(spec: RunSpec) -> list[Dataset]:
    out = []
    for ref in spec.datasets:
        ds = ref.load()
        if ds.n < spec.k:
            raise DatasetLoadError(f"{ds.name}: {ds.n} rows is fewer than k={spec.k} folds")
        out.append(ds)
    return out


def run_cv(spec: RunSpec) -> BenchmarkReport:
    results = []
    for ds in _load_all(spec):
        log.info("bench %s (n=%d, d=%d)", ds.name, ds.n, ds.d)
        results.append(DatasetResult(ds.name, ds.n, ds.d, _cv_dataset(ds, spec, spec.methods)))
    return BenchmarkReport(spec, results)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise InsufficientData("Pearson correlation needs at least two paired points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise InsufficientData("Pearson correlation undefined for a constant coordinate")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


@dataclass
class ShrinkageRecord:
    dataset: str
    shrink_weight: float
    reduction_pct: float


@dataclass
class ShrinkageAnalysis:
    spec: RunSpec
    records: list[ShrinkageRecord]
    pcc: float
    excluded: list[str] = field(default_factory=list)

    @property
    def positive_correlation(self) -> bool:
        return self.pcc > 0

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_VERSION,
            "kind": "shrinkage",
            "spec": self.spec.to_dict(),
            "records": [asdict(r) for r in self.records],
            "pcc": self.pcc,
            "positive_correlation": self.positive_correlation,
            "excluded": self.excluded,
        }


def shrinkage_records(report: BenchmarkReport) -> tuple[list[ShrinkageRecord], list[str]]:
    records, excluded = [], []
    for d in report.datasets:
        w = d.avg_shrink_weight()
        red = d.reductions().get(P_JSRT)
        if w is None or red is None:
            log.warning("%s: no fold applied JS estimation, excluded from PCC", d.name)
            excluded.append(d.name)
            continue
        records.append(ShrinkageRecord(d.name, w, red))
    return records, excluded


def shrinkage_analysis(spec: RunSpec) -> ShrinkageAnalysis:
    """Average shrink weight vs P-JSRT's MSE reduction, one point per dataset."""
    if len(spec.datasets) < 2:
        raise InsufficientData("shrinkage analysis needs at least two datasets")
    sub = RunSpec(**{**_spec_kwargs(spec), "methods": (CART, P_JSRT)})
    records, excluded = shrinkage_records(run_cv(sub))
    pcc = pearson([r.shrink_weight for r in records], [r.reduction_pct for r in records])
    return ShrinkageAnalysis(spec, records, pcc, excluded)


def _spec_kwargs(spec: RunSpec) -> dict:
    return {f: getattr(spec, f) for f in spec.__dataclass_fields__}


def parse_lambda_grid(text: str) -> list[float]:
    """Parse ``"start:stop:step"`` or a comma list.

    The range form yields ``start`` followed by the multiples of ``step``
    above it and strictly below ``stop``: ``"1:50:5"`` gives 1, 5, 10, ..., 45.
    """
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(p) for p in text.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad lambda grid {text!r}; use start:stop:step") from exc
        if step <= 0 or stop <= start:
            raise ConfigError(f"bad lambda grid {text!r}")
        grid = [start]
        k = math.floor(start / step) + 1
        while k * step < stop:
            grid.append(k * step)
            k += 1
        return grid
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad lambda list {text!r}") from exc


DEFAULT_GRID = tuple(parse_lambda_grid("1:50:5"))


@dataclass
class SweepPoint:
    lam: float
    mse: dict[str, float]


@dataclass
class AblationResult:
    name: str
    n: int
    d: int
    baseline: dict[str, float]
    sweep: list[SweepPoint]
    control: SweepPoint | None

    def best(self, method: str) -> SweepPoint:
        pts = self.sweep + ([self.control] if self.control is not None else [])
        pts = [p for p in pts if method in p.mse]
        # strict < keeps the first (lowest-lambda-in-grid-order) point on ties
        best = pts[0]
        for p in pts[1:]:
            if p.mse[method] < best.mse[method]:
                best = p
        return best

    def table_row(self) -> dict:
        row = dict(self.baseline)
        key = CP_JSRT if any(CP_JSRT in p.mse for p in self.sweep) else C_JSRT
        for m in (C_JSRT, CP_JSRT):
            if any(m in p.mse for p in self.sweep):
                row[m] = self.best(m).mse[m]
        row["lambda"] = self.best(key).lam
        return row

    def to_dict(self) -> dict:
        methods = [m for m in (C_JSRT, CP_JSRT) if any(m in p.mse for p in self.sweep)]
        return {
            "name": self.name,
            "n": self.n,
            "d": self.d,
            "baseline": self.baseline,
            "sweep": [{"lambda": p.lam, "mse": p.mse} for p in self.sweep],
            "control": None if self.control is None else {"lambda": self.control.lam, "mse": self.control.mse},
            "best_lambda": {m: self.best(m).lam for m in methods},
            "best_mse": {m: self.best(m).mse[m] for m in methods},
            "row": self.table_row(),
        }


@dataclass
class AblationReport:
    spec: RunSpec
    datasets: list[AblationResult]
    columns: tuple[str, ...] = (CART, P_JSRT, C_JSRT, CP_JSRT)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_VERSION,
            "kind": "ablation",
            "spec": self.spec.to_dict(),
            "columns": list(self.columns) + ["lambda"],
            "datasets": [d.to_dict() for d in self.datasets],
        }


def ablation(spec: RunSpec, include_control: bool = True) -> AblationReport:
    """Sweep lambda for the JS-grown trees next to the CART/P-JSRT baselines.

    ``lambda = 0`` (plain CART structure) is evaluated as a control unless it
    is already part of the grid; the best lambda is chosen over both.
    """
    grid = spec.lambdas or DEFAULT_GRID
    js_methods = tuple(m for m in (C_JSRT, CP_JSRT) if m in spec.methods) or (C_JSRT, CP_JSRT)
    results = []
    for ds in _load_all(spec):
        log.info("ablate %s (n=%d, d=%d)", ds.name, ds.n, ds.d)
        base = _cv_dataset(ds, spec, (CART, P_JSRT))
        baseline = {m: r.mse_mean for m, r in base.items()}
        sweep = []
        for lam in grid:
            res = _cv_dataset(ds, spec, js_methods, lam)
            sweep.append(SweepPoint(lam, {m: r.mse_mean for m, r in res.items()}))
        control = None
        if include_control and 0.0 not in grid:
            res = _cv_dataset(ds, spec, js_methods, 0.0)
            control = SweepPoint(0.0, {m: r.mse_mean for m, r in res.items()})
        results.append(AblationResult(ds.name, ds.n, ds.d, baseline, sweep, control))
    return AblationReport(spec, results)
