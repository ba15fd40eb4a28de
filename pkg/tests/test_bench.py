import json

import numpy as np
import pytest

from jsrt.bench import (
    DEFAULT_GRID,
    BenchmarkReport,
    DatasetRef,
    DatasetResult,
    FoldRecord,
    MethodResult,
    RunSpec,
    ablation,
    parse_lambda_grid,
    pearson,
    reduction_pct,
    run_cv,
    shrinkage_analysis,
    shrinkage_records,
)
from jsrt.errors import ConfigError, DatasetLoadError, InsufficientData
from jsrt.report import ablation_table, delimited, mse_table, render_ablation, render_bench

from oracles import pearson_direct


def small_spec(**kw):
    base = dict(datasets=(DatasetRef(synthetic="pw_small", n=200),), k=5, repeats=2, seed=7)
    base.update(kw)
    return RunSpec(**base)


def test_fold_records_per_method():
    spec = small_spec(methods=("CART", "P-JSRT", "C-JSRT", "CP-JSRT", "KNNRT", "KRT"))
    report = run_cv(spec)
    (d,) = report.datasets
    assert list(d.methods) == ["CART", "P-JSRT", "C-JSRT", "CP-JSRT", "KNNRT", "KRT"]
    for r in d.methods.values():
        assert len(r.folds) == spec.k * spec.repeats
        assert all(f.mse >= 0 and f.time_ms >= 0 for f in r.folds)
    # P-JSRT re-estimates the same CART tree, so leaf counts agree fold by fold
    assert [f.n_leaves for f in d.methods["CART"].folds] == [f.n_leaves for f in d.methods["P-JSRT"].folds]
    # default lambda 1 for the JS-grown tree
    assert d.methods["C-JSRT"].folds[0].n_leaves > 1


def test_constant_dataset_has_zero_error():
    report = run_cv(small_spec(datasets=(DatasetRef(synthetic="constant"),)))
    (d,) = report.datasets
    assert d.methods["CART"].mse_mean == 0.0
    assert d.methods["P-JSRT"].mse_mean == 0.0
    assert d.reductions()["P-JSRT"] is None


def test_reduction_formula():
    assert reduction_pct(10.0, 9.0) == pytest.approx(10.0)
    assert reduction_pct(10.0, 11.0) == pytest.approx(-10.0)
    assert reduction_pct(0.0, 0.0) is None


def test_pearson_examples():
    assert pearson([0.1, 0.3], [1.0, 3.0]) == 1.0
    assert pearson([1, 2, 3], [3, 2, 1]) == -1.0
    xs, ys = [0.2, 0.5, 0.1, 0.9], [1.0, 4.0, -2.0, 3.5]
    assert pearson(xs, ys) == pytest.approx(pearson_direct(xs, ys), rel=1e-12)
    with pytest.raises(InsufficientData):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(InsufficientData):
        pearson([1.0], [2.0])


def test_lambda_grid_parsing():
    assert parse_lambda_grid("1:50:5") == [1.0] + [5.0 * i for i in range(1, 10)]
    assert len(DEFAULT_GRID) == 10
    assert parse_lambda_grid("0, 2.5,7") == [0.0, 2.5, 7.0]
    for bad in ("1:50", "5:1:1", "1:10:0", "a,b"):
        with pytest.raises(ConfigError):
            parse_lambda_grid(bad)


def test_ablation_control_equals_cart():
    spec = small_spec(lambdas=(0.0,), min_leaf=10)
    report = ablation(spec)
    (d,) = report.datasets
    assert d.control is None  # 0 already in the grid
    assert d.sweep[0].mse["C-JSRT"] == d.baseline["CART"]
    assert d.sweep[0].mse["CP-JSRT"] == d.baseline["P-JSRT"]


def test_ablation_report_shape():
    spec = small_spec(lambdas=(1.0, 20.0), min_leaf=10)
    report = ablation(spec)
    doc = report.to_dict()
    assert doc["columns"] == ["CART", "P-JSRT", "C-JSRT", "CP-JSRT", "lambda"]
    (d,) = doc["datasets"]
    assert [p["lambda"] for p in d["sweep"]] == [1.0, 20.0]
    assert d["control"]["lambda"] == 0.0
    assert set(d["best_lambda"]) == {"C-JSRT", "CP-JSRT"}
    assert d["row"]["C-JSRT"] <= d["control"]["mse"]["C-JSRT"]
    headers, rows = ablation_table(report)
    assert headers == ["dataset", "CART", "P-JSRT", "C-JSRT", "CP-JSRT", "lambda"]
    assert "lambda" in render_ablation(report)
    json.dumps(doc, allow_nan=False)


def test_run_spec_json_round_trip():
    spec = small_spec(methods=("CART", "KRT"), lambdas=(1.0, 5.0), knn_k=3)
    doc = json.loads(json.dumps(spec.to_dict()))
    assert RunSpec.from_dict(doc) == spec


def test_run_spec_validation():
    with pytest.raises(ConfigError):
        small_spec(methods=("CART", "XGB"))
    with pytest.raises(ConfigError):
        small_spec(datasets=())
    with pytest.raises(ConfigError):
        small_spec(k=1)
    with pytest.raises(ConfigError):
        RunSpec.from_dict({"datasets": [{"synthetic": "pw_small"}], "colour": 1})
    with pytest.raises(ConfigError):
        RunSpec.from_dict({"schema_version": 2, "datasets": [{"synthetic": "pw_small"}]})


def test_dataset_errors(tmp_path):
    with pytest.raises(DatasetLoadError):
        run_cv(small_spec(datasets=(DatasetRef(synthetic="nope"),)))
    with pytest.raises(DatasetLoadError):
        run_cv(small_spec(datasets=(DatasetRef(path=str(tmp_path / "absent.csv")),)))
    with pytest.raises(DatasetLoadError):
        run_cv(small_spec(datasets=(DatasetRef(synthetic="pw_small", n=4),)))


def test_csv_dataset(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(120, 2))
    y = np.where(X[:, 0] > 0.5, 5.0, 0.0) + rng.normal(size=120)
    p = tmp_path / "d.csv"
    p.write_text("a,b,y\n" + "".join(f"{a!r},{b!r},{t!r}\n" for (a, b), t in zip(X.tolist(), y.tolist())))
    report = run_cv(small_spec(datasets=(DatasetRef(path=str(p), target="y"),)))
    assert report.datasets[0].n == 120
    headers, rows = mse_table(report)
    assert headers == ["dataset", "n", "CART", "P-JSRT"]
    text = delimited(headers, rows)
    assert text.splitlines()[1].startswith("d,120,")
    assert "MSE" in render_bench(report)


def mse_fields(doc):
    return [[(f["repeat"], f["fold"], f["mse"]) for f in m["folds"]]
            for d in doc["datasets"] for m in d["methods"].values()]


def test_reports_are_deterministic():
    spec = small_spec(methods=("CART", "P-JSRT", "C-JSRT"))
    a, b = run_cv(spec).to_dict(), run_cv(spec).to_dict()
    assert json.dumps(mse_fields(a)) == json.dumps(mse_fields(b))


def test_shrinkage_analysis_small():
    refs = tuple(DatasetRef(synthetic=s, n=300) for s in ("pw_small", "pw_noisy", "pw_mid"))
    res = shrinkage_analysis(small_spec(datasets=refs))
    assert len(res.records) == 3
    for r in res.records:
        assert 0.0 <= r.shrink_weight <= 1.0
    ref = pearson_direct([r.shrink_weight for r in res.records], [r.reduction_pct for r in res.records])
    assert res.pcc == pytest.approx(ref, rel=1e-12)
    assert res.to_dict()["positive_correlation"] == (res.pcc > 0)
    with pytest.raises(InsufficientData):
        shrinkage_analysis(small_spec())


def test_shrink_weight_average_skips_fallback_folds():
    pj = MethodResult("P-JSRT", [FoldRecord(0, 0, 1.0, 0.1, 3, None), FoldRecord(0, 1, 1.0, 0.1, 8, 0.2),
                                 FoldRecord(0, 2, 1.0, 0.1, 9, 0.4)])
    cart = MethodResult("CART", [FoldRecord(0, f, 2.0, 0.1, 8) for f in range(3)])
    d = DatasetResult("x", 30, 2, {"CART": cart, "P-JSRT": pj})
    assert d.avg_shrink_weight() == pytest.approx(0.3)
    only_fallback = DatasetResult("y", 30, 2, {
        "CART": cart, "P-JSRT": MethodResult("P-JSRT", [FoldRecord(0, 0, 1.0, 0.1, 3, None)])})
    records, excluded = shrinkage_records(BenchmarkReport(small_spec(), [d, only_fallback]))
    assert [r.dataset for r in records] == ["x"] and excluded == ["y"]
    assert records[0].reduction_pct == pytest.approx(50.0)
