"""Plain-text and CSV renderings of benchmark reports."""

from __future__ import annotations

import csv
import io

from .bench import AblationReport, BenchmarkReport, ShrinkageAnalysis, TABLE_ORDER


def _fmt(v, digits=6):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.{digits}g}"
    return str(v)


def aligned(headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(headers))]
    lines = []
    for i, r in enumerate(cells):
        lines.append("  ".join(c.ljust(w) if j == 0 else c.rjust(w)
                               for j, (c, w) in enumerate(zip(r, widths))))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def delimited(headers, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(headers)
    for r in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in r])
    return buf.getvalue()


def mse_table(report: BenchmarkReport):
    methods = [m for m in TABLE_ORDER if m in report.spec.methods]
    headers = ["dataset", "n"] + methods
    rows = [[d.name, d.n] + [d.methods[m].mse_mean for m in methods] for d in report.datasets]
    return headers, rows


def time_table(report: BenchmarkReport):
    methods = [m for m in TABLE_ORDER if m in report.spec.methods]
    headers = ["dataset", "n"] + [f"{m} ms" for m in methods]
    rows = [[d.name, d.n] + [d.methods[m].time_ms for m in methods] for d in report.datasets]
    return headers, rows


def render_bench(report: BenchmarkReport) -> str:
    parts = ["MSE (mean over folds)", aligned(*mse_table(report)), "",
             "Prediction time per fold (median, ms)", aligned(*time_table(report))]
    red_rows = []
    for d in report.datasets:
        for m, v in d.reductions().items():
            red_rows.append([d.name, m, v])
    if red_rows:
        parts += ["", "MSE reduction vs CART (%)", aligned(["dataset", "method", "reduction %"], red_rows)]
    return "\n".join(parts)


def shrinkage_table(analysis: ShrinkageAnalysis):
    headers = ["dataset", "shrink_weight", "reduction_pct"]
    rows = [[r.dataset, r.shrink_weight, r.reduction_pct] for r in analysis.records]
    return headers, rows


def render_shrinkage(analysis: ShrinkageAnalysis) -> str:
    text = aligned(*shrinkage_table(analysis)) + f"\n\nPCC = {analysis.pcc:.6f}"
    if analysis.excluded:
        text += "\nexcluded (no JS applied): " + ", ".join(analysis.excluded)
    return text


def ablation_table(report: AblationReport):
    headers = ["dataset"] + list(report.columns) + ["lambda"]
    rows = []
    for d in report.datasets:
        row = d.table_row()
        rows.append([d.name] + [row.get(c) for c in report.columns] + [row["lambda"]])
    return headers, rows


def render_ablation(report: AblationReport) -> str:
    return "MSE, best lambda per dataset\n" + aligned(*ablation_table(report))
