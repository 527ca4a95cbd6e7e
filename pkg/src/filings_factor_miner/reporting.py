"""Render pipeline outputs as paper-style tables and plot-ready CSV files.

Two precision tiers: human-facing markdown rounds exactly the way the
source tables print (4-decimal coefficients, 3-decimal t-stats in
parentheses, 3-decimal scree vectors, integer-percent correlations),
while machine CSVs carry full float precision via repr. All writers are
deterministic: identical inputs produce identical bytes.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .keywords import FacetTable
from .market import CrossSectionSummary
from .regression import FLAG_90, FLAG_99, RegressionResult, CorrelationTable, significance_flags
from .spectral import SvdResult


def fnum(x: float) -> str:
    """Full-precision float for machine CSVs (shortest round-trip repr)."""
    return repr(float(x))


def format_cell(coef: float, t_stat: float, flag: str) -> str:
    """One regression cell, e.g. ``0.0029 (4.045)`` with bold/stars by flag."""
    base = f"{coef:.4f} ({t_stat:.3f})"
    if flag == FLAG_99:
        return f"**{base}***"
    if flag == FLAG_90:
        return f"**{base}**"
    return base


def _csv_line(cells: list[str]) -> str:
    return ",".join(cells) + "\n"


def render_regression_table(
    results: dict[str, RegressionResult],
    term_rows: list[str],
    column_titles: dict[str, str],
    title: str,
) -> str:
    """Markdown table with one column per dependent and a fixed row set.

    ``term_rows`` fixes the printed rows (all keywords plus Intercept), so
    the table shape matches the source layout even when the fit dropped
    columns; dropped terms render as ``(dropped)``.
    """
    deps = list(results)
    lines = [f"### {title}", ""]
    lines.append("| term | " + " | ".join(column_titles[d] for d in deps) + " |")
    lines.append("|---" * (len(deps) + 1) + "|")
    flag_cache = {d: significance_flags(results[d]) for d in deps}
    for term in term_rows:
        cells = []
        for d in deps:
            res = results[d]
            if term in res.term_labels:
                i = res.term_labels.index(term)
                cells.append(format_cell(res.coefficients[i], res.t_stats[i], flag_cache[d][i]))
            else:
                cells.append("(dropped)")
        lines.append(f"| {term} | " + " | ".join(cells) + " |")
    adj = [f"{results[d].adj_r_squared * 100:.1f}%" for d in deps]
    lines.append("| Model Adj. R2 | " + " | ".join(adj) + " |")
    return "\n".join(lines) + "\n"


def regression_result_csv(result: RegressionResult) -> str:
    """Full-precision CSV: term,coef,t_stat,p_value,flag plus a model row."""
    flags = significance_flags(result)
    buf = io.StringIO()
    buf.write(_csv_line(["term", "coef", "t_stat", "p_value", "flag"]))
    for i, term in enumerate(result.term_labels):
        buf.write(
            _csv_line(
                [
                    term,
                    fnum(result.coefficients[i]),
                    fnum(result.t_stats[i]),
                    fnum(result.p_values[i]),
                    flags[i],
                ]
            )
        )
    buf.write(
        _csv_line(
            [
                "Model",
                fnum(result.r_squared),
                fnum(result.adj_r_squared),
                str(result.n_obs),
                "",
            ]
        )
    )
    return buf.getvalue()


def render_scree(svd: SvdResult, var_explained: np.ndarray) -> str:
    """CSV rows k,singular_value,var_explained,cumulative (cumulative -> 1)."""
    if var_explained.size != svd.s.size:
        raise InputError("explained-variance vector does not match singular values")
    cumulative = np.cumsum(var_explained)
    buf = io.StringIO()
    buf.write(_csv_line(["k", "singular_value", "var_explained", "cumulative"]))
    for k in range(svd.s.size):
        buf.write(_csv_line([str(k), fnum(svd.s[k]), fnum(var_explained[k]), fnum(cumulative[k])]))
    return buf.getvalue()


def var_explained_listing(var_explained: np.ndarray) -> str:
    """Bracketed 3-decimal listing, e.g. ``var_explained = [0.592 0.071 ...]``."""
    body = np.array2string(np.round(np.asarray(var_explained, dtype=float), 3), max_line_width=10_000)
    return f"var_explained = {body}\n"


def render_facets(table: FacetTable) -> str:
    """Long-format CSV facet_value,keyword,count,share_pct sorted by count desc.

    Ties sort by keyword label, then facet value.
    """
    rows = [
        (value, keyword, cell.count, cell.share_pct)
        for (value, keyword), cell in table.cells.items()
    ]
    rows.sort(key=lambda r: (-r[2], r[1], r[0]))
    buf = io.StringIO()
    buf.write(_csv_line(["facet_value", "keyword", "count", "share_pct"]))
    for value, keyword, count, share in rows:
        buf.write(_csv_line([value, keyword, str(count), fnum(share)]))
    return buf.getvalue()


def _pct_cell(value: float) -> str:
    return "NA" if np.isnan(value) else f"{value:.0f}"


def render_correlation_markdown(table: CorrelationTable, title: str) -> str:
    """Integer-percent correlation table with diagonal 100; NA for undefined."""
    lines = [f"### {title}", ""]
    lines.append("| | " + " | ".join(table.labels) + " |")
    lines.append("|---" * (len(table.labels) + 1) + "|")
    for i, label in enumerate(table.labels):
        cells = [_pct_cell(table.values_pct[i, j]) for j in range(len(table.labels))]
        lines.append(f"| {label} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_correlation_csv(table: CorrelationTable) -> str:
    buf = io.StringIO()
    buf.write(_csv_line([""] + list(table.labels)))
    for i, label in enumerate(table.labels):
        cells = [
            "NA" if np.isnan(table.values_pct[i, j]) else fnum(table.values_pct[i, j])
            for j in range(len(table.labels))
        ]
        buf.write(_csv_line([label] + cells))
    return buf.getvalue()


def render_factor_feature_markdown(
    factor_names: tuple[str, ...], labels: tuple[str, ...], pct: np.ndarray, title: str
) -> str:
    """Factor-vs-feature correlations at one decimal, in percent."""
    lines = [f"### {title}", ""]
    lines.append("| Feature | " + " | ".join(factor_names) + " |")
    lines.append("|---" * (len(factor_names) + 1) + "|")
    for j, label in enumerate(labels):
        cells = [
            "NA" if np.isnan(pct[i, j]) else f"{pct[i, j]:.1f}%" for i in range(len(factor_names))
        ]
        lines.append(f"| {label} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_summary_csv(summary: CrossSectionSummary) -> str:
    buf = io.StringIO()
    buf.write(_csv_line(["Metric"] + list(summary.columns)))
    for i, row in enumerate(summary.rows):
        cells = [fnum(summary.values[i, j]) for j in range(len(summary.columns))]
        buf.write(_csv_line([row] + cells))
    return buf.getvalue()


def render_summary_markdown(summary: CrossSectionSummary, title: str) -> str:
    """Human summary: E[R]/Std[R] as percents, skew/kurt as plain 3-decimals."""
    lines = [f"### {title}", ""]
    lines.append("| Metric | " + " | ".join(summary.columns) + " |")
    lines.append("|---" * (len(summary.columns) + 1) + "|")
    for i, row in enumerate(summary.rows):
        cells = []
        for j, col in enumerate(summary.columns):
            v = summary.values[i, j]
            if row == "Count":
                cells.append(f"{int(v)}" if np.isfinite(v) else "NA")
            elif not np.isfinite(v):
                cells.append("NA")
            elif col in ("E[R]", "Std[R]"):
                cells.append(f"{v * 100:.3f}%")
            else:
                cells.append(f"{v:.3f}")
        lines.append(f"| {row} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TableRef:
    name: str
    format: str
    path: str


@dataclass(frozen=True)
class ReportBundle:
    """Everything one run produced, with the config snapshot that made it."""

    run_config_snapshot: dict
    tables: tuple[TableRef, ...]
    timestamp: str | None


def bundle_manifest(bundle: ReportBundle) -> str:
    """Manifest with paths relative to the bundle root, so bundles are portable."""
    payload: dict = {
        "tables": [{"name": t.name, "format": t.format, "path": t.name} for t in bundle.tables],
    }
    if bundle.timestamp is not None:
        payload["generated_at"] = bundle.timestamp
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
