"""Stage orchestration: fetch -> scan -> matrix -> moments -> svd -> factors
-> regress -> report.

Each stage reads its upstream artifacts from ``<output_dir>/artifacts``
and writes its own, so a run is resumable stage by stage and a staged
run is byte-identical to the monolithic ``analyze``. Any stage error is
re-raised as a StageError naming the stage; partial outputs are
retained.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import keywords as kw
from . import market, regression, reporting, spectral
from .config import RunConfig, STAGES
from .errors import FilingsMinerError, InputError, MissingArtifactError, StageError
from .windows import DateRange

logger = logging.getLogger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write(path: Path, text: str) -> None:
    corpus_mod.atomic_write_text(path, text)


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _clean_float(x: float):
    """NaN/inf -> None so artifacts stay strict JSON."""
    x = float(x)
    return x if math.isfinite(x) else None


def _restore_float(x) -> float:
    return math.nan if x is None else float(x)


def _require(path: Path, hint: str) -> Path:
    if not path.is_file():
        raise MissingArtifactError(str(path), hint)
    return path


def _window_range(cfg: RunConfig, window: str) -> DateRange:
    if window == "contemporaneous":
        return cfg.in_sample.to_range()
    if window == "forward":
        return cfg.forward.to_range()
    raise InputError(f"unknown window {window!r}")


def _window_label(cfg: RunConfig, window: str) -> str:
    """Year-style label for table headers, e.g. 2019/20 or 2021."""
    r = _window_range(cfg, window)
    last_year = max(r.start.year, r.end.year - 1)
    if last_year == r.start.year:
        return str(r.start.year)
    return f"{r.start.year}/{last_year % 100:02d}"


# --------------------------------------------------------------------------
# fetch


def cmd_fetch(cfg: RunConfig) -> dict:
    """Populate the filing cache, either from EDGAR or a local mirror."""
    cache = cfg.effective_cache_dir
    stamp = cfg.timestamp or _now()
    if cfg.corpus_mode == "local":
        if cfg.local_corpus is None:
            raise InputError("corpus_mode is 'local' but no local_corpus directory is set")
        forms = set(cfg.form_filter) if cfg.form_filter else None
        index, stats = corpus_mod.import_local_corpus(
            cfg.local_corpus,
            cache,
            tickers=cfg.ticker_list(),
            period=cfg.fetch_range(),
            forms=forms,
            fetched_at=stamp,
        )
        return {
            "mode": "local",
            "records": len(index.records),
            "companies": len(index.tickers()),
            "cache_hits": stats["cache_hits"],
            "network_calls": 0,
            "unresolved": [],
            "index_path": str(cache / "index.json"),
        }

    tickers = cfg.ticker_list()
    if not tickers:
        raise InputError("remote fetch requires tickers or a ticker_file")
    forms = set(cfg.form_filter) if cfg.form_filter else None
    with corpus_mod.EdgarClient(
        cache,
        user_agent=cfg.user_agent,
        rate_limit=cfg.rate_limit,
        parallelism=cfg.parallelism,
    ) as client:
        resolved = client.resolve_ciks(tickers)
        records: list[corpus_mod.FilingRecord] = []
        for ticker in sorted(resolved):
            cik = resolved[ticker]
            if cik is None:
                continue
            records.extend(client.fetch_filings(cik, cfg.fetch_range(), forms, ticker=ticker))
        index = corpus_mod.merge_into_index(cache, records, fetched_at=stamp)
        unresolved = sorted(t for t, cik in resolved.items() if cik is None)
        return {
            "mode": "remote",
            "records": len(index.records),
            "companies": len(index.tickers()),
            "cache_hits": client.cache_hits,
            "network_calls": client.network_calls,
            "unresolved": unresolved,
            "index_path": str(cache / "index.json"),
        }


# --------------------------------------------------------------------------
# scan


def stage_scan(cfg: RunConfig) -> dict:
    index_path = _require(cfg.effective_cache_dir / "index.json", "run fetch first")
    corpus = corpus_mod.load_local_corpus(index_path.parent)
    lexicon = kw.load_lexicon(cfg.lexicon)
    scanned = kw.scan_corpus(corpus, lexicon, cfg.word_boundary)
    filings = []
    for s in scanned:
        r = s.record
        filings.append(
            {
                "ticker": r.ticker,
                "cik": r.cik,
                "accession": r.accession,
                "form_type": r.form_type,
                "filing_date": r.filing_date.isoformat(),
                "sic_industry": r.sic_industry,
                "state_of_incorporation": r.state_of_incorporation,
                "counts": [int(c) for c in s.counts],
            }
        )
    payload = {
        "lexicon": {"labels": list(lexicon.labels), "phrases": list(lexicon.phrases)},
        "word_boundary": cfg.word_boundary,
        "filings": filings,
    }
    out = cfg.artifacts_dir / "scan.json"
    _write(out, _dump_json(payload))
    return {
        "filings_scanned": len(filings),
        "total_mentions": int(sum(sum(f["counts"]) for f in filings)),
        "artifacts": [str(out)],
    }


def _load_scan(cfg: RunConfig) -> tuple[kw.Lexicon, list[kw.ScannedFiling], bool]:
    path = _require(cfg.artifacts_dir / "scan.json", "run the scan stage first")
    payload = json.loads(path.read_text(encoding="utf-8"))
    lex = payload["lexicon"]
    lexicon = kw.Lexicon(
        tuple(kw.LexiconEntry(label=l, phrase=p) for l, p in zip(lex["labels"], lex["phrases"]))
    )
    scanned = []
    for f in payload["filings"]:
        filing_date = date.fromisoformat(f["filing_date"])
        record = corpus_mod.FilingRecord(
            ticker=f["ticker"],
            cik=f["cik"],
            accession=f["accession"],
            form_type=f["form_type"],
            filing_date=filing_date,
            filing_year=filing_date.year,
            sic_industry=f["sic_industry"],
            state_of_incorporation=f["state_of_incorporation"],
            text_path=Path("unused"),
        )
        scanned.append(kw.ScannedFiling(record, np.array(f["counts"], dtype=np.int64)))
    return lexicon, scanned, bool(payload["word_boundary"])


# --------------------------------------------------------------------------
# matrix


def _matrix_csv(matrix: kw.MentionMatrix, view: str) -> str:
    buf = io.StringIO()
    buf.write(",".join(["ticker", *matrix.lexicon.labels]) + "\n")
    values = matrix.view(view)
    for i, ticker in enumerate(matrix.companies):
        buf.write(",".join([ticker, *(str(int(v)) for v in values[i])]) + "\n")
    return buf.getvalue()


def stage_matrix(cfg: RunConfig) -> dict:
    lexicon, scanned, _ = _load_scan(cfg)
    period = cfg.in_sample.to_range()
    matrix, excluded = kw.aggregate_matrix(scanned, lexicon, period)
    out_dir = cfg.artifacts_dir / "matrix"
    paths = []
    for view, name in (("count", "mentions_count.csv"), ("dummy", "mentions_dummy.csv")):
        p = out_dir / name
        _write(p, _matrix_csv(matrix, view))
        paths.append(str(p))
    report = {
        "companies": list(matrix.companies),
        "excluded_companies": excluded,
        "period": {"start": period.start.isoformat(), "end": period.end.isoformat()},
    }
    p = out_dir / "matrix_report.json"
    _write(p, _dump_json(report))
    paths.append(str(p))
    if excluded:
        logger.warning("companies with no filings in period, excluded: %s", ", ".join(excluded))
    return {
        "companies": len(matrix.companies),
        "keywords": len(lexicon),
        "excluded_companies": excluded,
        "artifacts": paths,
    }


def _load_matrix(cfg: RunConfig, view: str) -> tuple[tuple[str, ...], tuple[str, ...], np.ndarray]:
    name = "mentions_dummy.csv" if view == "dummy" else "mentions_count.csv"
    path = _require(cfg.artifacts_dir / "matrix" / name, "run the matrix stage first")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        labels = tuple(header[1:])
        tickers = []
        rows = []
        for row in reader:
            tickers.append(row[0])
            rows.append([int(v) for v in row[1:]])
    return tuple(tickers), labels, np.array(rows, dtype=np.int64)


# --------------------------------------------------------------------------
# moments


def _moments_csv(stats: list[market.MomentStats]) -> str:
    buf = io.StringIO()
    buf.write("ticker,mean,std,skewness,kurtosis,n_obs,higher_moments_defined\n")
    for s in stats:
        buf.write(
            ",".join(
                [
                    s.ticker,
                    reporting.fnum(s.mean),
                    reporting.fnum(s.std),
                    reporting.fnum(s.skewness),
                    reporting.fnum(s.kurtosis),
                    str(s.n_obs),
                    "true" if s.higher_moments_defined else "false",
                ]
            )
            + "\n"
        )
    return buf.getvalue()


def stage_moments(cfg: RunConfig) -> dict:
    if cfg.prices_dir is None or not Path(cfg.prices_dir).is_dir():
        raise InputError(f"market_data: prices directory not found: {cfg.prices_dir}")
    index_path = _require(cfg.effective_cache_dir / "index.json", "run fetch first")
    corpus = corpus_mod.load_local_corpus(index_path.parent)
    tickers = corpus.tickers()
    out_dir = cfg.artifacts_dir / "moments"
    warnings: list[str] = []
    counts: dict[str, int] = {}
    paths = []
    for window in cfg.regression_windows:
        window_range = _window_range(cfg, window)
        stats: list[market.MomentStats] = []
        for ticker in tickers:
            price_file = Path(cfg.prices_dir) / f"{ticker}.csv"
            if not price_file.is_file():
                warnings.append(f"{window}: no price file for {ticker}, skipped")
                continue
            try:
                series = market.slice_window(market.load_prices(price_file, ticker), window_range)
                stats.append(market.moments(series))
            except InputError as exc:
                warnings.append(f"{window}: {ticker}: {exc}")
        p = out_dir / f"moments_{window}.csv"
        _write(p, _moments_csv(stats))
        paths.append(str(p))
        counts[window] = len(stats)
    report_path = out_dir / "moments_report.json"
    _write(report_path, _dump_json({"warnings": sorted(warnings), "tickers_per_window": counts}))
    paths.append(str(report_path))
    for w in warnings:
        logger.warning("moments: %s", w)
    return {"tickers_per_window": counts, "warnings": sorted(warnings), "artifacts": paths}


def _load_moments(cfg: RunConfig, window: str) -> list[market.MomentStats]:
    path = _require(
        cfg.artifacts_dir / "moments" / f"moments_{window}.csv", "run the moments stage first"
    )
    stats = []
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            stats.append(
                market.MomentStats(
                    ticker=row["ticker"],
                    mean=float(row["mean"]),
                    std=float(row["std"]),
                    skewness=float(row["skewness"]),
                    kurtosis=float(row["kurtosis"]),
                    n_obs=int(row["n_obs"]),
                    higher_moments_defined=row["higher_moments_defined"] == "true",
                )
            )
    return stats


# --------------------------------------------------------------------------
# svd


def _design_matrix(cfg: RunConfig, view: str) -> tuple[tuple[str, ...], tuple[str, ...], np.ndarray]:
    tickers, labels, values = _load_matrix(cfg, view)
    x = values.astype(float)
    if cfg.center:
        x = x - x.mean(axis=0)
    return tickers, labels, x


def stage_svd(cfg: RunConfig) -> dict:
    out_dir = cfg.artifacts_dir / "svd"
    paths = []
    shares = {}
    for view in cfg.views:
        tickers, labels, x = _design_matrix(cfg, view)
        svd = spectral.decompose(x)
        var = spectral.explained_variance(svd)
        payload = {
            "view": view,
            "centered": cfg.center,
            "companies": list(tickers),
            "labels": list(labels),
            "n_rows": svd.n_rows,
            "n_cols": svd.n_cols,
            "s": [float(v) for v in svd.s],
            "u": [[float(v) for v in row] for row in svd.u],
            "v": [[float(v) for v in row] for row in svd.v],
            "var_explained": [float(v) for v in var],
        }
        p = out_dir / f"svd_{view}.json"
        _write(p, _dump_json(payload))
        paths.append(str(p))
        p = out_dir / f"scree_{view}.csv"
        _write(p, reporting.render_scree(svd, var))
        paths.append(str(p))
        p = out_dir / f"var_explained_{view}.txt"
        _write(p, reporting.var_explained_listing(var))
        paths.append(str(p))
        shares[view] = round(float(var[0]), 6)
    return {"top_component_share": shares, "artifacts": paths}


def _load_svd(cfg: RunConfig, view: str) -> tuple[dict, spectral.SvdResult, np.ndarray]:
    path = _require(cfg.artifacts_dir / "svd" / f"svd_{view}.json", "run the svd stage first")
    payload = json.loads(path.read_text(encoding="utf-8"))
    svd = spectral.SvdResult(
        u=np.array(payload["u"], dtype=float),
        s=np.array(payload["s"], dtype=float),
        v=np.array(payload["v"], dtype=float),
        n_rows=int(payload["n_rows"]),
        n_cols=int(payload["n_cols"]),
    )
    return payload, svd, np.array(payload["var_explained"], dtype=float)


# --------------------------------------------------------------------------
# factors


def _rank_rule(cfg: RunConfig) -> spectral.RankRule:
    if cfg.rank_rule.kind == "fixed":
        return spectral.FixedRank(cfg.rank_rule.k)
    return spectral.VarianceThreshold(cfg.rank_rule.tau)


def stage_factors(cfg: RunConfig) -> dict:
    out_dir = cfg.artifacts_dir / "factors"
    paths = []
    ranks = {}
    for view in cfg.views:
        payload, svd, var = _load_svd(cfg, view)
        tickers, labels, x = _design_matrix(cfg, view)
        if list(tickers) != payload["companies"] or list(labels) != payload["labels"]:
            raise InputError(f"svd artifact for view {view!r} no longer matches the matrix artifact")
        k_star = spectral.select_rank(var, _rank_rule(cfg))
        factors = spectral.build_factors(x, svd, k_star, source_id=view)
        # Correlations are computed against the raw (uncentered) columns;
        # Pearson centering makes the two choices equivalent anyway.
        raw = _load_matrix(cfg, view)[2].astype(float)
        corr = spectral.factor_feature_correlation(factors, raw)
        composition = [
            [[label, coef] for label, coef in spectral.vector_composition(svd, k, labels)]
            for k in range(k_star)
        ]
        buf = io.StringIO()
        names = [f"F{k}" for k in range(k_star)]
        buf.write(",".join(["ticker", *names]) + "\n")
        for i, ticker in enumerate(tickers):
            buf.write(",".join([ticker, *(reporting.fnum(v) for v in factors.factors[i])]) + "\n")
        p = out_dir / f"factors_{view}.csv"
        _write(p, buf.getvalue())
        paths.append(str(p))
        meta = {
            "view": view,
            "k_star": k_star,
            "factor_names": names,
            "labels": list(labels),
            "var_explained": [float(v) for v in var],
            "composition": composition,
            "feature_correlation_pct": [
                [_clean_float(100.0 * v) for v in row] for row in corr
            ],
        }
        p = out_dir / f"factors_{view}.json"
        _write(p, _dump_json(meta))
        paths.append(str(p))
        ranks[view] = k_star
    return {"k_star": ranks, "artifacts": paths}


def _load_factors(cfg: RunConfig, view: str) -> tuple[dict, tuple[str, ...], np.ndarray]:
    meta_path = _require(
        cfg.artifacts_dir / "factors" / f"factors_{view}.json", "run the factors stage first"
    )
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    csv_path = _require(
        cfg.artifacts_dir / "factors" / f"factors_{view}.csv", "run the factors stage first"
    )
    tickers = []
    rows = []
    with csv_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            tickers.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return meta, tuple(tickers), np.array(rows, dtype=float)


# --------------------------------------------------------------------------
# regress


def _result_to_json(res: regression.RegressionResult) -> dict:
    return {
        "term_labels": list(res.term_labels),
        "coefficients": [float(c) for c in res.coefficients],
        "standard_errors": [float(s) for s in res.standard_errors],
        "t_stats": [_clean_float(t) for t in res.t_stats],
        "p_values": [_clean_float(p) for p in res.p_values],
        "flags": list(regression.significance_flags(res)),
        "r_squared": float(res.r_squared),
        "adj_r_squared": float(res.adj_r_squared),
        "n_obs": res.n_obs,
        "n_regressors": res.n_regressors,
        "rank_deficient": res.rank_deficient,
        "dropped_columns": list(res.dropped_columns),
        "condition_number": _clean_float(res.condition_number),
        "warnings": list(res.warnings),
    }


def _result_from_json(obj: dict) -> regression.RegressionResult:
    return regression.RegressionResult(
        term_labels=tuple(obj["term_labels"]),
        coefficients=np.array(obj["coefficients"], dtype=float),
        standard_errors=np.array(obj["standard_errors"], dtype=float),
        t_stats=np.array([_restore_float(t) for t in obj["t_stats"]], dtype=float),
        p_values=np.array([_restore_float(p) for p in obj["p_values"]], dtype=float),
        r_squared=obj["r_squared"],
        adj_r_squared=obj["adj_r_squared"],
        n_obs=obj["n_obs"],
        n_regressors=obj["n_regressors"],
        rank_deficient=obj["rank_deficient"],
        dropped_columns=tuple(obj["dropped_columns"]),
        condition_number=_restore_float(obj.get("condition_number")),
        warnings=tuple(obj["warnings"]),
    )


def stage_regress(cfg: RunConfig) -> dict:
    regressions = []
    join_reports = {}
    for window in cfg.regression_windows:
        stats = _load_moments(cfg, window)
        for view in cfg.views:
            tickers, labels, values = _load_matrix(cfg, view)
            raw_suite = regression.regression_suite(tickers, values.astype(float), labels, stats)
            meta, f_tickers, f_values = _load_factors(cfg, view)
            factor_suite = regression.regression_suite(
                f_tickers, f_values, tuple(meta["factor_names"]), stats
            )
            join_reports[f"{view}_{window}"] = {
                "dropped_design_tickers": list(raw_suite.dropped_design_tickers),
                "dropped_stat_tickers": list(raw_suite.dropped_stat_tickers),
                "notes": list(raw_suite.notes),
            }
            for design, suite in (("raw", raw_suite), ("factor", factor_suite)):
                for dep in regression.DEPENDENTS:
                    regressions.append(
                        {
                            "id": f"{design}_{view}_{window}_{dep}",
                            "design": design,
                            "view": view,
                            "window": window,
                            "dependent": dep,
                            "result": _result_to_json(suite.results[dep]),
                        }
                    )
    correlations_paths = []
    for view in cfg.views:
        tickers, labels, values = _load_matrix(cfg, view)
        table = regression.CorrelationTable(
            labels=labels, values_pct=100.0 * regression.pearson_matrix(values.astype(float))
        )
        payload = {
            "labels": list(table.labels),
            "values_pct": [[_clean_float(v) for v in row] for row in table.values_pct],
        }
        p = cfg.artifacts_dir / "regress" / f"correlation_{view}.json"
        _write(p, _dump_json(payload))
        correlations_paths.append(str(p))
    out = cfg.artifacts_dir / "regress" / "regressions.json"
    _write(out, _dump_json({"regressions": regressions, "join_reports": join_reports}))
    return {
        "regressions": len(regressions),
        "artifacts": [str(out), *correlations_paths],
    }


# --------------------------------------------------------------------------
# report


def _load_regressions(cfg: RunConfig) -> dict:
    path = _require(
        cfg.artifacts_dir / "regress" / "regressions.json", "run the regress stage first"
    )
    return json.loads(path.read_text(encoding="utf-8"))


def stage_report(cfg: RunConfig) -> dict:
    reports = cfg.reports_dir
    tables: list[reporting.TableRef] = []

    def emit(rel: str, fmt: str, text: str) -> None:
        path = reports / rel
        _write(path, text)
        tables.append(reporting.TableRef(name=rel, format=fmt, path=str(path)))

    # Regressions -------------------------------------------------------
    payload = _load_regressions(cfg)
    lexicon, scanned, _ = _load_scan(cfg)
    grouped: dict[tuple[str, str, str], dict[str, regression.RegressionResult]] = {}
    for entry in payload["regressions"]:
        key = (entry["design"], entry["view"], entry["window"])
        grouped.setdefault(key, {})[entry["dependent"]] = _result_from_json(entry["result"])
        rel = f"regressions/{entry['id']}.csv"
        emit(rel, "csv", reporting.regression_result_csv(_result_from_json(entry["result"])))
    dep_titles = {"mean": "E[R]", "std": "Std[R]", "skewness": "Skew[R]", "kurtosis": "Kurt[R]"}
    for (design, view, window), results in grouped.items():
        if design == "raw":
            term_rows = [*lexicon.labels, "Intercept"]
        else:
            meta = _load_factors(cfg, view)[0]
            term_rows = [*meta["factor_names"], "Intercept"]
        label = _window_label(cfg, window)
        titles = {d: f"{dep_titles[d]} {label}" for d in results}
        md = reporting.render_regression_table(
            results,
            term_rows,
            titles,
            title=f"{design} {view} regressions, {window} window",
        )
        emit(f"regressions/{design}_{view}_{window}.md", "markdown", md)

    # Scree ---------------------------------------------------------------
    for view in cfg.views:
        for name in (f"scree_{view}.csv", f"var_explained_{view}.txt"):
            src = _require(cfg.artifacts_dir / "svd" / name, "run the svd stage first")
            fmt = "csv" if name.endswith(".csv") else "text"
            emit(f"scree/{name}", fmt, src.read_text(encoding="utf-8"))

    # Facets ---------------------------------------------------------------
    for facet in kw.FACETS:
        table = kw.aggregate_facet(scanned, lexicon, facet)
        emit(f"facets/facet_{facet}.csv", "csv", reporting.render_facets(table))

    # Correlations ----------------------------------------------------------
    for view in cfg.views:
        path = _require(
            cfg.artifacts_dir / "regress" / f"correlation_{view}.json",
            "run the regress stage first",
        )
        obj = json.loads(path.read_text(encoding="utf-8"))
        table = regression.CorrelationTable(
            labels=tuple(obj["labels"]),
            values_pct=np.array(
                [[_restore_float(v) for v in row] for row in obj["values_pct"]], dtype=float
            ),
        )
        emit(
            f"correlations/mentions_{view}.md",
            "markdown",
            reporting.render_correlation_markdown(
                table, f"Correlation of keyword mentions ({view}), %"
            ),
        )
        emit(f"correlations/mentions_{view}.csv", "csv", reporting.render_correlation_csv(table))
        meta = _load_factors(cfg, view)[0]
        pct = np.array(
            [[_restore_float(v) for v in row] for row in meta["feature_correlation_pct"]],
            dtype=float,
        )
        emit(
            f"correlations/factor_features_{view}.md",
            "markdown",
            reporting.render_factor_feature_markdown(
                tuple(meta["factor_names"]),
                tuple(meta["labels"]),
                pct,
                f"Correlation of approximate factors with features ({view})",
            ),
        )

    # Summary ----------------------------------------------------------------
    for window in cfg.regression_windows:
        stats = _load_moments(cfg, window)
        summary = market.cross_section_summary(stats)
        emit(f"summary/summary_{window}.csv", "csv", reporting.render_summary_csv(summary))
        emit(
            f"summary/summary_{window}.md",
            "markdown",
            reporting.render_summary_markdown(
                summary,
                f"Cross-sectional return statistics, {_window_label(cfg, window)} ({window})",
            ),
        )

    snapshot = cfg.snapshot()
    _write(reports / "config.json", _dump_json(snapshot))
    bundle = reporting.ReportBundle(
        run_config_snapshot=snapshot, tables=tuple(tables), timestamp=cfg.timestamp
    )
    _write(reports / "manifest.json", reporting.bundle_manifest(bundle))
    missing = [t.path for t in tables if not Path(t.path).is_file()]
    if missing:
        raise InputError(f"report bundle lists files that are missing: {missing}")
    return {
        "report_dir": str(reports),
        "tables": [{"name": t.name, "format": t.format, "path": t.path} for t in tables],
    }


# --------------------------------------------------------------------------
# dispatch

_STAGE_FNS = {
    "scan": stage_scan,
    "matrix": stage_matrix,
    "moments": stage_moments,
    "svd": stage_svd,
    "factors": stage_factors,
    "regress": stage_regress,
    "report": stage_report,
}


def run_stage(cfg: RunConfig, name: str) -> dict:
    if name not in _STAGE_FNS:
        raise InputError(f"unknown stage {name!r}; expected one of {STAGES}")
    try:
        return _STAGE_FNS[name](cfg)
    except StageError:
        raise
    except FilingsMinerError as exc:
        raise StageError(name, exc) from exc


def run_fetch(cfg: RunConfig) -> dict:
    try:
        return cmd_fetch(cfg)
    except FilingsMinerError as exc:
        raise StageError("fetch", exc) from exc


def run_analyze(cfg: RunConfig) -> dict:
    """Run scan through report in order; corpus and prices must exist."""
    summary: dict = {}
    for name in STAGES:
        summary = run_stage(cfg, name)
    summary["stages"] = list(STAGES)
    return summary
