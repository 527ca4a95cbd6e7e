"""Cross-sectional OLS with classical inference, plus Pearson correlation tables.

The solver appends an intercept, drops exactly-constant columns with a
warning, detects exact collinearity among the remaining columns (fitting
a maximal independent subset when found), and solves the least-squares
problem through an orthogonal decomposition. Standard errors are
classical homoskedastic OLS; two-tailed p-values come from the Student-t
distribution evaluated via the regularized incomplete beta function.
Near-rank-deficiency is reported (not repaired) through a
condition-number warning above 1e8, which is what motivates the separate
SVD factor track.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.linalg import solve_triangular
from scipy.optimize import brentq

from .errors import InputError
from .keywords import MentionMatrix
from .market import MomentStats

logger = logging.getLogger(__name__)

CONDITION_WARN_THRESHOLD = 1e8
DEPENDENTS = ("mean", "std", "skewness", "kurtosis")
FLAG_NONE = "none"
FLAG_90 = "90%"
FLAG_99 = "99%"


def student_t_two_tailed_p(t: float, dof: int) -> float:
    """P(|T_dof| >= |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2)."""
    if dof < 1:
        raise InputError(f"degrees of freedom must be >= 1, got {dof}")
    if math.isnan(t):
        return math.nan
    return float(special.betainc(0.5 * dof, 0.5, dof / (dof + t * t)))


def t_critical_value(dof: int, alpha: float = 0.10) -> float:
    """Two-tailed critical value: |t| with P(|T_dof| >= t) = alpha."""
    if not (0.0 < alpha < 1.0):
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    hi = 2.0
    while student_t_two_tailed_p(hi, dof) > alpha:
        hi *= 2.0
    return float(brentq(lambda t: student_t_two_tailed_p(t, dof) - alpha, 0.0, hi, xtol=1e-12))


@dataclass(frozen=True)
class RegressionResult:
    """OLS fit: retained terms (intercept last), inference, and drop report."""

    term_labels: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r_squared: float
    adj_r_squared: float
    n_obs: int
    n_regressors: int
    rank_deficient: bool
    dropped_columns: tuple[str, ...]
    condition_number: float
    warnings: tuple[str, ...]


def _independent_subset(z: np.ndarray, forced: int) -> list[int]:
    """Greedy maximal independent column subset, keeping column ``forced``."""
    cols = [forced]
    rank = 1
    for j in range(z.shape[1]):
        if j == forced:
            continue
        candidate = cols + [j]
        if np.linalg.matrix_rank(z[:, candidate]) > rank:
            cols = candidate
            rank += 1
    return sorted(c for c in cols)


def ols(y: np.ndarray, x: np.ndarray, labels: list[str] | tuple[str, ...]) -> RegressionResult:
    """Least squares of y on [x, intercept] with classical standard errors.

    Raises "insufficient observations" when n <= p + 1 counted over the
    columns that actually vary (constant columns carry no estimable
    coefficient, so they do not consume observations). Exact collinearity
    among the varying columns is resolved by fitting a maximal
    independent subset and flagging the result rank-deficient.
    """
    y = np.asarray(y, dtype=float).ravel()
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise InputError(f"design shape {x.shape} does not match {y.size} observations")
    if len(labels) != x.shape[1]:
        raise InputError(f"{len(labels)} labels for {x.shape[1]} design columns")
    if not (np.isfinite(y).all() and np.isfinite(x).all()):
        raise InputError("y and X must be finite")
    n = y.size
    labels = [str(l) for l in labels]

    warnings: list[str] = []
    varying = [j for j in range(x.shape[1]) if np.ptp(x[:, j]) != 0.0]
    zero_var = [labels[j] for j in range(x.shape[1]) if j not in set(varying)]
    if zero_var:
        warnings.append(f"dropped zero-variance columns: {', '.join(zero_var)}")
        logger.warning("dropped zero-variance columns: %s", ", ".join(zero_var))

    p_keep = len(varying)
    if n <= p_keep + 1:
        raise InputError(
            f"insufficient observations: n={n} for {p_keep} varying regressors plus intercept"
        )

    # Intercept appended as the last column so term order matches the output.
    z = np.column_stack([x[:, varying], np.ones(n)]) if varying else np.ones((n, 1))
    intercept_col = z.shape[1] - 1
    kept = list(range(z.shape[1]))
    collinear_dropped: list[str] = []
    if np.linalg.matrix_rank(z) < z.shape[1]:
        kept = _independent_subset(z, forced=intercept_col)
        dropped_idx = [j for j in range(z.shape[1]) if j not in set(kept)]
        collinear_dropped = [labels[varying[j]] for j in dropped_idx]
        warnings.append(f"dropped exactly collinear columns: {', '.join(collinear_dropped)}")
        logger.warning("dropped exactly collinear columns: %s", ", ".join(collinear_dropped))
    z_ret = z[:, kept]
    term_labels = tuple(
        labels[varying[j]] if j != intercept_col else "Intercept" for j in kept
    )

    beta, *_ = np.linalg.lstsq(z_ret, y, rcond=None)
    resid = y - z_ret @ beta
    dof = n - z_ret.shape[1]
    ssr = float(resid @ resid)
    sigma2 = ssr / dof

    r = np.linalg.qr(z_ret, mode="r")
    r_inv = solve_triangular(r, np.eye(r.shape[0]))
    xtx_inv = r_inv @ r_inv.T
    se = np.sqrt(np.maximum(sigma2 * np.diag(xtx_inv), 0.0))

    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(se > 0.0, beta / se, math.nan)
    p_values = np.array([student_t_two_tailed_p(t, dof) for t in t_stats])

    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        r_squared = 1.0
    else:
        r_squared = 1.0 - ssr / sst
    p_eff = z_ret.shape[1] - 1
    adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) / (n - p_eff - 1)

    singular = np.linalg.svd(z_ret, compute_uv=False)
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else math.inf
    if condition > CONDITION_WARN_THRESHOLD:
        warnings.append(f"near rank deficiency: condition number {condition:.3e}")
        logger.warning("near rank deficiency: condition number %.3e", condition)

    return RegressionResult(
        term_labels=term_labels,
        coefficients=beta,
        standard_errors=se,
        t_stats=t_stats,
        p_values=p_values,
        r_squared=float(r_squared),
        adj_r_squared=float(adj_r_squared),
        n_obs=n,
        n_regressors=p_eff,
        rank_deficient=bool(collinear_dropped),
        dropped_columns=tuple(zero_var + collinear_dropped),
        condition_number=condition,
        warnings=tuple(warnings),
    )


def significance_flags(result: RegressionResult, confidence: float = 0.90) -> tuple[str, ...]:
    """Per-term flag from strict two-tailed p-value thresholds (0.10 / 0.01)."""
    if not (0.0 < confidence < 1.0):
        raise InputError(f"confidence must lie in (0, 1), got {confidence}")
    low = 1.0 - confidence
    flags = []
    for p in result.p_values:
        if math.isnan(p):
            flags.append(FLAG_NONE)
        elif p < 0.01:
            flags.append(FLAG_99)
        elif p < low:
            flags.append(FLAG_90)
        else:
            flags.append(FLAG_NONE)
    return tuple(flags)


@dataclass(frozen=True)
class SuiteResult:
    """One regression per dependent moment, plus the ticker-join report."""

    results: dict[str, RegressionResult]
    dropped_design_tickers: tuple[str, ...]
    dropped_stat_tickers: tuple[str, ...]
    notes: tuple[str, ...]


def regression_suite(
    tickers: tuple[str, ...],
    design: np.ndarray,
    labels: tuple[str, ...],
    stats: list[MomentStats],
    dependents: tuple[str, ...] = DEPENDENTS,
) -> SuiteResult:
    """Regress each moment on the design rows after an inner ticker join.

    Unmatched tickers on either side are reported, never silently
    dropped. Rows whose dependent is undefined (NaN skew/kurtosis from a
    degenerate series) are excluded for that dependent only.
    """
    design = np.asarray(design, dtype=float)
    by_ticker = {s.ticker: s for s in stats}
    common = [i for i, t in enumerate(tickers) if t in by_ticker]
    dropped_design = tuple(t for t in tickers if t not in by_ticker)
    dropped_stats = tuple(sorted(set(by_ticker) - set(tickers)))
    if not common:
        raise InputError("ticker join between mention rows and return stats is empty")

    notes: list[str] = []
    results: dict[str, RegressionResult] = {}
    base_rows = design[common, :]
    joined = [by_ticker[tickers[i]] for i in common]
    for dep in dependents:
        y = np.array([getattr(s, dep) for s in joined], dtype=float)
        finite = np.isfinite(y)
        if not finite.all():
            skipped = [s.ticker for s, ok in zip(joined, finite) if not ok]
            notes.append(f"{dep}: excluded tickers with undefined values: {', '.join(skipped)}")
        results[dep] = ols(y[finite], base_rows[finite, :], labels)
    return SuiteResult(
        results=results,
        dropped_design_tickers=dropped_design,
        dropped_stat_tickers=dropped_stats,
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class CorrelationTable:
    """Pairwise Pearson correlations in percent; NaN marks undefined cells."""

    labels: tuple[str, ...]
    values_pct: np.ndarray


def pearson_matrix(values: np.ndarray) -> np.ndarray:
    """Pairwise Pearson correlations of columns; zero-variance -> NaN."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] < 2:
        raise InputError("need a 2-D array with at least two rows")
    centered = values - values.mean(axis=0)
    norms = np.sqrt(np.sum(centered**2, axis=0))
    p = values.shape[1]
    out = np.full((p, p), np.nan)
    for i in range(p):
        if norms[i] == 0.0:
            continue
        out[i, i] = 1.0
        for j in range(i + 1, p):
            if norms[j] == 0.0:
                continue
            r = float(centered[:, i] @ centered[:, j] / (norms[i] * norms[j]))
            out[i, j] = out[j, i] = r
    return out


def correlation_matrix(matrix: MentionMatrix, view: str) -> CorrelationTable:
    """Keyword-by-keyword mention correlations, in percent."""
    values = matrix.view(view)
    return CorrelationTable(
        labels=matrix.lexicon.labels,
        values_pct=100.0 * pearson_matrix(values),
    )
