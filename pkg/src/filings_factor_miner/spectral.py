"""Singular value decomposition and the approximate-factor construction.

For X = U S V^T (thin SVD, singular values descending) the share of
squared Frobenius norm carried by component k is s_k^2 / sum_j s_j^2,
and the retained approximate factor is F_k = X v_k / sqrt(s_k), which is
algebraically sqrt(s_k) u_k. Sign convention: the largest-magnitude
entry of each right singular vector is non-negative (ties broken by
lowest index), which makes the decomposition deterministic.

The matrix is not column-centered before decomposition; callers that
want a centered sensitivity run subtract column means first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD with orthonormal-column U (n x r) and V (p x r)."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    n_rows: int
    n_cols: int

    @property
    def r(self) -> int:
        return int(self.s.size)


@dataclass(frozen=True)
class FactorSet:
    """Retained approximate factors F (n x k_star) plus the scree vector."""

    k_star: int
    factors: np.ndarray
    source_id: str
    var_explained: np.ndarray


@dataclass(frozen=True)
class FixedRank:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise InputError(f"fixed rank must be >= 1, got {self.k}")


@dataclass(frozen=True)
class VarianceThreshold:
    tau: float

    def __post_init__(self):
        if not (0.0 <= self.tau < 1.0):
            raise InputError(f"variance threshold must lie in [0, 1), got {self.tau}")


RankRule = FixedRank | VarianceThreshold


def decompose(x: np.ndarray) -> SvdResult:
    """Thin SVD with the deterministic sign convention applied."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise InputError(f"matrix must be 2-D with at least one row and column, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise InputError("matrix contains a non-finite entry")
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    v = vt.T.copy()
    u = u.copy()
    for k in range(s.size):
        idx = int(np.argmax(np.abs(v[:, k])))
        if v[idx, k] < 0:
            v[:, k] = -v[:, k]
            u[:, k] = -u[:, k]
    return SvdResult(u=u, s=s, v=v, n_rows=x.shape[0], n_cols=x.shape[1])


def explained_variance(svd: SvdResult) -> np.ndarray:
    """s_k^2 / sum_j s_j^2; non-increasing and summing to one."""
    total = float(np.sum(svd.s**2))
    if total == 0.0:
        raise NumericalError("zero Frobenius norm: all singular values are zero")
    return svd.s**2 / total


def select_rank(var_explained: np.ndarray, rule: RankRule) -> int:
    """Pick the retained rank from the explained-variance vector.

    A threshold rule keeps every leading component whose share exceeds
    tau, and always at least one; a fixed rule returns min(k, r).
    """
    var = np.asarray(var_explained, dtype=float)
    if var.ndim != 1 or var.size < 1 or not np.isfinite(var).all():
        raise InputError("explained-variance vector must be a non-empty finite 1-D array")
    if isinstance(rule, FixedRank):
        return min(rule.k, var.size)
    if isinstance(rule, VarianceThreshold):
        k = 0
        for share in var:
            if share > rule.tau:
                k += 1
            else:
                break
        return max(1, k)
    raise InputError(f"unknown rank rule: {rule!r}")


def build_factors(x: np.ndarray, svd: SvdResult, k_star: int, source_id: str = "") -> FactorSet:
    """Approximate factors F_k = X v_k / sqrt(s_k) for k < k_star.

    Singular values below the usual rank tolerance (max(n,p) * eps * s_0)
    count as zero; dividing by them would amplify noise, not signal.
    """
    x = np.asarray(x, dtype=float)
    if k_star < 1:
        raise InputError(f"k_star must be >= 1, got {k_star}")
    tol = max(svd.n_rows, svd.n_cols) * np.finfo(float).eps * (svd.s[0] if svd.s.size else 0.0)
    positive = int(np.sum(svd.s > tol))
    if k_star > positive:
        raise NumericalError(
            f"rank exceeded: k_star={k_star} but only {positive} strictly positive singular values"
        )
    factors = (x @ svd.v[:, :k_star]) / np.sqrt(svd.s[:k_star])
    return FactorSet(
        k_star=k_star,
        factors=factors,
        source_id=source_id,
        var_explained=explained_variance(svd),
    )


def vector_composition(svd: SvdResult, k: int, labels: tuple[str, ...]) -> list[tuple[str, float]]:
    """Entries of v_k paired with labels, sorted by |coefficient| descending."""
    if not (0 <= k < svd.r):
        raise InputError(f"component index {k} out of range (r={svd.r})")
    if len(labels) != svd.v.shape[0]:
        raise InputError(f"{len(labels)} labels for {svd.v.shape[0]} matrix columns")
    pairs = [(labels[j], float(svd.v[j, k])) for j in range(len(labels))]
    order = sorted(range(len(pairs)), key=lambda j: (-abs(pairs[j][1]), j))
    return [pairs[j] for j in order]


def factor_feature_correlation(factors: FactorSet, x: np.ndarray) -> np.ndarray:
    """Pearson correlations (k_star x p) between factors and data columns.

    Zero-variance data or factor columns yield NaN, reported as undefined
    rather than 0.
    """
    x = np.asarray(x, dtype=float)
    f = factors.factors
    if x.shape[0] != f.shape[0]:
        raise InputError(f"factor rows {f.shape[0]} do not match data rows {x.shape[0]}")
    fc = f - f.mean(axis=0)
    xc = x - x.mean(axis=0)
    f_norm = np.sqrt(np.sum(fc**2, axis=0))
    x_norm = np.sqrt(np.sum(xc**2, axis=0))
    out = np.full((f.shape[1], x.shape[1]), np.nan)
    for i in range(f.shape[1]):
        if f_norm[i] == 0.0:
            continue
        for j in range(x.shape[1]):
            if x_norm[j] == 0.0:
                continue
            out[i, j] = float(fc[:, i] @ xc[:, j] / (f_norm[i] * x_norm[j]))
    return out
