"""Closed-form Bayes factors for all Gaussian linear models on a stream.

Marginal likelihoods use Zellner's g-prior on the slopes (default g = n,
unit information) with flat priors on the intercept and log sigma.  All
values are stored relative to the null (intercept-only) model, whose entry
is exactly zero; absolute marginals under the improper intercept/scale
prior are defined only up to a constant that cancels in every Bayes factor.

Sufficient statistics live in GramStats and support both one-observation
updates and vectorized batch accumulation, so any model's log Bayes factor
is available at any time from O(p^2) state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError, InsufficientDataError, ShapeError
from .model_space import ModelSpace, ModelVector

R2_CEIL = 1.0 - 1e-12

MODEL_PRIORS = ("uniform", "scott-berger")


@dataclass
class GramStats:
    """Cross-product accumulators for the augmented regressors z = (1, x)."""

    n: int
    sxx: np.ndarray  # (p+1, p+1)
    sxy: np.ndarray  # (p+1,)
    syy: float

    @classmethod
    def empty(cls, p: int) -> GramStats:
        return cls(n=0, sxx=np.zeros((p + 1, p + 1)), sxy=np.zeros(p + 1), syy=0.0)

    @classmethod
    def from_data(cls, x_mat: np.ndarray, y: np.ndarray) -> GramStats:
        """Batch accumulation of n observations."""
        x_mat = np.asarray(x_mat, dtype=float)
        y = np.asarray(y, dtype=float)
        if x_mat.ndim != 2 or y.shape != (x_mat.shape[0],):
            raise ShapeError(f"incompatible shapes X {x_mat.shape}, y {y.shape}")
        if not (np.all(np.isfinite(x_mat)) and np.all(np.isfinite(y))):
            raise DataError("observations must be finite")
        z = np.column_stack([np.ones(x_mat.shape[0]), x_mat])
        return cls(n=x_mat.shape[0], sxx=z.T @ z, sxy=z.T @ y, syy=float(y @ y))

    @property
    def p(self) -> int:
        return self.sxx.shape[0] - 1


def update_stats(stats: GramStats, x: np.ndarray, y: float) -> GramStats:
    """Accumulate one observation; returns a new GramStats."""
    x = np.asarray(x, dtype=float)
    if x.shape != (stats.p,):
        raise ShapeError(f"x must have length {stats.p}, got {x.shape}")
    if not (np.all(np.isfinite(x)) and np.isfinite(y)):
        raise DataError("observations must be finite")
    z = np.concatenate([[1.0], x])
    return GramStats(
        n=stats.n + 1,
        sxx=stats.sxx + np.outer(z, z),
        sxy=stats.sxy + z * y,
        syy=stats.syy + float(y) * float(y),
    )


def centered_moments(stats: GramStats) -> tuple[np.ndarray, np.ndarray, float]:
    """Centered cross-products (A, b, syy_c) derived from the raw sums."""
    n = stats.n
    xbar = stats.sxx[0, 1:] / n
    ybar = stats.sxy[0] / n
    a_mat = stats.sxx[1:, 1:] - n * np.outer(xbar, xbar)
    bvec = stats.sxy[1:] - n * xbar * ybar
    syy_c = stats.syy - n * ybar * ybar
    return a_mat, bvec, float(syy_c)


def _subset_ssr(a_mat: np.ndarray, bvec: np.ndarray, cols: np.ndarray) -> float:
    """b_S' A_SS^-1 b_S with Cholesky and jitter retries on singularity."""
    sub = a_mat[np.ix_(cols, cols)]
    rhs = bvec[cols]
    scale = float(np.trace(sub)) / len(cols)
    jitter = 0.0
    for _ in range(6):
        try:
            chol = np.linalg.cholesky(sub + jitter * np.eye(len(cols)))
            z = np.linalg.solve(chol, rhs)
            return float(z @ z)
        except np.linalg.LinAlgError:
            jitter = 1e-10 * scale if jitter == 0.0 else jitter * 100.0
    raise np.linalg.LinAlgError("model Gram matrix not SPD even with ridge jitter")


def model_r_squared(stats: GramStats, gamma: ModelVector) -> float:
    """Coefficient of determination of one model from the Gram statistics."""
    if gamma.size == 0:
        return 0.0
    a_mat, bvec, syy_c = centered_moments(stats)
    if syy_c <= 0.0:
        return 0.0
    cols = np.nonzero(np.array(gamma.bits))[0]
    r2 = _subset_ssr(a_mat, bvec, cols) / syy_c
    return float(min(max(r2, 0.0), R2_CEIL))


def log_bf_null(stats: GramStats, gamma: ModelVector, g: float | None = None) -> float:
    """Log Bayes factor of model gamma against the intercept-only model.

    log BF = ((n-1-k)/2) log(1+g) - ((n-1)/2) log(1 + g(1-R^2)), with k the
    number of included covariates and g defaulting to n (unit information).
    """
    k = gamma.size
    if k == 0:
        return 0.0
    n = stats.n
    if n < k + 2:
        raise InsufficientDataError(f"need n >= k+2 = {k + 2} observations, have {n}")
    if g is None:
        g = float(n)
    r2 = model_r_squared(stats, gamma)
    return 0.5 * (n - 1 - k) * math.log1p(g) - 0.5 * (n - 1) * math.log1p(g * (1.0 - r2))


def model_sweep(
    stats: GramStats,
    space: ModelSpace,
    g: float | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """Log Bayes factors against the null for every model in the space.

    One shared centering of the Gram matrix plus per-model subset solves,
    dispatched to the numba or numpy kernel.
    """
    max_k = space.p
    if stats.n < max_k + 2:
        raise InsufficientDataError(f"need n >= p+2 = {max_k + 2} observations, have {stats.n}")
    if g is None:
        g = float(stats.n)
    a_mat, bvec, syy_c = centered_moments(stats)
    return _kernels.sweep_logbf(a_mat, bvec, syy_c, stats.n, g, space, backend=backend)


def logsumexp(a: np.ndarray, axis: int | None = None) -> np.ndarray | float:
    a = np.asarray(a, dtype=float)
    hi = np.max(a, axis=axis, keepdims=True)
    hi = np.where(np.isfinite(hi), hi, 0.0)
    out = np.log(np.sum(np.exp(a - hi), axis=axis, keepdims=True)) + hi
    return float(out.reshape(())) if axis is None else np.squeeze(out, axis=axis)


def average_over_imputations(tables: np.ndarray) -> np.ndarray:
    """Log of the arithmetic mean of Bayes factors across completions.

    `tables` stacks the per-imputation log Bayes factor vectors as rows;
    the result is log((1/M) sum_m exp(l)) per model, via log-sum-exp.
    """
    tables = np.asarray(tables, dtype=float)
    if tables.ndim == 1:
        tables = tables[None, :]
    if tables.ndim != 2:
        raise ShapeError(f"expected M x m table, got shape {tables.shape}")
    hi = np.max(tables, axis=0)
    return hi + np.log(np.mean(np.exp(tables - hi), axis=0))


POOLING_RULES = ("arithmetic", "geometric", "mixture")


def pool_log_bf(tables: np.ndarray, rule: str = "geometric") -> np.ndarray:
    """Combine per-imputation log Bayes factors into one vector.

    arithmetic: log of the mean Bayes factor (average_over_imputations);
    dominated by the single most favourable completion when the spread is
    large.  geometric: the mean of the log Bayes factors; systematic
    complexity penalties survive while zero-mean per-completion noise
    cancels, which keeps the pooled ranking stable under noisy imputation.
    The "mixture" rule only affects the posterior (see
    posterior_from_imputations) and pools log Bayes factors geometrically.
    """
    tables = np.asarray(tables, dtype=float)
    if tables.ndim == 1:
        tables = tables[None, :]
    if rule == "arithmetic":
        return average_over_imputations(tables)
    if rule in ("geometric", "mixture"):
        return tables.mean(axis=0)
    raise DataError(f"unknown pooling rule {rule!r}; expected one of {POOLING_RULES}")


def _log_model_prior(space: ModelSpace, prior: str) -> np.ndarray:
    if prior == "uniform":
        return np.full(space.m, -math.log(space.m))
    if prior == "scott-berger":
        p = space.p
        log_binom = np.array(
            [math.lgamma(p + 1) - math.lgamma(k + 1) - math.lgamma(p - k + 1) for k in range(p + 1)]
        )
        return -math.log(p + 1) - log_binom[space.sizes]
    raise DataError(f"unknown model prior {prior!r}; expected one of {MODEL_PRIORS}")


def posterior_model_probs(
    avg_log_bf: np.ndarray,
    space: ModelSpace,
    prior: str = "uniform",
) -> np.ndarray:
    """Posterior model probabilities from relative log marginals."""
    avg_log_bf = np.asarray(avg_log_bf, dtype=float)
    if avg_log_bf.shape != (space.m,):
        raise ShapeError(f"expected {space.m} log marginals, got {avg_log_bf.shape}")
    if not np.all(np.isfinite(avg_log_bf)):
        raise DataError("log marginals must be finite")
    logits = avg_log_bf + _log_model_prior(space, prior)
    probs = np.exp(logits - logsumexp(logits))
    return probs / probs.sum()


def posterior_from_imputations(
    tables: np.ndarray,
    space: ModelSpace,
    prior: str = "uniform",
    pooling: str = "geometric",
) -> np.ndarray:
    """Posterior model probabilities from per-imputation log Bayes factors.

    For "arithmetic" and "geometric" the log Bayes factors are pooled first
    and one posterior is formed.  For "mixture" the posterior is the average
    of the per-completion posteriors, the completed-data mixture that caps
    any single completion's influence at 1/M.
    """
    tables = np.atleast_2d(np.asarray(tables, dtype=float))
    if pooling == "mixture":
        per = np.stack([posterior_model_probs(row, space, prior) for row in tables])
        probs = per.mean(axis=0)
        return probs / probs.sum()
    return posterior_model_probs(pool_log_bf(tables, pooling), space, prior)


@dataclass
class LogMarginalTable:
    """Per-imputation and averaged log Bayes factors at one time index."""

    t: int
    values: np.ndarray  # (M, m) relative to the null model
    averaged: np.ndarray  # (m,)

    @classmethod
    def build(cls, t: int, values: np.ndarray) -> LogMarginalTable:
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if np.any(values[:, 0] != 0.0):
            raise DataError("null-model entry must be exactly 0 in every imputation row")
        return cls(t=t, values=values, averaged=average_over_imputations(values))


def write_log_marginals_csv(tables, path) -> None:
    """Dump tables as rows (t, imputation, model_index, log_bf)."""
    with open(path, "w", newline="") as fh:
        fh.write("t,imputation,model_index,log_bf\n")
        for table in tables:
            for j, row in enumerate(table.values):
                for i, v in enumerate(row):
                    fh.write(f"{table.t},{j},{i},{v:.12g}\n")
