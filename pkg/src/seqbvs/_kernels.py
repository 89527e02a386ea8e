"""Hot numeric kernels: numba fast path with a pure-numpy fallback.

The all-subsets Bayes-factor sweep dominates the experiment's runtime
(2**p subset solves per imputation per time step), so it is implemented
twice: a numba ``@njit`` per-model loop and a batched numpy path that
groups models by size and uses vectorized Cholesky solves.

Backend selection: the environment variable ``SEQBVS_BACKEND`` may be
``auto`` (default: numba when importable), ``numba`` (required, raises if
missing), or ``numpy`` (force the fallback).  ``benchmarks/bench_backends.py``
compares the two.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ConfigError

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


_R2_CEIL = 1.0 - 1e-12
_JITTER = 1e-10


def resolve_backend(name: str | None = None) -> str:
    """Resolve a backend name ('auto'/'numba'/'numpy') to a concrete one."""
    if name is None:
        name = os.environ.get("SEQBVS_BACKEND", "auto")
    name = name.lower()
    if name == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if name == "numba":
        if not HAS_NUMBA:
            raise ConfigError("SEQBVS_BACKEND=numba but numba is not importable")
        return "numba"
    if name == "numpy":
        return "numpy"
    raise ConfigError(f"unknown backend {name!r}; expected auto, numba or numpy")


ACTIVE_BACKEND = resolve_backend()


def _log_bf_from_r2(r2: np.ndarray, k: np.ndarray | int, n: int, g: float) -> np.ndarray:
    """Closed-form g-prior log Bayes factor against the null given R^2."""
    return 0.5 * (n - 1 - k) * np.log1p(g) - 0.5 * (n - 1) * np.log1p(g * (1.0 - r2))


def sweep_logbf_numpy(
    a_mat: np.ndarray,
    bvec: np.ndarray,
    syy: float,
    n: int,
    g: float,
    groups: list[tuple[int, np.ndarray, np.ndarray]],
) -> np.ndarray:
    """Per-model log Bayes factors via size-grouped batched Cholesky solves."""
    m = sum(len(members) for _, _, members in groups)
    out = np.zeros(m)
    if syy <= 0.0:
        return out
    for k, cols, members in groups:
        if k == 0:
            continue
        sub = a_mat[cols[:, :, None], cols[:, None, :]]
        rhs = bvec[cols]
        scale = np.mean(np.trace(sub, axis1=1, axis2=2)) / k
        jitter = 0.0
        for _ in range(6):
            try:
                chol = np.linalg.cholesky(sub + jitter * np.eye(k))
                break
            except np.linalg.LinAlgError:
                jitter = _JITTER * scale if jitter == 0.0 else jitter * 100.0
        else:
            raise np.linalg.LinAlgError("subset Gram matrix not SPD even with jitter")
        z = np.linalg.solve(chol, rhs[:, :, None])[:, :, 0]
        ssr = np.einsum("ij,ij->i", z, z)
        r2 = np.clip(ssr / syy, 0.0, _R2_CEIL)
        out[members] = _log_bf_from_r2(r2, k, n, g)
    return out


@njit(cache=True)
def _chol_ssr(sub: np.ndarray, rhs: np.ndarray, k: int, scale: float) -> float:
    """b' A^-1 b for the k x k leading block, Cholesky with jitter retries.

    Destroys `sub` and `rhs`.  Returns the squared norm of the forward
    solve L z = b, which equals b' A^-1 b.
    """
    jitter = 0.0
    for _attempt in range(6):
        ok = True
        lmat = np.empty((k, k))
        for r in range(k):
            for c in range(r + 1):
                acc = sub[r, c]
                if r == c:
                    acc += jitter
                for q in range(c):
                    acc -= lmat[r, q] * lmat[c, q]
                if r == c:
                    if acc <= 0.0:
                        ok = False
                        break
                    lmat[r, r] = np.sqrt(acc)
                else:
                    lmat[r, c] = acc / lmat[c, c]
            if not ok:
                break
        if ok:
            ssr = 0.0
            z = np.empty(k)
            for r in range(k):
                acc = rhs[r]
                for q in range(r):
                    acc -= lmat[r, q] * z[q]
                z[r] = acc / lmat[r, r]
                ssr += z[r] * z[r]
            return ssr
        jitter = _JITTER * scale if jitter == 0.0 else jitter * 100.0
    return np.nan


@njit(cache=True)
def _sweep_logbf_numba(
    a_mat: np.ndarray,
    bvec: np.ndarray,
    syy: float,
    n: int,
    g: float,
    bits: np.ndarray,
) -> np.ndarray:
    m, p = bits.shape
    out = np.zeros(m)
    if syy <= 0.0:
        return out
    idx = np.empty(p, dtype=np.int64)
    sub = np.empty((p, p))
    rhs = np.empty(p)
    log1pg = np.log1p(g)
    for i in range(m):
        k = 0
        for c in range(p):
            if bits[i, c] != 0:
                idx[k] = c
                k += 1
        if k == 0:
            continue
        scale = 0.0
        for r in range(k):
            rhs[r] = bvec[idx[r]]
            for c in range(k):
                sub[r, c] = a_mat[idx[r], idx[c]]
            scale += sub[r, r]
        scale /= k
        ssr = _chol_ssr(sub[:k, :k], rhs[:k], k, scale)
        r2 = ssr / syy
        if r2 < 0.0:
            r2 = 0.0
        elif r2 > _R2_CEIL:
            r2 = _R2_CEIL
        out[i] = 0.5 * (n - 1 - k) * log1pg - 0.5 * (n - 1) * np.log1p(g * (1.0 - r2))
    return out


def sweep_logbf(
    a_mat: np.ndarray,
    bvec: np.ndarray,
    syy: float,
    n: int,
    g: float,
    space,
    backend: str | None = None,
) -> np.ndarray:
    """Dispatch the all-subsets sweep to the active backend."""
    which = ACTIVE_BACKEND if backend is None else resolve_backend(backend)
    if which == "numba":
        out = _sweep_logbf_numba(a_mat, bvec, float(syy), int(n), float(g), space.bits)
        if np.any(np.isnan(out)):
            raise np.linalg.LinAlgError("subset Gram matrix not SPD even with jitter")
        return out
    return sweep_logbf_numpy(a_mat, bvec, float(syy), int(n), float(g), space.size_groups())
