"""Enumeration and indexing of the 2**p candidate regression models.

A model is a binary inclusion vector over the p covariates.  The index of a
model is the little-endian integer of its bits: covariate 1 is the lowest
bit, so index 0 is the null model and index 2**p - 1 the full model.  This
ordering is fixed and is the one used in all persisted output.

The intercept is not part of the inclusion vector; every model is fit with
an intercept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeLimitError

MAX_P = 20


@dataclass(frozen=True)
class ModelVector:
    """Binary inclusion vector (gamma_1, ..., gamma_p) for one model."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) == 0 or any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be a non-empty sequence of 0/1")

    @property
    def p(self) -> int:
        return len(self.bits)

    @property
    def index(self) -> int:
        """Little-endian integer index of this model."""
        return sum(b << k for k, b in enumerate(self.bits))

    @property
    def size(self) -> int:
        """Number of included covariates."""
        return sum(self.bits)

    def includes(self, k: int) -> bool:
        """Whether covariate k (1-based) is included."""
        if not 1 <= k <= self.p:
            raise IndexError(f"covariate index {k} outside 1..{self.p}")
        return self.bits[k - 1] == 1

    @classmethod
    def from_index(cls, i: int, p: int) -> ModelVector:
        if not 0 <= i < (1 << p):
            raise IndexError(f"model index {i} outside 0..{(1 << p) - 1}")
        return cls(tuple((i >> k) & 1 for k in range(p)))


class ModelSpace:
    """The complete ordered list of all 2**p models.

    `bits` is the (m, p) uint8 matrix whose row i is the inclusion vector of
    model i; `sizes` holds the per-model covariate counts.  Instances are
    immutable after construction and safe to share across threads.
    """

    def __init__(self, p: int) -> None:
        if not 1 <= p <= MAX_P:
            raise SizeLimitError(f"p must be in 1..{MAX_P}, got {p}")
        self.p = p
        self.m = 1 << p
        idx = np.arange(self.m, dtype=np.uint32)
        self.bits = ((idx[:, None] >> np.arange(p, dtype=np.uint32)) & 1).astype(np.uint8)
        self.bits.setflags(write=False)
        self.sizes = self.bits.sum(axis=1).astype(np.int64)
        self.sizes.setflags(write=False)
        self._size_groups: list[tuple[int, np.ndarray, np.ndarray]] | None = None

    def model(self, i: int) -> ModelVector:
        if not 0 <= i < self.m:
            raise IndexError(f"model index {i} outside 0..{self.m - 1}")
        return ModelVector(tuple(int(b) for b in self.bits[i]))

    def index_of(self, gamma: ModelVector) -> int:
        if gamma.p != self.p:
            raise IndexError(f"model has p={gamma.p}, space has p={self.p}")
        return gamma.index

    def size_groups(self) -> list[tuple[int, np.ndarray, np.ndarray]]:
        """Models grouped by size: (k, covariate-index matrix, model indices).

        For each size k the covariate-index matrix has shape (count_k, k) and
        row r lists the included covariates (0-based) of the r-th model of
        that size.  Used by the batched pure-numpy sweep kernel; computed
        lazily and cached.
        """
        if self._size_groups is None:
            groups = []
            for k in range(self.p + 1):
                members = np.nonzero(self.sizes == k)[0]
                if k == 0:
                    cols = np.empty((len(members), 0), dtype=np.int64)
                else:
                    cols = np.vstack([np.nonzero(self.bits[i])[0] for i in members])
                groups.append((k, cols, members))
            self._size_groups = groups
        return self._size_groups

    def __len__(self) -> int:
        return self.m

    def __iter__(self):
        for i in range(self.m):
            yield self.model(i)

    def __repr__(self) -> str:
        return f"ModelSpace(p={self.p}, m={self.m})"


def enumerate_models(p: int) -> ModelSpace:
    """Build the full model space for p covariates (p <= 20 memory guard)."""
    return ModelSpace(p)


def includes(gamma: ModelVector, k: int) -> bool:
    """Membership predicate: covariate k (1-based) is in model gamma."""
    return gamma.includes(k)
