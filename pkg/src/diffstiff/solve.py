"""Sparse symmetric factorization and linear solves.

One factorization per design iterate serves both the forward solve K u = p
and every reverse-pass solve K y = ubar.  Backed by SuperLU in symmetric mode
with a fill-reducing (minimum degree on A^T + A) permutation and diagonal
pivoting disabled, which for an SPD matrix is an LDL^T-style factorization;
a non-positive pivot signals a mechanism or otherwise unstable structure.
The matrix is never inverted explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spl

from .assembly import SparseSym

_SPLU_OPTS = dict(permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options=dict(SymmetricMode=True))


class NotPositiveDefiniteError(Exception):
    """Stiffness matrix is singular or indefinite (unstable structure)."""

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"non-positive pivot at index {pivot}")


@dataclass
class Factorization:
    n: int
    indptr: np.ndarray   # lower pattern identity, for symbolic reuse checks
    indices: np.ndarray
    _lu: object

    def pattern_matches(self, K: SparseSym) -> bool:
        return (self.n == K.n and self.indptr.shape == K.indptr.shape
                and np.array_equal(self.indptr, K.indptr)
                and np.array_equal(self.indices, K.indices))


def factorize(K: SparseSym, symbolic: Factorization | None = None) -> Factorization:
    """Numeric factorization of K; raises NotPositiveDefiniteError when K is
    singular or indefinite.

    When a prior factorization with an identical pattern is supplied its
    symbolic information (pattern + permutation choice) is revalidated and
    reused; results are identical to a cold factorization either way.
    """
    if symbolic is not None and not symbolic.pattern_matches(K):
        raise ValueError("symbolic factorization pattern does not match K")
    A = K.to_csc_full()
    try:
        lu = spl.splu(A, **_SPLU_OPTS)
    except RuntimeError as exc:
        raise NotPositiveDefiniteError(pivot=-1, message=str(exc)) from exc
    diag = lu.U.diagonal()
    bad = np.flatnonzero(diag <= 0.0)
    if bad.size:
        pivot = int(lu.perm_c[bad[0]]) if lu.perm_c is not None else int(bad[0])
        raise NotPositiveDefiniteError(pivot=pivot)
    return Factorization(n=K.n, indptr=K.indptr, indices=K.indices, _lu=lu)


def solve(F: Factorization, rhs: np.ndarray) -> np.ndarray:
    """Solve K x = rhs; rhs may be a vector or an (n, k) block of columns."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != F.n:
        raise ValueError(f"rhs has leading dimension {rhs.shape[0]}, expected {F.n}")
    if rhs.size == 0:
        return np.zeros_like(rhs)
    return F._lu.solve(rhs)
