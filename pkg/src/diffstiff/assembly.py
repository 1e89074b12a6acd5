"""Global stiffness assembly: sparsity planning, scatter, load reduction.

The free-DOF submatrix is stored as the lower triangle in CSC form.  All
scatter indices are computed once per topology (plan_assembly); assembling a
new set of element matrices is then a single unbuffered add in a fixed order,
so repeated assemblies inside an optimization loop are cheap and
deterministic.  Boundary conditions are imposed by reduction: entries whose
row or column is fixed are simply never scattered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass
class AssemblyPlan:
    """Precomputed sparsity pattern and scatter maps for one topology."""

    n: int
    indptr: np.ndarray       # lower-triangle CSC
    indices: np.ndarray
    nnz: int
    # per element-group scatter: group name -> (pos-in-group, flat k index, dest)
    scatter: dict
    # full symmetric CSC (for the factorization) mirroring lower values
    full_indptr: np.ndarray
    full_indices: np.ndarray
    full_from_lower: np.ndarray


@dataclass
class SparseSym:
    """Symmetric sparse matrix; only the lower triangle is stored."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    plan: AssemblyPlan

    def to_csc_full(self) -> sp.csc_matrix:
        p = self.plan
        return sp.csc_matrix((self.values[p.full_from_lower], p.full_indices,
                              p.full_indptr), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        return self.to_csc_full().toarray()

    @property
    def pattern_nnz(self) -> int:
        return int(self.plan.full_indices.size)


def _csc_from_keys(keys: np.ndarray, n: int):
    """Unique sorted (col * n + row) keys -> CSC indptr/indices + position map."""
    uniq = np.unique(keys)
    cols = uniq // n
    rows = uniq % n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, cols + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, rows.astype(np.int64), uniq


def plan_assembly(dofel_free_groups: dict, n_free: int) -> AssemblyPlan:
    """Build the scatter plan from free-mapped element DOF lists.

    dofel_free_groups maps a group name to an (ng, p) int array whose entries
    are free-DOF indices, with ``n_free`` marking fixed DOFs.  The pattern
    depends only on topology and supports, never on x.
    """
    key_chunks = []
    raw = {}
    for name, dofel in dofel_free_groups.items():
        dofel = np.asarray(dofel, dtype=np.int64)
        ng, p = dofel.shape
        rows = np.repeat(dofel, p, axis=1).reshape(ng, p, p)   # i = dofel[l]
        cols = np.tile(dofel, (1, p)).reshape(ng, p, p)        # j = dofel[m]
        free = (rows < n_free) & (cols < n_free)
        lower = free & (rows >= cols)
        gpos, li, mi = np.nonzero(lower)
        i = rows[gpos, li, mi]
        j = cols[gpos, li, mi]
        raw[name] = (gpos, li * p + mi, j * n_free + i)
        key_chunks.append(raw[name][2])

    all_keys = (np.concatenate(key_chunks) if key_chunks
                else np.zeros(0, dtype=np.int64))
    indptr, indices, uniq = _csc_from_keys(all_keys, n_free)
    scatter = {}
    for name, (gpos, flat, keys) in raw.items():
        scatter[name] = (gpos, flat, np.searchsorted(uniq, keys))

    # mirror the lower triangle into the full symmetric pattern
    low_cols = np.repeat(np.arange(n_free, dtype=np.int64),
                         np.diff(indptr))
    low_rows = indices
    strict = low_rows > low_cols
    full_keys = np.concatenate([low_cols * n_free + low_rows,
                                low_rows[strict] * n_free + low_cols[strict]])
    src = np.concatenate([np.arange(low_rows.size, dtype=np.int64),
                          np.flatnonzero(strict)])
    order = np.argsort(full_keys, kind="stable")
    full_keys = full_keys[order]
    src = src[order]
    full_cols = full_keys // n_free
    full_rows = full_keys % n_free
    full_indptr = np.zeros(n_free + 1, dtype=np.int64)
    np.add.at(full_indptr, full_cols + 1, 1)
    full_indptr = np.cumsum(full_indptr)

    return AssemblyPlan(n=n_free, indptr=indptr, indices=indices,
                        nnz=int(indices.size), scatter=scatter,
                        full_indptr=full_indptr, full_indices=full_rows,
                        full_from_lower=src)


def assemble(plan: AssemblyPlan, kglob_groups: dict) -> SparseSym:
    """Scatter element stiffness matrices onto the planned pattern.

    kglob_groups maps each group name to an (ng, p, p) stack aligned with the
    dofel arrays the plan was built from.
    """
    values = np.zeros(plan.nnz)
    for name, (gpos, flat, dest) in plan.scatter.items():
        k = kglob_groups[name]
        ng = k.shape[0]
        if ng != (gpos.max() + 1 if gpos.size else 0) and gpos.size and ng <= gpos.max():
            raise ValueError(f"group {name!r}: element count does not match plan")
        np.add.at(values, dest, k.reshape(ng, -1)[gpos, flat])
    return SparseSym(n=plan.n, indptr=plan.indptr, indices=plan.indices,
                     values=values, plan=plan)


def reduce_load(model, dofmap) -> tuple[np.ndarray, np.ndarray]:
    """Scatter nodal loads to free DOFs; returns (p_free, p_fixed_applied).

    Loads landing on fixed DOFs do not enter the solve but are kept for
    reaction reporting.
    """
    dpn = dofmap.dofs_per_node
    full = np.zeros(dofmap.n_nodes * dpn)
    for load in model.loads:
        row = model.node_row[load.node]
        base = row * dpn
        full[base:base + 3] += load.force
        if dpn == 6:
            full[base + 3:base + 6] += load.moment
    return full[dofmap.free], full[dofmap.fixed]
