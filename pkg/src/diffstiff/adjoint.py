"""Reverse pass: backpropagation through the fixed analysis pipeline.

Given output-level bar seeds (adjoints of the displacement vector, of element
forces, or directly of section scalars) the pass walks the static graph

    solve -> assembly -> transformation -> local stiffness / section
          -> geometry -> design variables

using closed-form adjoints:

* solve:       Kbar = -(K^-1 ubar) u^T, restricted to K's sparsity pattern;
               the factorization from the forward pass is reused and no dense
               n x n object is ever formed.
* assembly:    kbar = Kbar gathered at the element's DOF pairs (fixed rows
               and columns contribute zero).
* transform:   klocbar = Gamma kbar Gamma^T,
               gammabar = kloc Gamma (kbar^T + kbar)        (kloc symmetric).
* element force F = Gamma k u:  gammabar = Fbar (k u)^T,
               kbar = (Gamma^T Fbar) u^T, ubar = k Gamma^T Fbar.
* local/section/geometry: entry-wise Hadamard contractions with the
  analytic derivative patterns.

Every op accepts leading batch axes, so Jacobian rows are computed
independently but evaluated as stacked array operations (one linear solve
column per scalar output).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import elements as el
from . import solve as slv
from .analysis import run_analysis
from .functions import Row, SeedBundle, all_rows, evaluate_rows, objective_row, row_seeds
from .model import apply_variables

GLOBAL_X = el.GLOBAL_X
GLOBAL_Z = el.GLOBAL_Z


# -- per-operation adjoints ---------------------------------------------------

def adjoint_solve(cache, ubar: np.ndarray):
    """Backprop through u = K^-1 p.

    Returns (Kbar, pbar) with Kbar = -(K^-1 ubar) u^T materialized only on
    K's symmetric sparsity pattern (a csc matrix) and pbar = K^-1 ubar.
    """
    ubar = np.asarray(ubar, dtype=float)
    if ubar.shape != cache.u.shape:
        raise ValueError(f"ubar has shape {ubar.shape}, expected {cache.u.shape}")
    y = slv.solve(cache.factorization, ubar)
    plan = cache.K.plan
    n = cache.K.n
    cols = np.repeat(np.arange(n), np.diff(plan.full_indptr))
    vals = -y[plan.full_indices] * cache.u[cols]
    Kbar = sp.csc_matrix((vals, plan.full_indices, plan.full_indptr), shape=(n, n))
    return Kbar, y


def adjoint_assembly(Kbar, dofel_free: np.ndarray, n_free: int) -> np.ndarray:
    """Gather Kbar at one element's DOF pairs; fixed slots (index >= n_free)
    yield zero rows/columns."""
    dofel_free = np.asarray(dofel_free)
    q = dofel_free.size
    kbar = np.zeros((q, q))
    valid = np.flatnonzero(dofel_free < n_free)
    if valid.size:
        sub = Kbar[np.ix_(dofel_free[valid], dofel_free[valid])]
        kbar[np.ix_(valid, valid)] = np.asarray(sub.todense() if sp.issparse(sub) else sub)
    return kbar


def adjoint_transform(kbar, gamma, kloc):
    """Backprop through k = Gamma^T kloc Gamma."""
    klocbar = gamma @ kbar @ np.swapaxes(gamma, -1, -2)
    sym = kbar + np.swapaxes(kbar, -1, -2)
    gammabar = (kloc @ gamma) @ sym
    return gammabar, klocbar


def adjoint_local_truss(klocbar, E, A, L):
    """Backprop through kloc = (EA/L) [[1,-1],[-1,1]]; returns (Abar, Lbar)."""
    s = (klocbar[..., 0, 0] - klocbar[..., 0, 1]
         - klocbar[..., 1, 0] + klocbar[..., 1, 1])
    return (E / L) * s, (-E * A / L**2) * s


def adjoint_local_frame(klocbar, E, G, A, Iy, Iz, J, L):
    """Backprop through the 12x12 frame stiffness.

    Returns (Abar, Iybar, Izbar, Jbar, Lbar) via Hadamard contractions with
    the entry-wise derivative matrices.
    """
    MA, MJ, MIy, MIz = el.frame_stiffness_basis(E, G, L)
    dA, dJ, dIy, dIz = el.frame_stiffness_basis_dL(E, G, L)
    dkdL = A * dA + J * dJ + Iy * dIy + Iz * dIz
    c = lambda M: np.einsum("...pq,pq->...", klocbar, M)
    return c(MA), c(MIy), c(MIz), c(MJ), c(dkdL)


def adjoint_tube_section(Abar, Ibar, Jbar, Sbar, d, alpha):
    """Chain section bars through A(d,a), I(d,a), J = 2I, S = 2I/d."""
    (dA_dd, dI_dd, dJ_dd, dS_dd), (dA_da, dI_da, dJ_da, dS_da) = \
        el.tube_section_derivatives(d, alpha)
    dbar = Abar * dA_dd + Ibar * dI_dd + Jbar * dJ_dd + Sbar * dS_dd
    abar = Abar * dA_da + Ibar * dI_da + Jbar * dJ_da + Sbar * dS_da
    return dbar, abar


def adjoint_geometry(Lbar, cbar, c, L):
    """Backprop through L = |delta|, c = delta / L.

    deltabar = c Lbar + (I - c c^T) cbar / L; returns (startbar, endbar).
    """
    c = np.asarray(c, dtype=float)
    cbar = np.asarray(cbar, dtype=float)
    proj = cbar - c * np.sum(c * cbar, axis=-1, keepdims=True)
    deltabar = c * np.asarray(Lbar)[..., None] + proj / np.asarray(L)[..., None]
    return -deltabar, deltabar


def adjoint_transformation_geometry_truss(gammabar):
    """Gather cbar from the two embedded copies of c in a truss Gamma."""
    return gammabar[..., 0, 0:3] + gammabar[..., 1, 3:6]


def adjoint_frame_rotation(Rbar, c, zt, yt, wnorm, ref_is_x, roll):
    """Backprop the frame triad construction: R rows are (c, y, z) with
    y/z built from the reference-vector cross products and rolled about c."""
    cr = np.cos(roll)[..., None]
    sr = np.sin(roll)[..., None]
    rc = Rbar[..., 0, :]
    ry = Rbar[..., 1, :]
    rz = Rbar[..., 2, :]
    ytbar = cr * ry - sr * rz
    ztbar = sr * ry + cr * rz
    # yt = zt x c
    cbar = rc + np.cross(ytbar, zt)
    ztbar = ztbar + np.cross(c, ytbar)
    # zt = w / |w|
    wbar = (ztbar - zt * np.sum(zt * ztbar, axis=-1, keepdims=True)) / wnorm[..., None]
    # w = c x ref
    ref = np.where(np.asarray(ref_is_x)[..., None], GLOBAL_X, GLOBAL_Z)
    cbar = cbar + np.cross(ref, wbar)
    return cbar


def adjoint_transformation_geometry_frame(gammabar, group):
    """cbar of frame elements from the four R blocks of gammabar."""
    Rbar = sum(gammabar[..., 3 * b:3 * b + 3, 3 * b:3 * b + 3] for b in range(4))
    c = group_direction(group)
    return adjoint_frame_rotation(Rbar, c, group.triad_zt, group.triad_yt,
                                  group.triad_wnorm, group.triad_ref_x, group.roll)


def group_direction(group):
    # first triad row is the member direction
    return group.gamma[:, 0, 0:3]


def adjoint_element_force(Fbar, gamma, kglob, ud):
    """Backprop through F = Gamma k u_el; returns (gammabar, kbar, ubar_el)."""
    ku = (kglob @ ud[..., None])[..., 0]
    gammabar = Fbar[..., :, None] * ku[..., None, :]
    GtF = (Fbar[..., None, :] @ gamma)[..., 0, :]
    kbar = GtF[..., :, None] * ud[..., None, :]
    ubar_el = (kglob @ GtF[..., None])[..., 0]  # k symmetric
    return gammabar, kbar, ubar_el


# -- test oracles --------------------------------------------------------------

def dense_dudK_oracle(K: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Explicit third-order tensor du/dK for tiny systems (test-only).

    T[k, i, j] = d u_k / d K_ij = -(K^-1)[k, i] u[j].  Refuses n > 12: the
    whole point of the adjoint form is that this object is never needed.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if n > 12:
        raise ValueError("dense du/dK oracle is restricted to n <= 12")
    Kinv = np.linalg.inv(K)
    u = Kinv @ np.asarray(p, dtype=float)
    return -np.einsum("ki,j->kij", Kinv, u)


# -- batched reverse engine ----------------------------------------------------

def _scatter_rows(target_t: np.ndarray, idx: np.ndarray, vals_t: np.ndarray):
    """target_t[idx[k]] += vals_t[k] sequentially (deterministic order)."""
    np.add.at(target_t, idx, vals_t)


def _matvec(M, v):
    return (M @ v[..., None])[..., 0]


def _reverse_chunk(problem, cache, seeds: SeedBundle) -> np.ndarray:
    """Run the fixed reverse schedule for a batch of independent outputs.

    Consumes the seed arrays; returns the gradient block (B, n_vars).

    The element-matrix adjoints are rank-one in disguise: with w = Gamma^T
    Fbar - y_el, kbar = w u_el^T, so klocbar = (Gamma w) (Gamma u_el)^T and
    every Hadamard contraction collapses to a bilinear form.  The engine
    therefore only ever forms (B, ng, q)-sized factors, never stacked
    element matrices.
    """
    sk = cache.sk
    ne = sk.conn.shape[0]
    nn = cache.state.positions.shape[0]
    nf = sk.dofmap.n_free
    B = seeds.n_rows

    # element-force paths (stress outputs) feed both w and the global ubar
    GtF = {}
    ubar_force = None
    for name, Fb in seeds.Fbar.items():
        g = cache.groups[name]
        GtF[name] = _matvec(np.swapaxes(g.gamma, -1, -2), Fb)   # (B, ng, q)
        ub_el = _matvec(g.kglob, GtF[name])                     # k symmetric
        if ubar_force is None:
            ubar_force = np.zeros((nf + 1, B))
        _scatter_rows(ubar_force, g.dofel_free.ravel(),
                      ub_el.transpose(1, 2, 0).reshape(-1, B))
    ubar = seeds.ubar
    if ubar_force is not None:
        extra = ubar_force[:nf].T
        ubar = extra if ubar is None else ubar + extra

    # solve path: one factorization-backed solve column per output
    y_ext = None
    if ubar is not None and np.any(ubar):
        y = slv.solve(cache.factorization, ubar.T).reshape(nf, B).T
        y_ext = np.concatenate([y, np.zeros((B, 1))], axis=1)

    Abar = seeds.Abar if seeds.Abar is not None else np.zeros((B, ne))
    Lbar = seeds.Lbar if seeds.Lbar is not None else np.zeros((B, ne))
    Iybar = np.zeros((B, ne))
    Izbar = np.zeros((B, ne))
    Jbar = np.zeros((B, ne))
    cbar = np.zeros((B, ne, 3))

    for name, g in cache.groups.items():
        w_q = None                                   # (B, ng, q): kbar = w_q u^T
        if name in GtF:
            w_q = GtF[name].copy()
        if y_ext is not None:
            yd = y_ext[:, g.dofel_free]
            w_q = -yd if w_q is None else w_q - yd
        if w_q is None:
            continue
        idx = g.idx
        ud = g.ud
        gu = _matvec(g.gamma, ud)                    # (ng, p)
        w_p = _matvec(g.gamma, w_q)                  # (B, ng, p): klocbar = w_p gu^T

        # gammabar = Fbar (k u)^T + (kloc w_p) u^T + (kloc gu) w_q^T
        gb_pairs = []
        if name in seeds.Fbar:
            ku = _matvec(g.kglob, ud)
            gb_pairs.append((seeds.Fbar[name], ku))
        gb_pairs.append((_matvec(g.kloc, w_p), ud))
        gb_pairs.append((np.broadcast_to(_matvec(g.kloc, gu), w_p.shape), w_q))

        if name == "tr":
            s = (w_p[..., 0] - w_p[..., 1]) * (gu[..., 0] - gu[..., 1])
            E, A, L = sk.E[idx], cache.state.A[idx], cache.L[idx]
            Abar[:, idx] += (E / L) * s
            Lbar[:, idx] += (-E * A / L**2) * s
            for a, b in gb_pairs:   # cbar from the two embedded copies of c
                cbar[:, idx] += (a[..., 0, None] * b[..., 0:3]
                                 + a[..., 1, None] * b[..., 3:6])
        else:
            for M, target in ((g.MA, Abar), (g.MIy, Iybar), (g.MIz, Izbar),
                              (g.MJ, Jbar), (g.dkdL, Lbar)):
                target[:, idx] += np.sum(w_p * _matvec(M, gu), axis=-1)
            Rbar = 0.0
            for a, b in gb_pairs:   # sum the four 3x3 diagonal blocks
                a4 = np.swapaxes(a.reshape(a.shape[:-1] + (4, 3)), -1, -2)
                b4 = np.broadcast_to(b, a.shape).reshape(a.shape[:-1] + (4, 3))
                Rbar = Rbar + a4 @ b4
            c = group_direction(g)
            cbar[:, idx] += adjoint_frame_rotation(
                Rbar, c, g.triad_zt, g.triad_yt, g.triad_wnorm,
                g.triad_ref_x, g.roll)

    # geometry -> node position bars
    grad = np.zeros((B, sk.n_vars))
    if np.any(Lbar) or np.any(cbar):
        startbar, endbar = adjoint_geometry(Lbar, cbar, cache.c, cache.L)
        posbar_t = np.zeros((nn, B, 3))
        _scatter_rows(posbar_t, sk.conn[:, 1], endbar.transpose(1, 0, 2))
        _scatter_rows(posbar_t, sk.conn[:, 0], startbar.transpose(1, 0, 2))
        if sk.pos_var.size:
            vals = sk.pos_coef[:, None] * posbar_t[sk.pos_node, :, sk.pos_axis]
            _scatter_rows(grad.T, sk.pos_var, vals)

    # section scalars -> tube parameters -> variables
    tube = cache.state.is_tube
    dbar = seeds.dbar
    if tube.any() and (np.any(Abar[:, tube]) or np.any(Iybar[:, tube])
                       or np.any(Izbar[:, tube]) or np.any(Jbar[:, tube])
                       or (seeds.Sbar is not None and np.any(seeds.Sbar[:, tube]))):
        Sb = seeds.Sbar[:, tube] if seeds.Sbar is not None else 0.0
        db_t, ab_t = adjoint_tube_section(
            Abar[:, tube], Iybar[:, tube] + Izbar[:, tube], Jbar[:, tube], Sb,
            cache.state.d[tube], cache.state.alpha[tube])
        dbar_full = np.zeros((B, ne)) if dbar is None else dbar
        dbar_full[:, tube] += db_t
        dbar = dbar_full
        em = np.flatnonzero((sk.ratio_var >= 0) & tube)
        if em.size:
            abar_full = np.zeros((B, ne))
            abar_full[:, tube] = ab_t
            _scatter_rows(grad.T, sk.ratio_var[em], abar_full[:, em].T)

    em = np.flatnonzero(sk.area_var >= 0)
    if em.size:
        _scatter_rows(grad.T, sk.area_var[em], Abar[:, em].T)
    if dbar is not None:
        em = np.flatnonzero(sk.dia_var >= 0)
        if em.size:
            _scatter_rows(grad.T, sk.dia_var[em], dbar[:, em].T)
    return grad


def _chunk_size(cache, n_rows: int) -> int:
    cost = max((g.ng * g.q * g.q for g in cache.groups.values()), default=1)
    return max(1, min(n_rows, int(4_000_000 / max(cost, 1))))


def gradient_many(problem, x, rows, cache=None, state=None):
    """Values and gradients of a batch of scalar outputs at x.

    Rows are differentiated independently (one reverse trace, one
    factorization-backed solve each); returns (values, jac, state, cache).
    """
    if cache is None:
        state = apply_variables(problem, x)
        cache = run_analysis(problem, state)
    values = evaluate_rows(problem, state, cache, rows)
    jac = np.zeros((len(rows), problem.skeleton.n_vars))
    step = _chunk_size(cache, len(rows))
    for lo in range(0, len(rows), step):
        chunk = rows[lo:lo + step]
        seeds = row_seeds(problem, state, cache, chunk)
        jac[lo:lo + len(chunk)] = _reverse_chunk(problem, cache, seeds)
    return values, jac, state, cache


def _as_rows(problem, output) -> list[Row]:
    import dataclasses

    from .functions import constraint_rows

    if isinstance(output, Row):
        return [output]
    if getattr(output, "kind", None) in ("volume", "compliance", "embodied_carbon"):
        return [Row(kind=output.kind, label=output.kind)]
    # a constraint spec: expand it against the full problem
    tmp = dataclasses.replace(problem, constraints=(output,))
    return constraint_rows(tmp)


def gradient(problem, x, output):
    """Exact reverse-mode gradient of one output (or of each row a constraint
    spec expands to).  Returns (n_vars,) for a single row, else (B, n_vars)."""
    rows = _as_rows(problem, output)
    _, jac, _, _ = gradient_many(problem, x, rows)
    return jac[0] if len(rows) == 1 else jac


def finite_difference_gradient(problem, x, output, h: float = 1e-6):
    """Central-difference oracle; h is relative (step = h * max(1, |x_i|))."""
    rows = _as_rows(problem, output)
    jac = fd_jacobian(problem, x, rows, h)
    return jac[0] if len(rows) == 1 else jac


def fd_jacobian(problem, x, rows, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    jac = np.zeros((len(rows), x.size))
    for j in range(x.size):
        step = h * max(1.0, abs(x[j]))
        vals = []
        for sgn in (+1.0, -1.0):
            xp = x.copy()
            xp[j] += sgn * step
            try:
                state = apply_variables(problem, xp)
                cache = run_analysis(problem, state)
            except Exception as exc:
                raise RuntimeError(
                    f"analysis failed in FD stencil at coordinate {j}") from exc
            vals.append(evaluate_rows(problem, state, cache, rows))
        jac[:, j] = (vals[0] - vals[1]) / (2.0 * step)
    return jac
