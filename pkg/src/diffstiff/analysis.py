"""Forward analysis pipeline: geometry -> element matrices -> assembly ->
factorize -> displacements, with every intermediate retained for the reverse
pass.

Elements are processed in two homogeneous groups (truss, frame) so that both
the forward evaluation and the reverse pass run as stacked array operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import assembly as asm
from . import elements as el
from . import solve as slv
from .elements import TRUSS_PATTERN, ZeroLengthElementError


@dataclass
class ElementGroup:
    """Stacked per-element intermediates for one element kind."""

    name: str            # "tr" | "fr"
    idx: np.ndarray      # element rows in model order
    p: int               # local force dimension (2 truss, 12 frame)
    q: int               # global element DOF count (6 truss, 12 frame)
    gamma: np.ndarray    # (ng, p, q)
    kloc: np.ndarray     # (ng, p, p)
    kglob: np.ndarray    # (ng, q, q)
    dofel_free: np.ndarray    # (ng, q), n_free marks fixed slots
    dofel_global: np.ndarray  # (ng, q)
    ud: np.ndarray = None     # (ng, q) element displacements, zeros at fixed
    floc: np.ndarray = None   # (ng, p) local force Gamma k u
    # frame extras for the reverse pass
    triad_ref_x: np.ndarray = None   # (ng,) bool
    triad_wnorm: np.ndarray = None
    triad_zt: np.ndarray = None      # (ng, 3)
    triad_yt: np.ndarray = None
    roll: np.ndarray = None
    MA: np.ndarray = None            # stiffness bases (ng, 12, 12)
    MJ: np.ndarray = None
    MIy: np.ndarray = None
    MIz: np.ndarray = None
    dkdL: np.ndarray = None          # d kloc / dL (ng, 12, 12)

    @property
    def ng(self) -> int:
        return self.idx.size


@dataclass
class AnalysisCache:
    """All forward intermediates of one analysis, read-only to the reverse pass."""

    sk: object           # model.Skeleton
    state: object        # model.ModelState
    L: np.ndarray        # (ne,)
    c: np.ndarray        # (ne, 3)
    delta: np.ndarray    # (ne, 3)
    groups: dict
    K: asm.SparseSym
    factorization: slv.Factorization
    u: np.ndarray        # (n_free,)
    p: np.ndarray        # (n_free,)
    p_fixed: np.ndarray  # applied loads on fixed DOFs
    u_ext: np.ndarray    # (n_free + 1,) zero-padded for gathers

    def group_of(self, e: int):
        return self.groups["fr"] if self.sk.is_frame[e] else self.groups["tr"]

    def reactions(self) -> np.ndarray:
        """Support reactions: internal nodal forces at fixed DOFs minus any
        directly applied loads."""
        f = self.internal_forces_full()
        return f[self.sk.dofmap.fixed] - self.p_fixed

    def internal_forces_full(self) -> np.ndarray:
        """Sum of k_e u_e scattered over all global DOFs."""
        dm = self.sk.dofmap
        full = np.zeros(dm.n_nodes * dm.dofs_per_node)
        for g in self.groups.values():
            if g.ng == 0:
                continue
            fe = np.einsum("eqr,er->eq", g.kglob, g.ud)
            np.add.at(full, g.dofel_global.ravel(), fe.ravel())
        return full


def _truss_group(sk, state, L, c, tr) -> ElementGroup:
    ng = tr.size
    ctr = c[tr]
    gamma = np.zeros((ng, 2, 6))
    gamma[:, 0, 0:3] = ctr
    gamma[:, 1, 3:6] = ctr
    kloc = (sk.E[tr] * state.A[tr] / L[tr])[:, None, None] * TRUSS_PATTERN
    kglob = np.einsum("eji,ejk,ekl->eil", gamma, kloc, gamma)
    return ElementGroup(
        name="tr", idx=tr, p=2, q=6, gamma=gamma, kloc=kloc, kglob=kglob,
        dofel_free=np.array([sk.dofel_free[e] for e in tr], dtype=int).reshape(ng, 6),
        dofel_global=np.array([sk.dofel_global[e] for e in tr], dtype=int).reshape(ng, 6),
    )


def _frame_group(sk, state, L, c, fr) -> ElementGroup:
    ng = fr.size
    gamma = np.zeros((ng, 12, 12))
    kloc = np.zeros((ng, 12, 12))
    MA = np.zeros((ng, 12, 12))
    MJ = np.zeros((ng, 12, 12))
    MIy = np.zeros((ng, 12, 12))
    MIz = np.zeros((ng, 12, 12))
    dkdL = np.zeros((ng, 12, 12))
    ref_x = np.zeros(ng, dtype=bool)
    wnorm = np.zeros(ng)
    zt = np.zeros((ng, 3))
    yt = np.zeros((ng, 3))
    for i, e in enumerate(fr):
        triad = el.frame_triad(c[e], sk.roll[e])
        ref_x[i] = triad.ref_is_x
        wnorm[i] = triad.wnorm
        zt[i] = triad.zt
        yt[i] = triad.yt
        for b in range(4):
            gamma[i, 3 * b:3 * b + 3, 3 * b:3 * b + 3] = triad.R
        bases = el.frame_stiffness_basis(sk.E[e], sk.G[e], L[e])
        MA[i], MJ[i], MIy[i], MIz[i] = bases
        kloc[i] = (state.A[e] * bases[0] + state.J[e] * bases[1]
                   + state.Iy[e] * bases[2] + state.Iz[e] * bases[3])
        dA, dJ, dIy, dIz = el.frame_stiffness_basis_dL(sk.E[e], sk.G[e], L[e])
        dkdL[i] = (state.A[e] * dA + state.J[e] * dJ
                   + state.Iy[e] * dIy + state.Iz[e] * dIz)
    kglob = np.einsum("eji,ejk,ekl->eil", gamma, kloc, gamma)
    return ElementGroup(
        name="fr", idx=fr, p=12, q=12, gamma=gamma, kloc=kloc, kglob=kglob,
        dofel_free=np.array([sk.dofel_free[e] for e in fr], dtype=int).reshape(ng, 12),
        dofel_global=np.array([sk.dofel_global[e] for e in fr], dtype=int).reshape(ng, 12),
        triad_ref_x=ref_x, triad_wnorm=wnorm, triad_zt=zt, triad_yt=yt,
        roll=sk.roll[fr], MA=MA, MJ=MJ, MIy=MIy, MIz=MIz, dkdL=dkdL,
    )


def run_analysis(problem, state) -> AnalysisCache:
    """Analyze one model state; factorization and sparsity plan are reused
    across calls on the same problem (topology never changes)."""
    sk = problem.skeleton
    pos = state.positions
    delta = pos[sk.conn[:, 1]] - pos[sk.conn[:, 0]]
    L = np.linalg.norm(delta, axis=1)
    if np.any(L < el.ZERO_LENGTH_TOL):
        e = int(np.argmin(L))
        raise ZeroLengthElementError(f"element row {e} has length {L[e]:g} m")
    c = delta / L[:, None]

    groups = {}
    if sk.tr.size:
        groups["tr"] = _truss_group(sk, state, L, c, sk.tr)
    if sk.fr.size:
        groups["fr"] = _frame_group(sk, state, L, c, sk.fr)

    if sk.plan is None:
        sk.plan = asm.plan_assembly(
            {name: g.dofel_free for name, g in groups.items()},
            sk.dofmap.n_free)
    K = asm.assemble(sk.plan, {name: g.kglob for name, g in groups.items()})

    F = slv.factorize(K, symbolic=sk.symbolic)
    sk.symbolic = F

    p, p_fixed = asm.reduce_load(problem.model, sk.dofmap)
    u = slv.solve(F, p)
    u_ext = np.concatenate([u, [0.0]])

    for g in groups.values():
        g.ud = u_ext[g.dofel_free]
        g.floc = np.einsum("epq,eqr,er->ep", g.gamma, g.kglob, g.ud)

    return AnalysisCache(sk=sk, state=state, L=L, c=c, delta=delta,
                         groups=groups, K=K, factorization=F, u=u, p=p,
                         p_fixed=p_fixed, u_ext=u_ext)


def analyze_at(problem, x) -> tuple[object, AnalysisCache]:
    """apply_variables + run_analysis in one step."""
    from .model import apply_variables

    state = apply_variables(problem, x)
    return state, run_analysis(problem, state)
