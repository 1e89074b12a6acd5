"""Differentiable objective and constraint catalog.

Every optimization output is reduced to scalar rows.  Constraints are
normalized to the dimensionless form g <= 0:

* displacement:      |u| / limit - 1
* stress, symmetric: |sigma| / sigma_max - 1
* stress, tension:    sigma / sigma_t - 1        (anisotropic materials)
* stress, compression: -sigma / sigma_c - 1
* combined stress:   (|N|/A + |M|/S) / sigma_max - 1
* diameter ordering:  d_lesser / d_greater - 1

Each row supplies its forward value and the output-level bar seeds that start
the reverse pass: an adjoint on the displacement vector, on element forces,
and/or directly on section scalars.  Absolute values keep a sign-based
subgradient at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TRUSS_AXIAL = 1   # F[1] carries the signed axial force of a truss element
FRAME_AXIAL = 6   # end-node axial entry of the 12-component local force
FRAME_MOMENTS = (4, 5, 10, 11)  # bending entries at both ends, both axes


# -- specs (file-level) ------------------------------------------------------

@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str  # "volume" | "compliance" | "embodied_carbon"


@dataclass(frozen=True)
class DisplacementLimit:
    nodes: tuple[int, ...]
    axis: int
    limit: float  # m


@dataclass(frozen=True)
class AxialStressLimit:
    elements: tuple[int, ...]
    sigma_max: float | None = None  # kN/m^2; None -> take limits per material


@dataclass(frozen=True)
class CombinedStressLimit:
    elements: tuple[int, ...]
    sigma_max: float  # kN/m^2


@dataclass(frozen=True)
class DiameterOrdering:
    lesser: int   # element id whose tube diameter must stay smaller
    greater: int


@dataclass(frozen=True)
class ElementForce:
    """Local-frame internal force vector of one element (2 truss, 12 frame)."""

    F: np.ndarray


# -- scalar rows -------------------------------------------------------------

@dataclass(frozen=True)
class Row:
    """One scalar output of the analysis, with enough indices to seed its
    reverse pass.  element/lesser/greater are element rows, dof is a free-DOF
    index (or -1 when the selected DOF is fixed)."""

    kind: str
    label: str
    limit: float = 1.0
    element: int = -1
    dof: int = -1
    lesser: int = -1
    greater: int = -1


def objective_row(problem) -> Row:
    return Row(kind=problem.objective.kind, label=problem.objective.kind)


def constraint_rows(problem) -> list[Row]:
    """Expand constraint specs into scalar rows, in file order."""
    model = problem.model
    sk = problem.skeleton
    dpn = sk.dofmap.dofs_per_node
    rows: list[Row] = []
    for spec in problem.constraints:
        if isinstance(spec, DisplacementLimit):
            for nid in spec.nodes:
                g = model.node_row[nid] * dpn + spec.axis
                fi = int(sk.dofmap.free_map[g])
                rows.append(Row(kind="displacement", label=f"d[{nid}]",
                                limit=spec.limit,
                                dof=fi if fi < sk.dofmap.n_free else -1))
        elif isinstance(spec, AxialStressLimit):
            for eid in spec.elements:
                e = model.element_row[eid]
                if spec.sigma_max is not None:
                    rows.append(Row(kind="stress_sym", label=f"sigma[{eid}]",
                                    limit=spec.sigma_max, element=e))
                elif sk.sigma_t[e] == sk.sigma_c[e]:
                    rows.append(Row(kind="stress_sym", label=f"sigma[{eid}]",
                                    limit=sk.sigma_t[e], element=e))
                else:
                    rows.append(Row(kind="stress_tension", label=f"sigma_t[{eid}]",
                                    limit=sk.sigma_t[e], element=e))
                    rows.append(Row(kind="stress_compression", label=f"sigma_c[{eid}]",
                                    limit=sk.sigma_c[e], element=e))
        elif isinstance(spec, CombinedStressLimit):
            for eid in spec.elements:
                rows.append(Row(kind="combined_stress", label=f"sigma_cmb[{eid}]",
                                limit=spec.sigma_max, element=model.element_row[eid]))
        elif isinstance(spec, DiameterOrdering):
            rows.append(Row(kind="diameter_ordering",
                            label=f"d[{spec.lesser}]<=d[{spec.greater}]",
                            lesser=model.element_row[spec.lesser],
                            greater=model.element_row[spec.greater]))
        else:  # pragma: no cover
            raise TypeError(f"unknown constraint spec {spec!r}")
    return rows


def all_rows(problem) -> list[Row]:
    return [objective_row(problem)] + constraint_rows(problem)


# -- forward values ----------------------------------------------------------

def volume(state, cache) -> float:
    """Total structural volume sum(A_i * L_i).  Bar seeds: Abar = L, Lbar = A."""
    return float(state.A @ cache.L)


def compliance(cache) -> float:
    """External work u . p.  Bar seed: ubar = p."""
    return float(cache.u @ cache.p)


def embodied_carbon(state, cache, ecc, rho) -> float:
    """sum(ECC * rho * A * L) over elements, kgCO2e."""
    return float(np.sum(ecc * rho * state.A * cache.L))


def element_forces(cache, e: int) -> ElementForce:
    """Local internal force vector Gamma k u of element row e."""
    g = cache.group_of(e)
    pos = cache.sk.group_pos[e]
    return ElementForce(F=g.floc[pos].copy())


def axial_stress(F_axial: float, A: float) -> float:
    """Signed axial stress N/A.  Bar seeds: Fbar = sbar/A, Abar -= sbar*N/A^2."""
    if A <= 0:
        raise ValueError("non-positive area")
    return F_axial / A


def combined_stress(F_axial: float, M_major: float, A: float, S: float) -> float:
    """|N|/A + |M|/S with M the governing (largest-magnitude) end moment."""
    if S <= 0:
        raise ValueError("non-positive section modulus")
    return abs(F_axial) / A + abs(M_major) / S


def _axial(cache, e: int) -> float:
    g = cache.group_of(e)
    pos = cache.sk.group_pos[e]
    idx = TRUSS_AXIAL if g.p == 2 else FRAME_AXIAL
    return float(g.floc[pos, idx])


def _governing_moment(cache, e: int) -> tuple[float, int]:
    g = cache.group_of(e)
    pos = cache.sk.group_pos[e]
    m = g.floc[pos, list(FRAME_MOMENTS)]
    j = int(np.argmax(np.abs(m)))
    return float(m[j]), FRAME_MOMENTS[j]


def row_value(problem, state, cache, row: Row) -> float:
    if row.kind == "volume":
        return volume(state, cache)
    if row.kind == "compliance":
        return compliance(cache)
    if row.kind == "embodied_carbon":
        sk = problem.skeleton
        return embodied_carbon(state, cache, sk.ecc, sk.rho)
    if row.kind == "displacement":
        u = cache.u[row.dof] if row.dof >= 0 else 0.0
        return abs(u) / row.limit - 1.0
    if row.kind in ("stress_sym", "stress_tension", "stress_compression"):
        s = axial_stress(_axial(cache, row.element), state.A[row.element])
        if row.kind == "stress_sym":
            return abs(s) / row.limit - 1.0
        if row.kind == "stress_tension":
            return s / row.limit - 1.0
        return -s / row.limit - 1.0
    if row.kind == "combined_stress":
        n = _axial(cache, row.element)
        m, _ = _governing_moment(cache, row.element)
        s = combined_stress(n, m, state.A[row.element], state.S[row.element])
        return s / row.limit - 1.0
    if row.kind == "diameter_ordering":
        return float(state.d[row.lesser] / state.d[row.greater] - 1.0)
    raise ValueError(f"unknown row kind {row.kind!r}")


def evaluate_rows(problem, state, cache, rows) -> np.ndarray:
    return np.array([row_value(problem, state, cache, r) for r in rows])


def evaluate_constraints(problem, state, cache) -> np.ndarray:
    """All constraint rows as a vector; g <= 0 is feasible."""
    return evaluate_rows(problem, state, cache, constraint_rows(problem))


# -- reverse-pass seeds ------------------------------------------------------

@dataclass
class SeedBundle:
    """Output-level bar values for a batch of rows (leading axis = row)."""

    n_rows: int
    ubar: np.ndarray | None = None     # (B, n_free)
    Abar: np.ndarray | None = None     # (B, ne) direct area seeds
    Lbar: np.ndarray | None = None
    Sbar: np.ndarray | None = None
    dbar: np.ndarray | None = None
    Fbar: dict = field(default_factory=dict)  # group name -> (B, ng, p)

    def _get(self, name, shape):
        cur = getattr(self, name)
        if cur is None:
            cur = np.zeros(shape)
            setattr(self, name, cur)
        return cur

    def fbar(self, group, B, ng, p):
        if group not in self.Fbar:
            self.Fbar[group] = np.zeros((B, ng, p))
        return self.Fbar[group]


def row_seeds(problem, state, cache, rows) -> SeedBundle:
    """Emit the bar seeds of every row; rows are independent (one reverse
    trace each), stacked on the leading axis."""
    sk = problem.skeleton
    ne = sk.conn.shape[0]
    B = len(rows)
    nf = sk.dofmap.n_free
    seeds = SeedBundle(n_rows=B)

    for b, row in enumerate(rows):
        if row.kind == "volume":
            seeds._get("Abar", (B, ne))[b] += cache.L
            seeds._get("Lbar", (B, ne))[b] += state.A
        elif row.kind == "compliance":
            seeds._get("ubar", (B, nf))[b] += cache.p
        elif row.kind == "embodied_carbon":
            w = sk.ecc * sk.rho
            seeds._get("Abar", (B, ne))[b] += w * cache.L
            seeds._get("Lbar", (B, ne))[b] += w * state.A
        elif row.kind == "displacement":
            if row.dof >= 0:
                seeds._get("ubar", (B, nf))[b, row.dof] = (
                    np.sign(cache.u[row.dof]) / row.limit)
        elif row.kind in ("stress_sym", "stress_tension", "stress_compression"):
            e = row.element
            g = cache.group_of(e)
            pos = sk.group_pos[e]
            A = state.A[e]
            N = _axial(cache, e)
            if row.kind == "stress_sym":
                sbar = np.sign(N / A) / row.limit
            elif row.kind == "stress_tension":
                sbar = 1.0 / row.limit
            else:
                sbar = -1.0 / row.limit
            idx = TRUSS_AXIAL if g.p == 2 else FRAME_AXIAL
            seeds.fbar(g.name, B, g.ng, g.p)[b, pos, idx] += sbar / A
            seeds._get("Abar", (B, ne))[b, e] += -sbar * N / A**2
        elif row.kind == "combined_stress":
            e = row.element
            g = cache.group_of(e)
            pos = sk.group_pos[e]
            A = state.A[e]
            S = state.S[e]
            lim = row.limit
            N = _axial(cache, e)
            M, midx = _governing_moment(cache, e)
            fb = seeds.fbar(g.name, B, g.ng, g.p)
            fb[b, pos, FRAME_AXIAL] += np.sign(N) / (lim * A)
            fb[b, pos, midx] += np.sign(M) / (lim * S)
            seeds._get("Abar", (B, ne))[b, e] += -abs(N) / (lim * A**2)
            seeds._get("Sbar", (B, ne))[b, e] += -abs(M) / (lim * S**2)
        elif row.kind == "diameter_ordering":
            dl = state.d[row.lesser]
            dg = state.d[row.greater]
            db = seeds._get("dbar", (B, ne))
            db[b, row.lesser] += 1.0 / dg
            db[b, row.greater] += -dl / dg**2
        else:  # pragma: no cover
            raise ValueError(f"unknown row kind {row.kind!r}")
    return seeds
