"""Domain model: problem-file ingestion, DOF numbering, design variables.

Units are fixed to m / kN / kg throughout the package.  Problem files follow
engineering practice for stress values: material strengths and stress limits
are given in MPa and converted to kN/m^2 (x 1e3) at load time.  Young's and
shear moduli are given directly in kN/m^2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import elements as el
from .functions import (
    AxialStressLimit,
    CombinedStressLimit,
    DiameterOrdering,
    DisplacementLimit,
    ObjectiveSpec,
)

AXES = {"x": 0, "y": 1, "z": 2}
MPA_TO_KN_M2 = 1.0e3


class ProblemError(Exception):
    """Base class for problem-file errors."""


class ParseError(ProblemError):
    """Malformed JSON."""


class ValidationError(ProblemError):
    """Structurally invalid problem (dangling ids, bad bounds, ...)."""


class UnitError(ValidationError):
    """Non-finite or otherwise unusable numeric value."""


# -- domain types ------------------------------------------------------------

@dataclass(frozen=True)
class Node:
    id: int
    position: np.ndarray        # (3,) m
    support: tuple[bool, ...]   # fixed (ux, uy, uz, rx, ry, rz)


@dataclass(frozen=True)
class Material:
    name: str
    E: float        # kN/m^2
    G: float        # kN/m^2
    rho: float      # kg/m^3
    ecc: float      # kgCO2e/kg
    sigma_t: float  # kN/m^2, tensile strength
    sigma_c: float  # kN/m^2, compressive strength (positive magnitude)


@dataclass(frozen=True)
class ExplicitSection:
    name: str
    A: float
    Iy: float
    Iz: float
    J: float
    S: float


@dataclass(frozen=True)
class TubeSection:
    name: str
    d: float
    alpha: float

    def properties(self):
        return el.tube_section_properties(self.d, self.alpha)


@dataclass(frozen=True)
class Element:
    id: int
    nodes: tuple[int, int]
    material: str
    section: str
    kind: str          # "truss" | "frame"
    roll: float = 0.0


@dataclass(frozen=True)
class Load:
    node: int
    force: np.ndarray   # (3,) kN
    moment: np.ndarray  # (3,) kN*m


@dataclass(frozen=True)
class Model:
    nodes: tuple[Node, ...]
    materials: dict[str, Material]
    sections: dict[str, ExplicitSection | TubeSection]
    elements: tuple[Element, ...]
    loads: tuple[Load, ...]
    node_row: dict[int, int] = field(default_factory=dict)     # id -> array row
    element_row: dict[int, int] = field(default_factory=dict)

    @property
    def is_frame_model(self) -> bool:
        return any(e.kind == "frame" for e in self.elements)


@dataclass(frozen=True)
class DesignVariable:
    """One optimization unknown and what it writes to.

    kind:
      node_offset      targets = ((node id, axis index, coefficient), ...)
      projected_offset node + unit direction; offset = x * direction
      area             elements = element ids sharing this area
      tube_diameter    elements = tube elements sharing this outer diameter
      tube_ratio       elements = tube elements sharing this diameter ratio
    """

    kind: str
    lower: float
    upper: float
    initial: float
    name: str = ""
    targets: tuple[tuple[int, int, float], ...] = ()
    node: int | None = None
    direction: np.ndarray | None = None
    elements: tuple[int, ...] = ()


@dataclass(frozen=True)
class DofMap:
    """Node-to-global-DOF numbering with the free/fixed partition.

    Global DOF of (node row, local dof) is ``row * dofs_per_node + local``;
    ``free_map`` sends a global DOF to its index in the reduced system, or to
    ``n_free`` for fixed DOFs (so gathers from a zero-padded vector work).
    """

    dofs_per_node: int
    n_nodes: int
    free: np.ndarray      # (n_free,) global dof ids
    fixed: np.ndarray
    free_map: np.ndarray  # (n_nodes * dofs_per_node,)
    n_free: int

    def global_dof(self, node_row: int, local: int) -> int:
        return node_row * self.dofs_per_node + local


@dataclass(frozen=True)
class ModelState:
    """Concrete geometry and section values produced by apply_variables.

    Arrays are read-only; per-element entries are aligned with the element
    order of the model.  For non-tube elements d/alpha hold NaN.
    """

    positions: np.ndarray  # (nn, 3)
    A: np.ndarray
    Iy: np.ndarray
    Iz: np.ndarray
    J: np.ndarray
    S: np.ndarray
    d: np.ndarray
    alpha: np.ndarray
    is_tube: np.ndarray


def _freeze(*arrays):
    for a in arrays:
        a.flags.writeable = False
    return arrays


@dataclass(frozen=True)
class Problem:
    model: Model
    variables: tuple[DesignVariable, ...]
    objective: ObjectiveSpec
    constraints: tuple
    optimizer: "object"              # optimize.OptimizerSettings
    groups: dict[str, tuple[int, ...]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    skeleton: "Skeleton" = None

    @property
    def x0(self) -> np.ndarray:
        return np.array([v.initial for v in self.variables])

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables])

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.upper for v in self.variables])


@dataclass
class Skeleton:
    """Static (x-independent) arrays shared by every analysis of a problem."""

    conn: np.ndarray        # (ne, 2) node rows
    is_frame: np.ndarray    # (ne,) bool
    E: np.ndarray
    G: np.ndarray
    rho: np.ndarray
    ecc: np.ndarray
    sigma_t: np.ndarray
    sigma_c: np.ndarray
    roll: np.ndarray
    base_state: ModelState
    dofmap: DofMap
    dofel_global: list      # per element, (2*p,) global dof ids
    dofel_free: list        # per element, free-mapped (n_free == padding slot)
    tr: np.ndarray          # element indices of truss elements
    fr: np.ndarray          # element indices of frame elements
    group_pos: np.ndarray   # (ne,) position of each element within its group
    # design-variable scatter maps
    n_vars: int
    area_var: np.ndarray    # (ne,) var index or -1
    dia_var: np.ndarray
    ratio_var: np.ndarray
    pos_var: np.ndarray     # (n_targets,) var index
    pos_node: np.ndarray    # (n_targets,) node row
    pos_axis: np.ndarray
    pos_coef: np.ndarray
    # runtime caches, filled on first analysis (topology-static)
    plan: object = None
    symbolic: object = None


# -- operations --------------------------------------------------------------

def build_dof_map(model: Model) -> DofMap:
    dpn = 6 if model.is_frame_model else 3
    nn = len(model.nodes)
    fixed_mask = np.zeros(nn * dpn, dtype=bool)
    for row, node in enumerate(model.nodes):
        for local in range(dpn):
            if node.support[local]:
                fixed_mask[row * dpn + local] = True
    free = np.flatnonzero(~fixed_mask)
    fixed = np.flatnonzero(fixed_mask)
    if free.size == 0:
        raise ValidationError("model has zero free degrees of freedom")
    free_map = np.full(nn * dpn, free.size, dtype=int)
    free_map[free] = np.arange(free.size)
    return DofMap(dofs_per_node=dpn, n_nodes=nn, free=free, fixed=fixed,
                  free_map=free_map, n_free=int(free.size))


def _element_dofs(model: Model, dofmap: DofMap, e: Element) -> np.ndarray:
    a = model.node_row[e.nodes[0]]
    b = model.node_row[e.nodes[1]]
    dpn = dofmap.dofs_per_node
    if e.kind == "frame":
        return np.concatenate([np.arange(a * dpn, a * dpn + 6),
                               np.arange(b * dpn, b * dpn + 6)])
    return np.concatenate([np.arange(a * dpn, a * dpn + 3),
                           np.arange(b * dpn, b * dpn + 3)])


def _base_state(model: Model) -> ModelState:
    ne = len(model.elements)
    positions = np.array([n.position for n in model.nodes], dtype=float)
    A = np.zeros(ne)
    Iy = np.zeros(ne)
    Iz = np.zeros(ne)
    J = np.zeros(ne)
    S = np.zeros(ne)
    d = np.full(ne, np.nan)
    alpha = np.full(ne, np.nan)
    is_tube = np.zeros(ne, dtype=bool)
    for i, e in enumerate(model.elements):
        sec = model.sections[e.section]
        if isinstance(sec, TubeSection):
            is_tube[i] = True
            d[i], alpha[i] = sec.d, sec.alpha
            A[i], Ii, J[i], S[i] = sec.properties()
            Iy[i] = Iz[i] = Ii
        else:
            A[i], Iy[i], Iz[i], J[i], S[i] = sec.A, sec.Iy, sec.Iz, sec.J, sec.S
    _freeze(positions, A, Iy, Iz, J, S, d, alpha, is_tube)
    return ModelState(positions, A, Iy, Iz, J, S, d, alpha, is_tube)


def build_skeleton(model: Model, variables: tuple[DesignVariable, ...]) -> Skeleton:
    dofmap = build_dof_map(model)
    ne = len(model.elements)
    conn = np.array([[model.node_row[e.nodes[0]], model.node_row[e.nodes[1]]]
                     for e in model.elements], dtype=int)
    is_frame = np.array([e.kind == "frame" for e in model.elements])
    mats = [model.materials[e.material] for e in model.elements]
    E = np.array([m.E for m in mats])
    G = np.array([m.G for m in mats])
    rho = np.array([m.rho for m in mats])
    ecc = np.array([m.ecc for m in mats])
    sigma_t = np.array([m.sigma_t for m in mats])
    sigma_c = np.array([m.sigma_c for m in mats])
    roll = np.array([e.roll for e in model.elements])

    dofel_global = [_element_dofs(model, dofmap, e) for e in model.elements]
    dofel_free = [dofmap.free_map[dg] for dg in dofel_global]

    area_var = np.full(ne, -1, dtype=int)
    dia_var = np.full(ne, -1, dtype=int)
    ratio_var = np.full(ne, -1, dtype=int)
    pos_var, pos_node, pos_axis, pos_coef = [], [], [], []
    for vi, var in enumerate(variables):
        if var.kind == "area":
            for eid in var.elements:
                area_var[model.element_row[eid]] = vi
        elif var.kind == "tube_diameter":
            for eid in var.elements:
                dia_var[model.element_row[eid]] = vi
        elif var.kind == "tube_ratio":
            for eid in var.elements:
                ratio_var[model.element_row[eid]] = vi
        elif var.kind == "node_offset":
            for nid, axis, coef in var.targets:
                pos_var.append(vi)
                pos_node.append(model.node_row[nid])
                pos_axis.append(axis)
                pos_coef.append(coef)
        elif var.kind == "projected_offset":
            row = model.node_row[var.node]
            for axis in range(3):
                pos_var.append(vi)
                pos_node.append(row)
                pos_axis.append(axis)
                pos_coef.append(float(var.direction[axis]))
        else:  # pragma: no cover - guarded at parse time
            raise ValidationError(f"unknown variable kind {var.kind!r}")

    tr = np.flatnonzero(~is_frame)
    fr = np.flatnonzero(is_frame)
    group_pos = np.zeros(ne, dtype=int)
    group_pos[tr] = np.arange(tr.size)
    group_pos[fr] = np.arange(fr.size)

    return Skeleton(
        conn=conn, is_frame=is_frame, E=E, G=G, rho=rho, ecc=ecc,
        sigma_t=sigma_t, sigma_c=sigma_c, roll=roll,
        base_state=_base_state(model), dofmap=dofmap,
        dofel_global=dofel_global, dofel_free=dofel_free,
        tr=tr, fr=fr, group_pos=group_pos,
        n_vars=len(variables),
        area_var=area_var, dia_var=dia_var, ratio_var=ratio_var,
        pos_var=np.array(pos_var, dtype=int),
        pos_node=np.array(pos_node, dtype=int),
        pos_axis=np.array(pos_axis, dtype=int),
        pos_coef=np.array(pos_coef, dtype=float),
    )


def apply_variables(problem: Problem, x: np.ndarray) -> ModelState:
    """Map a design vector onto concrete node positions and section values.

    Pure: the stored problem is never modified and equal x yields
    bit-identical states.  Bounds are not enforced here.
    """
    sk = problem.skeleton
    x = np.asarray(x, dtype=float)
    if x.shape != (sk.n_vars,):
        raise ValidationError(f"design vector has length {x.size}, expected {sk.n_vars}")
    base = sk.base_state

    positions = base.positions.copy()
    if sk.pos_var.size:
        np.add.at(positions, (sk.pos_node, sk.pos_axis), sk.pos_coef * x[sk.pos_var])

    A = base.A.copy()
    Iy = base.Iy.copy()
    Iz = base.Iz.copy()
    J = base.J.copy()
    S = base.S.copy()
    d = base.d.copy()
    alpha = base.alpha.copy()

    m = sk.area_var >= 0
    A[m] = x[sk.area_var[m]]
    m = sk.dia_var >= 0
    d[m] = x[sk.dia_var[m]]
    m = sk.ratio_var >= 0
    alpha[m] = x[sk.ratio_var[m]]

    tube = base.is_tube
    if tube.any():
        At, It, Jt, St = el.tube_section_properties(d[tube], alpha[tube])
        A[tube] = At
        Iy[tube] = It
        Iz[tube] = It
        J[tube] = Jt
        S[tube] = St

    is_tube = base.is_tube.copy()
    _freeze(positions, A, Iy, Iz, J, S, d, alpha, is_tube)
    return ModelState(positions, A, Iy, Iz, J, S, d, alpha, is_tube)


# -- problem-file ingestion --------------------------------------------------

def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ValidationError(f"missing key {key!r} in {where}")
    return doc[key]


def _finite(value, where: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise UnitError(f"non-numeric value {value!r} in {where}") from None
    if not np.isfinite(value):
        raise UnitError(f"non-finite value {value!r} in {where}")
    return value


def _finite_vec(values, n: int, where: str) -> np.ndarray:
    arr = np.array([_finite(v, where) for v in values], dtype=float)
    if arr.shape != (n,):
        raise ValidationError(f"{where} must have {n} entries")
    arr.flags.writeable = False
    return arr


def _parse_nodes(doc) -> tuple[Node, ...]:
    nodes = []
    seen = set()
    for nd in _require(doc, "nodes", "problem"):
        nid = int(_require(nd, "id", "node"))
        if nid in seen:
            raise ValidationError(f"duplicate node id {nid}")
        seen.add(nid)
        xyz = _finite_vec(_require(nd, "xyz", f"node {nid}"), 3, f"node {nid} xyz")
        fixed = nd.get("fixed", [False] * 6)
        if len(fixed) != 6:
            raise ValidationError(f"node {nid}: 'fixed' must list 6 booleans")
        nodes.append(Node(id=nid, position=xyz, support=tuple(bool(b) for b in fixed)))
    if not nodes:
        raise ValidationError("problem has no nodes")
    return tuple(nodes)


def _parse_materials(doc) -> dict[str, Material]:
    materials = {}
    for md in _require(doc, "materials", "problem"):
        name = str(_require(md, "name", "material"))
        if name in materials:
            raise ValidationError(f"duplicate material {name!r}")
        m = Material(
            name=name,
            E=_finite(_require(md, "E", name), f"material {name} E"),
            G=_finite(_require(md, "G", name), f"material {name} G"),
            rho=_finite(md.get("rho", 0.0), f"material {name} rho"),
            ecc=_finite(md.get("ecc", 0.0), f"material {name} ecc"),
            sigma_t=_finite(_require(md, "sigma_t", name), name) * MPA_TO_KN_M2,
            sigma_c=_finite(_require(md, "sigma_c", name), name) * MPA_TO_KN_M2,
        )
        if m.E <= 0 or m.G <= 0:
            raise ValidationError(f"material {name}: E and G must be positive")
        if m.rho < 0 or m.ecc < 0:
            raise ValidationError(f"material {name}: rho and ecc must be >= 0")
        if m.sigma_t <= 0 or m.sigma_c <= 0:
            raise ValidationError(f"material {name}: strengths must be positive")
        materials[name] = m
    if not materials:
        raise ValidationError("problem has no materials")
    return materials


def _parse_sections(doc) -> dict:
    sections = {}
    for sd in _require(doc, "sections", "problem"):
        name = str(_require(sd, "name", "section"))
        if name in sections:
            raise ValidationError(f"duplicate section {name!r}")
        stype = sd.get("type", "explicit")
        if stype == "tube":
            dval = _finite(_require(sd, "d", name), f"section {name} d")
            aval = _finite(_require(sd, "alpha", name), f"section {name} alpha")
            if dval <= 0 or not 0.0 <= aval < 1.0:
                raise ValidationError(f"section {name}: need d > 0 and 0 <= alpha < 1")
            sections[name] = TubeSection(name=name, d=dval, alpha=aval)
        elif stype == "explicit":
            vals = {k: _finite(_require(sd, k, name), f"section {name} {k}")
                    for k in ("A", "Iy", "Iz", "J", "S")}
            if min(vals.values()) <= 0:
                raise ValidationError(f"section {name}: all properties must be positive")
            sections[name] = ExplicitSection(name=name, **vals)
        else:
            raise ValidationError(f"section {name}: unknown type {stype!r}")
    if not sections:
        raise ValidationError("problem has no sections")
    return sections


def _parse_elements(doc, nodes, materials, sections) -> tuple[Element, ...]:
    node_ids = {n.id for n in nodes}
    out = []
    seen = set()
    for ed in _require(doc, "elements", "problem"):
        eid = int(_require(ed, "id", "element"))
        if eid in seen:
            raise ValidationError(f"duplicate element id {eid}")
        seen.add(eid)
        a, b = _require(ed, "nodes", f"element {eid}")
        a, b = int(a), int(b)
        if a == b:
            raise ValidationError(f"element {eid}: start and end node coincide")
        for nid in (a, b):
            if nid not in node_ids:
                raise ValidationError(f"element {eid}: unknown node {nid}")
        mat = str(_require(ed, "material", f"element {eid}"))
        if mat not in materials:
            raise ValidationError(f"element {eid}: unknown material {mat!r}")
        sec = str(_require(ed, "section", f"element {eid}"))
        if sec not in sections:
            raise ValidationError(f"element {eid}: unknown section {sec!r}")
        kind = ed.get("kind", "truss")
        if kind not in ("truss", "frame"):
            raise ValidationError(f"element {eid}: unknown kind {kind!r}")
        roll = _finite(ed.get("roll", 0.0), f"element {eid} roll")
        if kind == "truss" and roll != 0.0:
            raise ValidationError(f"element {eid}: roll applies to frame elements only")
        out.append(Element(id=eid, nodes=(a, b), material=mat, section=sec,
                           kind=kind, roll=roll))
    if not out:
        raise ValidationError("problem has no elements")
    return tuple(out)


def _parse_loads(doc, nodes, frame_model: bool) -> tuple[Load, ...]:
    node_ids = {n.id for n in nodes}
    loads = []
    for ld in doc.get("loads", []):
        nid = int(_require(ld, "node", "load"))
        if nid not in node_ids:
            raise ValidationError(f"load on unknown node {nid}")
        force = _finite_vec(ld.get("force", [0, 0, 0]), 3, f"load on node {nid}")
        moment = _finite_vec(ld.get("moment", [0, 0, 0]), 3, f"moment on node {nid}")
        if not frame_model and np.any(moment != 0.0):
            raise ValidationError(f"load on node {nid}: moments require a frame model")
        loads.append(Load(node=nid, force=force, moment=moment))
    return tuple(loads)


def _parse_variables(doc, model: Model) -> tuple[DesignVariable, ...]:
    out = []
    claimed: dict[tuple[int, str], int] = {}
    for i, vd in enumerate(doc.get("variables", [])):
        kind = _require(vd, "kind", f"variable {i}")
        lower = _finite(_require(vd, "lower", f"variable {i}"), f"variable {i} lower")
        upper = _finite(_require(vd, "upper", f"variable {i}"), f"variable {i} upper")
        initial = _finite(_require(vd, "initial", f"variable {i}"), f"variable {i} initial")
        if not lower <= initial <= upper:
            raise ValidationError(f"variable {i}: need lower <= initial <= upper")
        name = str(vd.get("name", f"x{i}"))
        common = dict(lower=lower, upper=upper, initial=initial, name=name)

        if kind == "node_offset":
            targets = []
            for t in _require(vd, "targets", f"variable {i}"):
                nid, axis, coef = t
                nid = int(nid)
                if nid not in model.node_row:
                    raise ValidationError(f"variable {i}: unknown node {nid}")
                axis = AXES[axis] if isinstance(axis, str) else int(axis)
                if axis not in (0, 1, 2):
                    raise ValidationError(f"variable {i}: bad axis {axis}")
                targets.append((nid, axis, _finite(coef, f"variable {i} coefficient")))
            if not targets:
                raise ValidationError(f"variable {i}: node_offset needs targets")
            out.append(DesignVariable(kind=kind, targets=tuple(targets), **common))
        elif kind == "projected_offset":
            nid = int(_require(vd, "node", f"variable {i}"))
            if nid not in model.node_row:
                raise ValidationError(f"variable {i}: unknown node {nid}")
            direction = _finite_vec(_require(vd, "direction", f"variable {i}"), 3,
                                    f"variable {i} direction")
            if abs(np.linalg.norm(direction) - 1.0) > 1e-6:
                raise ValidationError(f"variable {i}: direction must be a unit vector")
            out.append(DesignVariable(kind=kind, node=nid, direction=direction, **common))
        elif kind in ("area", "tube_diameter", "tube_ratio"):
            eids = [int(e) for e in _require(vd, "elements", f"variable {i}")]
            if not eids:
                raise ValidationError(f"variable {i}: {kind} needs elements")
            prop = "A" if kind == "area" else ("d" if kind == "tube_diameter" else "alpha")
            for eid in eids:
                if eid not in model.element_row:
                    raise ValidationError(f"variable {i}: unknown element {eid}")
                elem = model.elements[model.element_row[eid]]
                tube = isinstance(model.sections[elem.section], TubeSection)
                if kind == "area" and tube:
                    raise ValidationError(
                        f"variable {i}: area variable on tube-section element {eid}")
                if kind != "area" and not tube:
                    raise ValidationError(
                        f"variable {i}: {kind} variable on non-tube element {eid}")
                key = (eid, prop)
                if key in claimed:
                    raise ValidationError(
                        f"element {eid} property {prop!r} written by variables "
                        f"{claimed[key]} and {i}")
                claimed[key] = i
            out.append(DesignVariable(kind=kind, elements=tuple(eids), **common))
        else:
            raise ValidationError(f"variable {i}: unknown kind {kind!r}")
    if not out:
        raise ValidationError("problem defines no design variables")
    return tuple(out)


def _parse_objective(doc) -> ObjectiveSpec:
    od = _require(doc, "objective", "problem")
    kind = _require(od, "kind", "objective")
    if kind not in ("volume", "compliance", "embodied_carbon"):
        raise ValidationError(f"unknown objective kind {kind!r}")
    return ObjectiveSpec(kind=kind)


def _parse_constraints(doc, model: Model):
    out = []
    elem_ids = [e.id for e in model.elements]
    node_ids = [n.id for n in model.nodes]
    for i, cd in enumerate(doc.get("constraints", [])):
        kind = _require(cd, "kind", f"constraint {i}")
        if kind == "displacement":
            sel = cd.get("nodes", "all")
            nodes = tuple(node_ids) if sel == "all" else tuple(int(n) for n in sel)
            if not nodes:
                raise ValidationError(f"constraint {i}: empty node selector")
            for nid in nodes:
                if nid not in model.node_row:
                    raise ValidationError(f"constraint {i}: unknown node {nid}")
            axis = cd.get("axis", "z")
            axis = AXES[axis] if isinstance(axis, str) else int(axis)
            limit = _finite(_require(cd, "limit", f"constraint {i}"), f"constraint {i}")
            if limit <= 0:
                raise ValidationError(f"constraint {i}: limit must be positive")
            out.append(DisplacementLimit(nodes=nodes, axis=axis, limit=limit))
        elif kind in ("axial_stress", "combined_stress"):
            sel = cd.get("elements", "all")
            eids = tuple(elem_ids) if sel == "all" else tuple(int(e) for e in sel)
            if not eids:
                raise ValidationError(f"constraint {i}: empty element selector")
            for eid in eids:
                if eid not in model.element_row:
                    raise ValidationError(f"constraint {i}: unknown element {eid}")
            smax = cd.get("sigma_max")
            if smax is not None:
                smax = _finite(smax, f"constraint {i} sigma_max") * MPA_TO_KN_M2
                if smax <= 0:
                    raise ValidationError(f"constraint {i}: sigma_max must be positive")
            if kind == "axial_stress":
                out.append(AxialStressLimit(elements=eids, sigma_max=smax))
            else:
                if smax is None:
                    raise ValidationError(f"constraint {i}: combined_stress needs sigma_max")
                for eid in eids:
                    if model.elements[model.element_row[eid]].kind != "frame":
                        raise ValidationError(
                            f"constraint {i}: combined stress on truss element {eid}")
                out.append(CombinedStressLimit(elements=eids, sigma_max=smax))
        elif kind == "diameter_ordering":
            lesser = int(_require(cd, "lesser", f"constraint {i}"))
            greater = int(_require(cd, "greater", f"constraint {i}"))
            for eid in (lesser, greater):
                if eid not in model.element_row:
                    raise ValidationError(f"constraint {i}: unknown element {eid}")
                elem = model.elements[model.element_row[eid]]
                if not isinstance(model.sections[elem.section], TubeSection):
                    raise ValidationError(
                        f"constraint {i}: diameter ordering on non-tube element {eid}")
            out.append(DiameterOrdering(lesser=lesser, greater=greater))
        else:
            raise ValidationError(f"constraint {i}: unknown kind {kind!r}")
    return tuple(out)


def problem_from_dict(doc: dict) -> Problem:
    """Validate a problem document and build the fully cross-referenced Problem."""
    from .optimize import OptimizerSettings

    nodes = _parse_nodes(doc)
    materials = _parse_materials(doc)
    sections = _parse_sections(doc)
    elements = _parse_elements(doc, nodes, materials, sections)
    model = Model(
        nodes=nodes, materials=materials, sections=sections, elements=elements,
        loads=(),
        node_row={n.id: i for i, n in enumerate(nodes)},
        element_row={e.id: i for i, e in enumerate(elements)},
    )
    loads = _parse_loads(doc, nodes, model.is_frame_model)
    model = replace(model, loads=loads)

    variables = _parse_variables(doc, model)
    objective = _parse_objective(doc)
    constraints = _parse_constraints(doc, model)
    optimizer = OptimizerSettings.from_dict(doc.get("optimizer", {}))

    groups = {}
    for name, eids in doc.get("groups", {}).items():
        eids = tuple(int(e) for e in eids)
        for eid in eids:
            if eid not in model.element_row:
                raise ValidationError(f"group {name!r}: unknown element {eid}")
        groups[name] = eids

    skeleton = build_skeleton(model, variables)
    return Problem(model=model, variables=variables, objective=objective,
                   constraints=constraints, optimizer=optimizer, groups=groups,
                   meta=doc.get("meta", {}), skeleton=skeleton)


def load_problem(path) -> Problem:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    return problem_from_dict(doc)
