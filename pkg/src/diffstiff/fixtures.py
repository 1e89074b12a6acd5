"""Canonical problem generators for the four benchmark studies.

Every quantity that the source studies state explicitly (counts, bounds,
limits, material data) is reproduced exactly; everything else (exact load
magnitudes for the planar and spatial trusses, glulam moduli, curve shapes of
the irregular frames, the node set carrying displacement limits on the
full-scale roof) is a documented reconstruction recorded in each fixture's
``meta.provenance`` notes.

2D problems are modeled as 3D with out-of-plane DOFs fixed.
"""

from __future__ import annotations

import json

import numpy as np

STEEL = {"name": "steel", "E": 2.0e8, "G": 7.9e7, "rho": 7800.0, "ecc": 1.55,
         "sigma_t": 350.0, "sigma_c": 350.0}
# E/G assumed (typical glulam), strengths/density/ECC from the study's table
GLULAM = {"name": "glulam", "E": 1.15e7, "G": 7.2e5, "rho": 560.0, "ecc": 0.512,
          "sigma_t": 33.0, "sigma_c": 20.4}


def write_fixture(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def unit_bar() -> dict:
    """Single truss bar with one free axial DOF; EA/L = 1, unit load."""
    return {
        "nodes": [
            {"id": 0, "xyz": [0, 0, 0], "fixed": [True] * 6},
            {"id": 1, "xyz": [1, 0, 0],
             "fixed": [False, True, True, True, True, True]},
        ],
        "materials": [{"name": "unit", "E": 1.0, "G": 1.0, "rho": 1.0,
                       "ecc": 1.0, "sigma_t": 2e-3, "sigma_c": 2e-3}],
        "sections": [{"name": "sq", "type": "explicit", "A": 1.0, "Iy": 1.0,
                      "Iz": 1.0, "J": 1.0, "S": 1.0}],
        "elements": [{"id": 0, "nodes": [0, 1], "material": "unit",
                      "section": "sq", "kind": "truss"}],
        "loads": [{"node": 1, "force": [1, 0, 0]}],
        "variables": [{"kind": "area", "elements": [0], "lower": 0.1,
                       "upper": 2.0, "initial": 1.0}],
        "objective": {"kind": "volume"},
        "constraints": [{"kind": "displacement", "nodes": [1], "axis": "x",
                         "limit": 2.0}],
        "optimizer": {"algorithm": "mma"},
        "meta": {"provenance": "unit test fixture"},
    }


# -- study 1: planar Warren truss ---------------------------------------------

def fixture_warren() -> dict:
    """Simply supported Warren truss: 10 m span, 12 bays, 1 m deep.

    25 nodes, 47 elements; 36 variables (12 mirrored spatial + 24 mirrored
    areas), 72 constraints (25 vertical displacement + 47 axial stress).
    Deck load of 20 kN per interior bottom node is an assumption (the study
    does not state magnitudes).
    """
    n_bay = 12
    span = 10.0
    dx = span / n_bay
    nodes = []
    for i in range(n_bay + 1):  # bottom chord, ids 0..12
        fixed = [False, False, True, True, True, True]
        if i == 0:
            fixed[0] = fixed[1] = True          # pin
        if i == n_bay:
            fixed[1] = True                     # roller
        nodes.append({"id": i, "xyz": [i * dx, 0.0, 0.0], "fixed": fixed})
    top = lambda i: n_bay + 1 + i
    for i in range(n_bay):      # top chord, ids 13..24
        nodes.append({"id": top(i), "xyz": [(i + 0.5) * dx, 1.0, 0.0],
                      "fixed": [False, False, True, True, True, True]})

    elements = []
    eid = 0
    bottom_e, top_e, diag1, diag2 = [], [], {}, {}
    for i in range(n_bay):                      # bottom chord
        elements.append({"id": eid, "nodes": [i, i + 1], "material": "steel",
                         "section": "a0", "kind": "truss"})
        bottom_e.append(eid)
        eid += 1
    for i in range(n_bay - 1):                  # top chord
        elements.append({"id": eid, "nodes": [top(i), top(i + 1)],
                         "material": "steel", "section": "a0", "kind": "truss"})
        top_e.append(eid)
        eid += 1
    for i in range(n_bay):                      # diagonals, per bay
        elements.append({"id": eid, "nodes": [i, top(i)], "material": "steel",
                         "section": "a0", "kind": "truss"})
        diag1[i] = eid
        eid += 1
        elements.append({"id": eid, "nodes": [top(i), i + 1],
                         "material": "steel", "section": "a0", "kind": "truss"})
        diag2[i] = eid
        eid += 1

    loads = [{"node": i, "force": [0.0, -20.0, 0.0]}
             for i in range(1, n_bay)]

    variables = []
    for i in range(6):          # mirrored top-node pairs (i, 11 - i)
        j = n_bay - 1 - i
        variables.append({"kind": "node_offset", "name": f"dx{i}",
                          "targets": [[top(i), "x", 1.0], [top(j), "x", -1.0]],
                          "lower": -0.83, "upper": 0.83, "initial": 0.0})
        # the study's -1 < dy is strict (zero depth is singular); realize it
        # with a slightly interior lower bound
        variables.append({"kind": "node_offset", "name": f"dy{i}",
                          "targets": [[top(i), "y", 1.0], [top(j), "y", 1.0]],
                          "lower": -0.99, "upper": 1.0, "initial": 0.0})
    area_groups = []
    for i in range(6):                               # bottom chord pairs
        area_groups.append([bottom_e[i], bottom_e[n_bay - 1 - i]])
    for i in range(5):                               # top chord pairs
        area_groups.append([top_e[i], top_e[n_bay - 2 - i]])
    area_groups.append([top_e[5]])                   # mid top chord, uncoupled
    for i in range(n_bay):                           # diagonal pairs
        area_groups.append([diag1[i], diag2[n_bay - 1 - i]])
    for k, grp in enumerate(area_groups):
        variables.append({"kind": "area", "name": f"A{k}", "elements": grp,
                          "lower": 1e-4, "upper": 0.2, "initial": 0.15})

    return {
        "nodes": nodes,
        "materials": [STEEL],
        "sections": [{"name": "a0", "type": "explicit", "A": 0.15, "Iy": 1e-4,
                      "Iz": 1e-4, "J": 2e-4, "S": 1e-3}],
        "elements": elements,
        "loads": loads,
        "variables": variables,
        "constraints": [
            {"kind": "displacement", "nodes": "all", "axis": "y",
             "limit": 0.0278},
            {"kind": "axial_stress", "elements": "all", "sigma_max": 350.0},
        ],
        "objective": {"kind": "volume"},
        "optimizer": {"algorithm": "mma", "gradient_mode": "adjoint",
                      "rel_tolerance": 1e-6, "time_limit": 120.0,
                      "max_iterations": 600, "move_limit": 0.1},
        "meta": {"provenance": "span/bays/depth/bounds/limits from the study; "
                               "20 kN interior deck loads assumed"},
    }


# -- study 2: spatial roof truss ----------------------------------------------

def _roof_ids(n):
    nb = (n + 1) ** 2
    bot = lambda i, j: i * (n + 1) + j
    topn = lambda i, j: nb + i * n + j
    return bot, topn


def fixture_roof(bays: int = 4, grouped: bool = False) -> dict:
    """Square-on-square offset spatial truss on two adjacent edge walls.

    bays=8 reproduces the full-scale study: 145 nodes, 512 elements,
    28 coupled vertical spatial variables, 596 constraints.  Smaller values
    give desk-scale variants with the same construction (displacement rows
    then cover all free nodes).  grouped=True replaces per-element areas by
    three chord/web groups.
    """
    n = bays
    if n < 2:
        raise ValueError("roof needs at least 2 bays")
    cell = 3.0
    depth = 2.25
    bot, topn = _roof_ids(n)

    nodes = []
    for i in range(n + 1):
        for j in range(n + 1):
            supported = i == 0 or j == 0
            nodes.append({"id": bot(i, j), "xyz": [i * cell, j * cell, 0.0],
                          "fixed": [supported] * 3 + [True] * 3})
    for i in range(n):
        for j in range(n):
            supported = i == 0 or j == 0
            nodes.append({"id": topn(i, j),
                          "xyz": [(i + 0.5) * cell, (j + 0.5) * cell, depth],
                          "fixed": [supported] * 3 + [True] * 3})

    elements = []
    groups = {"bottom_chord": [], "top_chord": [], "web": []}

    def add(a, b, group):
        eid = len(elements)
        elements.append({"id": eid, "nodes": [a, b], "material": "steel",
                         "section": "a0", "kind": "truss"})
        groups[group].append(eid)
        return eid

    edge = {}
    for i in range(n):          # bottom grid, x then y direction
        for j in range(n + 1):
            edge["bx", i, j] = add(bot(i, j), bot(i + 1, j), "bottom_chord")
    for i in range(n + 1):
        for j in range(n):
            edge["by", i, j] = add(bot(i, j), bot(i, j + 1), "bottom_chord")
    for i in range(n - 1):      # top grid
        for j in range(n):
            edge["tx", i, j] = add(topn(i, j), topn(i + 1, j), "top_chord")
    for i in range(n):
        for j in range(n - 1):
            edge["ty", i, j] = add(topn(i, j), topn(i, j + 1), "top_chord")
    for i in range(n):          # webs: each top node to its four cell corners
        for j in range(n):
            for a, b in ((0, 0), (1, 0), (0, 1), (1, 1)):
                edge["w", i, j, a, b] = add(topn(i, j), bot(i + a, j + b), "web")

    # elements mirrored across the i=j diagonal (for symmetry diagnostics)
    mirror = {("bx", i, j): ("by", j, i) for i in range(n) for j in range(n + 1)}
    mirror.update({("tx", i, j): ("ty", j, i) for i in range(n - 1) for j in range(n)})
    mirror.update({("w", i, j, a, b): ("w", j, i, b, a)
                   for i in range(n) for j in range(n) for a in (0, 1) for b in (0, 1)})
    pairs = sorted({tuple(sorted((edge[k], edge[m]))) for k, m in mirror.items()
                    if edge[k] != edge[m]})

    loads = [{"node": topn(i, j), "force": [0.0, 0.0, -10.0]}
             for i in range(1, n) for j in range(1, n)]

    variables = []
    for i in range(1, n):       # coupled dz of free top nodes across diagonal
        for j in range(i, n):
            if i == j:
                targets = [[topn(i, i), "z", 1.0]]
            else:
                targets = [[topn(i, j), "z", 1.0], [topn(j, i), "z", 1.0]]
            variables.append({"kind": "node_offset", "name": f"dz{i}_{j}",
                              "targets": targets,
                              "lower": -1.25, "upper": 4.5, "initial": 0.0})
    if grouped:
        for gname in ("top_chord", "web", "bottom_chord"):
            variables.append({"kind": "area", "name": f"A_{gname}",
                              "elements": groups[gname],
                              "lower": 1e-3, "upper": 0.2, "initial": 0.1})
    else:
        for e in elements:
            variables.append({"kind": "area", "name": f"A{e['id']}",
                              "elements": [e["id"]],
                              "lower": 1e-3, "upper": 0.2, "initial": 0.1})

    if n == 8:
        # Full scale: the study states 596 constraints (512 stress + 84
        # displacement).  The exact displacement node set is not recoverable
        # from its figure; freeze a deterministic interior selector: all 49
        # free top nodes plus the 35 bottom nodes with 2 <= i,j <= 7
        # excluding (2,2) (nearest the support corner).
        disp_nodes = [topn(i, j) for i in range(1, n) for j in range(1, n)]
        disp_nodes += [bot(i, j) for i in range(2, n) for j in range(2, n)
                       if (i, j) != (2, 2)]
    else:
        disp_nodes = [nd["id"] for nd in nodes if not nd["fixed"][2]]

    return {
        "nodes": nodes,
        "materials": [STEEL],
        "sections": [{"name": "a0", "type": "explicit", "A": 0.1, "Iy": 1e-4,
                      "Iz": 1e-4, "J": 2e-4, "S": 1e-3}],
        "elements": elements,
        "loads": loads,
        "variables": variables,
        "constraints": [
            {"kind": "axial_stress", "elements": "all", "sigma_max": 350.0},
            {"kind": "displacement", "nodes": disp_nodes, "axis": "z",
             "limit": 0.08},
        ],
        "objective": {"kind": "volume"},
        "groups": groups,
        "optimizer": {"algorithm": "mma", "gradient_mode": "adjoint",
                      "rel_tolerance": 1e-6, "time_limit": 300.0,
                      "max_iterations": 400},
        "meta": {"provenance": "grid/depth/bounds/limits from the study; "
                               "10 kN top-node loads assumed; full-scale "
                               "displacement node set reconstructed to match "
                               "the stated constraint total",
                 "mirror_element_pairs": [list(p) for p in pairs]},
    }


# -- study 3: irregular tubular frames ------------------------------------------

# (rise, bump amplitude, bump wavenumber, bump phase); frame A is a catenary
_FRAME_CURVES = {
    "A": (15.0, 0.0, 0, 0.0),
    "B": (12.0, 2.0, 2, 0.0),
    "C": (15.0, 2.5, 3, 0.4),
    "D": (13.0, 3.0, 2, 0.7),
    "E": (16.0, 2.0, 4, 0.2),
    "F": (11.0, 3.5, 3, 1.1),
}
FRAME_SPAN = 50.0
FRAME_SPACING = 6.0
FRAME_SEGMENTS = 30


def _frame_curve(label: str, t: np.ndarray) -> np.ndarray:
    rise, amp, k, phase = _FRAME_CURVES[label]
    if label == "A":
        a = 2.4
        return rise * (1.0 - (np.cosh(a * (2 * t - 1)) - 1.0) / (np.cosh(a) - 1.0))
    return 4.0 * rise * t * (1.0 - t) + amp * np.sin(k * np.pi * t + phase) * np.sin(np.pi * t)


def fixture_frames(spine: bool = False, grouped_sections: bool = False,
                   n_frames: int = 6) -> dict:
    """Six planar tubular frames (span 50 m, 30 elements each), pin supported,
    40 kN at each free node.

    spine=False: single-section sizing; x = (d, alpha) shared by all elements.
    spine=True:  each frame gains a Vierendeel spine (strut pairs, ties,
    spine chords, anchors); stage-one compliance problem over 33 projected
    spatial variables per frame, or the four-family section problem when
    grouped_sections=True.
    """
    labels = list(_FRAME_CURVES)[:n_frames]
    t = np.arange(FRAME_SEGMENTS + 1) / FRAME_SEGMENTS
    nodes, elements, loads = [], [], []
    families = {"frame": [], "strut": [], "spine": [], "tie": []}
    variables = []
    next_node = 0
    next_elem = 0

    def add_node(xyz, fixed):
        nonlocal next_node
        nodes.append({"id": next_node, "xyz": [float(v) for v in xyz],
                      "fixed": list(fixed)})
        next_node += 1
        return next_node - 1

    def add_elem(a, b, family):
        nonlocal next_elem
        elements.append({"id": next_elem, "nodes": [a, b], "material": "steel",
                         "section": "tube0", "kind": "frame"})
        families[family].append(next_elem)
        next_elem += 1
        return next_elem - 1

    planar_fix = [False, True, False, True, False, True]   # uy, rx, rz fixed
    pin_fix = [True, True, True, True, False, True]

    for fi, label in enumerate(labels):
        y = fi * FRAME_SPACING
        z = _frame_curve(label, t)
        x = FRAME_SPAN * t
        pts = np.column_stack([x, np.full_like(x, y), z])
        if spine:
            fixed_interior = [False, False, False, False, False, False]
            fixed_end = [True, True, True, False, False, False]
        else:
            fixed_interior = planar_fix
            fixed_end = pin_fix
        ids = []
        for k in range(FRAME_SEGMENTS + 1):
            end = k in (0, FRAME_SEGMENTS)
            ids.append(add_node(pts[k], fixed_end if end else fixed_interior))
            if not end:
                loads.append({"node": ids[-1], "force": [0.0, 0.0, -40.0]})
        for k in range(FRAME_SEGMENTS):
            add_elem(ids[k], ids[k + 1], "frame")

        if not spine:
            continue

        # outward in-plane normals from central-difference tangents
        tang = np.gradient(pts, axis=0)
        tang /= np.linalg.norm(tang, axis=1)[:, None]
        normal = np.column_stack([-tang[:, 2], np.zeros(len(t)), tang[:, 0]])
        flip = normal[:, 2] < 0
        normal[flip] *= -1.0
        c30, s30 = np.cos(np.pi / 6), np.sin(np.pi / 6)
        vL = c30 * normal + s30 * np.array([0.0, -1.0, 0.0])
        vR = c30 * normal + s30 * np.array([0.0, 1.0, 0.0])
        tipsL, tipsR = [], []
        for k in range(FRAME_SEGMENTS + 1):
            tipsL.append(add_node(pts[k] + vL[k], [False] * 6))
            tipsR.append(add_node(pts[k] + vR[k], [False] * 6))
            add_elem(ids[k], tipsL[-1], "strut")
            add_elem(ids[k], tipsR[-1], "strut")
            add_elem(tipsL[-1], tipsR[-1], "tie")
            variables.append({
                "kind": "node_offset", "name": f"mu_{label}_{k}",
                "targets": [[tipsL[-1], a, float(vL[k][i])] for i, a in
                            enumerate("xyz")] +
                           [[tipsR[-1], a, float(vR[k][i])] for i, a in
                            enumerate("xyz")],
                "lower": -0.5, "upper": 2.5, "initial": 0.0})
        for k in range(FRAME_SEGMENTS):
            add_elem(tipsL[k], tipsL[k + 1], "spine")
            add_elem(tipsR[k], tipsR[k + 1], "spine")
        for side, xa, tipL, tipR in ((0, -2.0, tipsL[0], tipsR[0]),
                                     (1, FRAME_SPAN + 2.0, tipsL[-1], tipsR[-1])):
            anchor = add_node([xa, y, 0.0], pin_fix)
            add_elem(anchor, tipL, "spine")
            add_elem(anchor, tipR, "spine")
            direction = [-1.0, 0.0, 0.0] if side == 0 else [1.0, 0.0, 0.0]
            variables.append({"kind": "projected_offset",
                              "name": f"anchor_{label}_{side}", "node": anchor,
                              "direction": direction,
                              "lower": 0.0, "upper": 4.0, "initial": 0.0})

    if spine and grouped_sections:
        variables = []
        for fam in ("frame", "strut", "spine", "tie"):
            variables.append({"kind": "tube_diameter", "name": f"d_{fam}",
                              "elements": families[fam],
                              "lower": 0.2, "upper": 1.0, "initial": 0.2})
            variables.append({"kind": "tube_ratio", "name": f"a_{fam}",
                              "elements": families[fam],
                              "lower": 0.01, "upper": 0.98, "initial": 0.5})
    elif not spine:
        all_e = [e["id"] for e in elements]
        variables = [
            {"kind": "tube_diameter", "name": "d", "elements": all_e,
             "lower": 0.1, "upper": 1.0, "initial": 0.75},
            {"kind": "tube_ratio", "name": "alpha", "elements": all_e,
             "lower": 0.05, "upper": 0.98, "initial": 0.5},
        ]

    if spine and not grouped_sections:
        objective = {"kind": "compliance"}
        constraints = []
    else:
        constraints = [
            {"kind": "displacement", "nodes": "all", "axis": "z",
             "limit": FRAME_SPAN / 300.0},
            {"kind": "combined_stress", "elements": "all", "sigma_max": 350.0},
        ]
        if grouped_sections:
            rep = {fam: families[fam][0] for fam in families}
            constraints += [
                {"kind": "diameter_ordering", "lesser": rep["strut"],
                 "greater": rep["frame"]},
                {"kind": "diameter_ordering", "lesser": rep["strut"],
                 "greater": rep["spine"]},
                {"kind": "diameter_ordering", "lesser": rep["tie"],
                 "greater": rep["spine"]},
            ]
        objective = {"kind": "volume"}

    section = ({"name": "tube0", "type": "tube", "d": 0.2, "alpha": 0.95}
               if spine else
               {"name": "tube0", "type": "tube", "d": 0.75, "alpha": 0.5})
    return {
        "nodes": nodes,
        "materials": [STEEL],
        "sections": [section],
        "elements": elements,
        "loads": loads,
        "variables": variables,
        "constraints": constraints,
        "objective": objective,
        "groups": families,
        "optimizer": {"algorithm": "lbfgs" if (spine and not grouped_sections)
                      else "mma",
                      "gradient_mode": "adjoint", "rel_tolerance": 1e-6,
                      "time_limit": 120.0, "max_iterations": 300},
        "meta": {"provenance": "span/discretization/loads/bounds/limits from "
                               "the study; curve shapes are documented "
                               "analytic reconstructions",
                 "curves": {k: list(v) for k, v in _FRAME_CURVES.items()}},
    }


# -- study 4: multimaterial bridge ---------------------------------------------

def fixture_bridge(desk: bool = True) -> dict:
    """Doubly cantilevered truss bridge for embodied-carbon minimization.

    desk=True: small 2-chord Warren variant with 3 element groups (8 material
    assignments), used by the sweep acceptance run.  desk=False: 3-layer
    bridge with the study's 56.5 m main span, 150 kN deck loads and 6 groups.
    """
    if desk:
        n_bay, dx, h = 6, 3.0, 3.0
        piers = (1, 5)
        load = -100.0
        layers = 2
    else:
        n_bay, dx, h = 12, 56.5 / 8.0, 2.8
        piers = (2, 10)
        load = -150.0
        layers = 3

    nodes, elements, loads = [], [], []
    groups: dict[str, list[int]] = {}

    def add_node(xyz, fixed):
        nodes.append({"id": len(nodes), "xyz": list(xyz), "fixed": list(fixed)})
        return len(nodes) - 1

    def add_elem(a, b, group):
        eid = len(elements)
        elements.append({"id": eid, "nodes": [a, b], "material": "steel",
                         "section": "a0", "kind": "truss"})
        groups.setdefault(group, []).append(eid)
        return eid

    free2d = [False, False, True, True, True, True]

    if desk:
        bottom = []
        for i in range(n_bay + 1):
            fixed = list(free2d)
            if i == piers[0]:
                fixed[0] = fixed[1] = True
            if i == piers[1]:
                fixed[1] = True
            bottom.append(add_node([i * dx, 0.0, 0.0], fixed))
        top = [add_node([(i + 0.5) * dx, h, 0.0], free2d) for i in range(n_bay)]
        for i in range(n_bay):
            add_elem(bottom[i], bottom[i + 1], "bottom_chord")
        for i in range(n_bay - 1):
            add_elem(top[i], top[i + 1], "top_chord")
        for i in range(n_bay):
            add_elem(bottom[i], top[i], "web")
            add_elem(top[i], bottom[i + 1], "web")
        loads = [{"node": bottom[i], "force": [0.0, load, 0.0]}
                 for i in range(n_bay + 1) if i not in piers]
        deck_nodes = bottom
        variables = [
            {"kind": "area", "name": f"A_{g}", "elements": groups[g],
             "lower": 0.001, "upper": 1.8, "initial": 0.1}
            for g in ("bottom_chord", "top_chord", "web")]
    else:
        # two aligned chords, X-braced bays, verticals, pier columns; the
        # deck rides on the bottom chord and is not itself modeled
        bottom, top = [], []
        for i in range(n_bay + 1):
            bottom.append(add_node([i * dx, 0.0, 0.0], list(free2d)))
            top.append(add_node([i * dx, h, 0.0], list(free2d)))
        for p, i in enumerate(piers):   # pier columns to ground supports
            base = add_node([i * dx, -4.0, 0.0],
                            [True, True, True, True, True, True])
            add_elem(base, bottom[i], "support")
            if p == 0:
                nodes[bottom[i]]["fixed"][0] = True  # longitudinal restraint
        for i in range(n_bay):
            add_elem(bottom[i], bottom[i + 1], "bottom_chord")
            add_elem(top[i], top[i + 1], "top_chord")
            add_elem(bottom[i], top[i + 1], "bottom_web")
            add_elem(top[i], bottom[i + 1], "top_web")
        for i in range(n_bay + 1):
            add_elem(bottom[i], top[i], "strut")
        loads = [{"node": bottom[i], "force": [0.0, load, 0.0]}
                 for i in range(n_bay + 1)]
        deck_nodes = bottom
        variables = [
            {"kind": "area", "name": f"A_{g}", "elements": groups[g],
             "lower": 0.001, "upper": 1.8, "initial": 0.1}
            for g in ("bottom_chord", "top_chord", "bottom_web", "top_web",
                      "strut", "support")]
        mid = n_bay // 2
        for i in range(mid):            # mirrored spatial variables, top chord
            variables.append({"kind": "node_offset", "name": f"ty{i}",
                              "targets": [[top[i], "y", 1.0],
                                          [top[n_bay - i], "y", 1.0]],
                              "lower": -2.0, "upper": 2.0, "initial": 0.0})
            variables.append({"kind": "node_offset", "name": f"tx{i}",
                              "targets": [[top[i], "x", 1.0],
                                          [top[n_bay - i], "x", -1.0]],
                              "lower": -2.0, "upper": 2.0, "initial": 0.0})
        variables.append({"kind": "node_offset", "name": "ty_mid",
                          "targets": [[top[mid], "y", 1.0]],
                          "lower": -2.0, "upper": 2.0, "initial": 0.0})

    return {
        "nodes": nodes,
        "materials": [STEEL, GLULAM],
        "sections": [{"name": "a0", "type": "explicit", "A": 0.1, "Iy": 1e-4,
                      "Iz": 1e-4, "J": 2e-4, "S": 1e-3}],
        "elements": elements,
        "loads": loads,
        "variables": variables,
        "constraints": [
            {"kind": "displacement", "nodes": deck_nodes, "axis": "y",
             "limit": 0.15},
            {"kind": "axial_stress", "elements": "all"},
        ],
        "objective": {"kind": "embodied_carbon"},
        "groups": groups,
        "optimizer": {"algorithm": "mma", "gradient_mode": "adjoint",
                      "rel_tolerance": 1e-6, "time_limit": 120.0,
                      "max_iterations": 300},
        "meta": {"provenance": "material table, deflection limit and "
                               "per-material area bounds from the study; "
                               "topology and desk-scale loads reconstructed",
                 "material_area_bounds": {
                     "steel": [0.001, 0.034, 0.2],
                     "glulam": [0.06, 0.5, 1.8]}},
    }
