"""Per-element building blocks: geometry, local stiffness, coordinate transforms.

Conventions (fixed throughout the package):

* Local truss DOFs are the axial displacements of the two end nodes, so the
  local stiffness is 2x2 and the transformation is 2x6.
* Local frame DOFs are ``[ux1 uy1 uz1 rx1 ry1 rz1 ux2 ... rz2]`` with x the
  member axis.  Bending about local z moves local y; bending about local y
  moves local z.  The 12x12 matrix is the standard Euler-Bernoulli space
  frame stiffness (no shear deformation).
* The frame rotation triad is built from the member direction ``c``: local z
  is ``c x Z`` normalized (Z = global z axis); for near-vertical members
  (``|c.Z| > 1 - 1e-6``) global X replaces Z as the reference.  A ``roll``
  angle then rotates local y/z about the member axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ZERO_LENGTH_TOL = 1e-9  # m; shorter elements are rejected, never regularized
VERTICAL_TOL = 1e-6     # reference-vector fallback band for frame triads

GLOBAL_Z = np.array([0.0, 0.0, 1.0])
GLOBAL_X = np.array([1.0, 0.0, 0.0])

# Hadamard pattern of the 2x2 truss stiffness: k' = (EA/L) * TRUSS_PATTERN
TRUSS_PATTERN = np.array([[1.0, -1.0], [-1.0, 1.0]])


class ZeroLengthElementError(ValueError):
    """Element shorter than ZERO_LENGTH_TOL."""


@dataclass(frozen=True)
class ElementGeometry:
    """Length, unit direction and end-minus-start vector of one element."""

    L: float
    c: np.ndarray      # unit direction, shape (3,)
    delta: np.ndarray  # end - start, shape (3,)


def element_geometry(start, end) -> ElementGeometry:
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    delta = end - start
    L = float(np.linalg.norm(delta))
    if L < ZERO_LENGTH_TOL:
        raise ZeroLengthElementError(f"element length {L:g} m below {ZERO_LENGTH_TOL:g} m")
    return ElementGeometry(L=L, c=delta / L, delta=delta)


def local_stiffness_truss(E: float, A: float, L: float) -> np.ndarray:
    if E <= 0 or A <= 0 or L <= 0:
        raise ValueError(f"non-positive truss stiffness input E={E}, A={A}, L={L}")
    return (E * A / L) * TRUSS_PATTERN


def transformation_truss(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if abs(np.linalg.norm(c) - 1.0) > 1e-9:
        raise ValueError("direction cosines are not a unit vector")
    gamma = np.zeros((2, 6))
    gamma[0, 0:3] = c
    gamma[1, 3:6] = c
    return gamma


# -- frame stiffness ---------------------------------------------------------
#
# k' is linear in each section scalar:  k' = A*M_A + J*M_J + Iy*M_Iy + Iz*M_Iz
# where the basis matrices depend on (E, G, L) only.  The bases double as the
# entry-wise derivatives d k'/d(scalar) used by the reverse pass.

def frame_stiffness_basis(E: float, G: float, L: float):
    """Return (M_A, M_J, M_Iy, M_Iz) for the 12x12 Euler-Bernoulli frame."""
    MA = np.zeros((12, 12))
    MA[0, 0] = MA[6, 6] = E / L
    MA[0, 6] = MA[6, 0] = -E / L

    MJ = np.zeros((12, 12))
    MJ[3, 3] = MJ[9, 9] = G / L
    MJ[3, 9] = MJ[9, 3] = -G / L

    a = 12.0 * E / L**3
    b = 6.0 * E / L**2
    c4 = 4.0 * E / L
    c2 = 2.0 * E / L

    # bending about local z: displacement y (1, 7), rotation rz (5, 11)
    MIz = np.zeros((12, 12))
    MIz[1, 1] = MIz[7, 7] = a
    MIz[1, 7] = MIz[7, 1] = -a
    for i, j in ((1, 5), (1, 11)):
        MIz[i, j] = MIz[j, i] = b
    for i, j in ((5, 7), (7, 11)):
        MIz[i, j] = MIz[j, i] = -b
    MIz[5, 5] = MIz[11, 11] = c4
    MIz[5, 11] = MIz[11, 5] = c2

    # bending about local y: displacement z (2, 8), rotation ry (4, 10).
    # Transverse/rotation coupling signs flip relative to the z-bending block.
    MIy = np.zeros((12, 12))
    MIy[2, 2] = MIy[8, 8] = a
    MIy[2, 8] = MIy[8, 2] = -a
    for i, j in ((2, 4), (2, 10)):
        MIy[i, j] = MIy[j, i] = -b
    for i, j in ((4, 8), (8, 10)):
        MIy[i, j] = MIy[j, i] = b
    MIy[4, 4] = MIy[10, 10] = c4
    MIy[4, 10] = MIy[10, 4] = c2

    return MA, MJ, MIy, MIz


def frame_stiffness_basis_dL(E: float, G: float, L: float):
    """Entry-wise d/dL of the four basis matrices.

    Every entry is proportional to L**-p (p = 1, 2 or 3), so the derivative
    scales each entry by -p/L.
    """
    MA, MJ, MIy, MIz = frame_stiffness_basis(E, G, L)
    dMA = -MA / L
    dMJ = -MJ / L
    scale = np.ones((12, 12))
    for i, j in ((1, 1), (7, 7), (1, 7), (7, 1), (2, 2), (8, 8), (2, 8), (8, 2)):
        scale[i, j] = 3.0
    for i, j in ((1, 5), (5, 1), (1, 11), (11, 1), (5, 7), (7, 5), (7, 11), (11, 7),
                 (2, 4), (4, 2), (2, 10), (10, 2), (4, 8), (8, 4), (8, 10), (10, 8)):
        scale[i, j] = 2.0
    dMIy = -MIy * scale / L
    dMIz = -MIz * scale / L
    return dMA, dMJ, dMIy, dMIz


def local_stiffness_frame(E, G, A, Iy, Iz, J, L) -> np.ndarray:
    if min(E, G, A, Iy, Iz, J, L) <= 0:
        raise ValueError("non-positive frame stiffness input")
    MA, MJ, MIy, MIz = frame_stiffness_basis(E, G, L)
    return A * MA + J * MJ + Iy * MIy + Iz * MIz


@dataclass(frozen=True)
class FrameTriad:
    """Rotation triad of one frame element plus the intermediates the reverse
    pass needs (reference choice, unnormalized cross product, its norm)."""

    R: np.ndarray        # (3,3), rows = local x, y, z in global coordinates
    ref_is_x: bool
    w: np.ndarray        # c x ref, before normalization
    wnorm: float
    zt: np.ndarray       # w / |w|
    yt: np.ndarray       # zt x c


def frame_triad(c, roll: float = 0.0) -> FrameTriad:
    c = np.asarray(c, dtype=float)
    ref_is_x = abs(c @ GLOBAL_Z) > 1.0 - VERTICAL_TOL
    ref = GLOBAL_X if ref_is_x else GLOBAL_Z
    w = np.cross(c, ref)
    wnorm = float(np.linalg.norm(w))
    zt = w / wnorm
    yt = np.cross(zt, c)
    cr, sr = np.cos(roll), np.sin(roll)
    y = cr * yt + sr * zt
    z = -sr * yt + cr * zt
    return FrameTriad(R=np.vstack([c, y, z]), ref_is_x=ref_is_x, w=w, wnorm=wnorm, zt=zt, yt=yt)


def transformation_frame(c, roll: float = 0.0) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if abs(np.linalg.norm(c) - 1.0) > 1e-9:
        raise ValueError("direction cosines are not a unit vector")
    R = frame_triad(c, roll).R
    gamma = np.zeros((12, 12))
    for b in range(4):
        gamma[3 * b:3 * b + 3, 3 * b:3 * b + 3] = R
    return gamma


def global_element_stiffness(gamma: np.ndarray, kloc: np.ndarray) -> np.ndarray:
    if gamma.shape[0] != kloc.shape[0]:
        raise ValueError(f"incompatible shapes {gamma.shape} and {kloc.shape}")
    return gamma.T @ kloc @ gamma


def tube_section_properties(d, alpha):
    """Area, second moment, torsion constant and section modulus of a
    circular tube with outer diameter d and inner/outer diameter ratio alpha.
    Accepts scalars or aligned arrays.
    """
    if np.any(np.asarray(d) <= 0):
        raise ValueError(f"non-positive tube diameter {d}")
    a = np.asarray(alpha)
    if np.any(a < 0.0) or np.any(a >= 1.0):
        raise ValueError(f"tube diameter ratio {alpha} outside [0, 1)")
    A = np.pi * d**2 / 4.0 * (1.0 - alpha**2)
    I = np.pi * d**4 / 64.0 * (1.0 - alpha**4)
    J = 2.0 * I
    S = 2.0 * I / d
    return A, I, J, S


def tube_section_derivatives(d: float, alpha: float):
    """d(A, I, J, S)/dd and /dalpha as two 4-tuples. Works on arrays."""
    dA_dd = np.pi * d / 2.0 * (1.0 - alpha**2)
    dA_da = -np.pi * d**2 / 2.0 * alpha
    dI_dd = np.pi * d**3 / 16.0 * (1.0 - alpha**4)
    dI_da = -np.pi * d**4 / 16.0 * alpha**3
    dJ_dd, dJ_da = 2.0 * dI_dd, 2.0 * dI_da
    # S = pi d^3 / 32 * (1 - alpha^4)
    dS_dd = 3.0 * np.pi * d**2 / 32.0 * (1.0 - alpha**4)
    dS_da = -np.pi * d**3 / 8.0 * alpha**3
    return (dA_dd, dI_dd, dJ_dd, dS_dd), (dA_da, dI_da, dJ_da, dS_da)
