"""Macro-element shear stiffness by plate equivalence, consistent mass and self-weight."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .arch_model import UNIT_WEIGHT_SCALE, MeshError, QuadGeometry
from .kinematics import gamma_mode_vector

GRAVITY = 9810.0  # mm/s^2


@lru_cache(maxsize=None)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def bilinear(zeta: float, lam: float):
    """Bilinear shape functions and their natural derivatives at (zeta, lambda)."""
    m = 0.25 * np.array([(1 - zeta) * (1 - lam), (1 + zeta) * (1 - lam), (1 + zeta) * (1 + lam), (1 - zeta) * (1 + lam)])
    dz = 0.25 * np.array([-(1 - lam), (1 - lam), (1 + lam), -(1 + lam)])
    dl = 0.25 * np.array([-(1 - zeta), -(1 + zeta), (1 + zeta), (1 - zeta)])
    return m, dz, dl


def plane_stress_matrix(E: float, nu: float, G: float | None = None) -> np.ndarray:
    """Isotropic plane-stress matrix; ``G`` overrides the shear entry when given."""
    c = E / (1.0 - nu * nu)
    D = np.array([[c, c * nu, 0.0], [c * nu, c, 0.0], [0.0, 0.0, E / (2.0 * (1.0 + nu))]])
    if G is not None:
        D[2, 2] = G
    return D


def gamma_nodal_field(element: QuadGeometry) -> np.ndarray:
    """Global nodal displacements (4 nodes x 2) of the Gamma mode per unit Gamma."""
    c = gamma_mode_vector(element)
    R = np.column_stack([element.e_x, element.e_y])
    u = np.zeros((4, 2))
    u[2] = R @ c[0:2]
    u[3] = R @ c[2:4]
    return u


def _jacobian(element: QuadGeometry, dz, dl):
    X = element.vertices
    J = np.array([[dz @ X[:, 0], dz @ X[:, 1]], [dl @ X[:, 0], dl @ X[:, 1]]])
    return J, float(np.linalg.det(J))


def shear_stiffness(element: QuadGeometry, E: float, nu: float, n_gauss: int = 2, G: float | None = None) -> float:
    """Stiffness ``K_Gamma`` (N·mm) of the Gamma mode of the equivalent plate.

    Strains are measured in the element frame. Only vertices 3 and 4 move, so the strain field is ``B C_r Gamma`` with
    B built from the derivatives of the last two bilinear functions.
    """
    if n_gauss < 1:
        raise ValueError("n_gauss must be >= 1")
    D = plane_stress_matrix(E, nu, G)
    # strains in the element frame (e_x along edge 1): with an independent
    # shear modulus D is not rotation invariant, so the frame must be the element's
    Rt = np.vstack([element.e_x, element.e_y])
    X = (element.vertices - element.centroid) @ Rt.T
    u = gamma_nodal_field(element) @ Rt.T
    pts, wts = _gauss(n_gauss)
    K = 0.0
    for zk, wk in zip(pts, wts):
        for ll, wl in zip(pts, wts):
            _, dz, dl = bilinear(zk, ll)
            J = np.array([[dz @ X[:, 0], dz @ X[:, 1]], [dl @ X[:, 0], dl @ X[:, 1]]])
            detJ = float(np.linalg.det(J))
            if detJ <= 0:
                raise MeshError("non-positive Jacobian: element is not convex")
            dxy = np.linalg.solve(J, np.vstack([dz, dl]))  # rows d/dx, d/dy
            eps = np.array([dxy[0] @ u[:, 0], dxy[1] @ u[:, 1], dxy[1] @ u[:, 0] + dxy[0] @ u[:, 1]])
            K += wk * wl * element.thickness * float(eps @ D @ eps) * detJ
    return K


def displacement_basis(element: QuadGeometry, zeta: float, lam: float):
    """2x4 map from ``[U, V, Phi, Gamma]`` to the plate displacement at (zeta, lambda)."""
    m, _, _ = bilinear(zeta, lam)
    x, y = m @ element.vertices - element.centroid
    ug = m @ gamma_nodal_field(element)
    return np.array([[1.0, 0.0, -y, ug[0]], [0.0, 1.0, x, ug[1]]])


@dataclass(frozen=True)
class ElementMass:
    """4x4 consistent mass (tonnes, tonne·mm^2 and couplings) conjugate to ``[U, V, Phi, Gamma]``."""

    M: np.ndarray


def element_mass(element: QuadGeometry, w: float, n_gauss: int = 2) -> ElementMass:
    """Consistent mass from the rigid-body plus Gamma displacement field.

    ``w`` is the unit weight in kN/m^3.
    """
    if w < 0:
        raise ValueError("unit weight must be >= 0")
    rho = w * UNIT_WEIGHT_SCALE / GRAVITY  # tonne/mm^3
    pts, wts = _gauss(max(n_gauss, 3))
    M = np.zeros((4, 4))
    for zk, wk in zip(pts, wts):
        for ll, wl in zip(pts, wts):
            _, dz, dl = bilinear(zk, ll)
            _, detJ = _jacobian(element, dz, dl)
            Phi = displacement_basis(element, zk, ll)
            M += wk * wl * detJ * (Phi.T @ Phi)
    return ElementMass(rho * element.thickness * M)


def self_weight_forces(element: QuadGeometry, w: float, gravity_direction=(0.0, -1.0)) -> np.ndarray:
    """Generalized self-weight forces (N, N·mm) conjugate to ``[U, V, Phi, Gamma]``."""
    g = np.asarray(gravity_direction, float)
    gamma_w = w * UNIT_WEIGHT_SCALE  # N/mm^3
    pts, wts = _gauss(2)
    f = np.zeros(4)
    for zk, wk in zip(pts, wts):
        for ll, wl in zip(pts, wts):
            _, dz, dl = bilinear(zk, ll)
            _, detJ = _jacobian(element, dz, dl)
            Phi = displacement_basis(element, zk, ll)
            f += wk * wl * detJ * (Phi.T @ g)
    return gamma_w * element.thickness * f


def shear_lever(element: QuadGeometry) -> float:
    """Height of the element measured along edge 4, the lever of the Gamma mode."""
    return float(element.side_lengths[3])


def mid_section_area(element: QuadGeometry) -> float:
    """Area of the cross-section joining the midpoints of edges 2 and 4."""
    v = element.vertices
    return float(np.linalg.norm(0.5 * (v[1] + v[2]) - 0.5 * (v[3] + v[0]))) * element.thickness
