"""Compatibility between element Lagrangian parameters and interface displacements.

Element parameters are ordered ``d = [U, V, Phi, Gamma]``: centroid
translations, small rotation about the centroid, and the variation of the
interior angle at vertex 1 of the articulated quadrilateral.
"""

from __future__ import annotations

import math

import numpy as np

from .arch_model import MeshError, QuadGeometry


def interface_shape(xi: float) -> np.ndarray:
    """Interpolation of the edge auxiliary DOFs ``[u, v0, v1]`` at abscissa ``xi``."""
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must lie in [0, 1], got {xi}")
    return np.array([[1.0, 0.0, 0.0], [0.0, 1.0 - xi, xi]])


def _local_to_global(element: QuadGeometry, local: np.ndarray) -> np.ndarray:
    R = np.column_stack([element.e_x, element.e_y])
    return local @ R.T


def gamma_mode_vector(element: QuadGeometry) -> np.ndarray:
    """Displacements ``[u3x, u3y, u4x, u4y]`` of vertices 3 and 4 per unit Gamma.

    Components are in the element frame (e_x along edge 1). Edge 1 is held
    fixed; vertex 4 rotates about vertex 1 and vertex 3 about vertex 2, so
    vertex 3 moves normal to edge 2.
    """
    a1, a2, a3, a4 = element.angles
    s3 = math.sin(a3)
    if abs(s3) < 1e-12:
        raise MeshError("degenerate quadrilateral: sin(alpha_3) = 0")
    l4 = element.side_lengths[3]
    k3 = l4 * math.sin(a4) / s3
    return np.array([-k3 * math.sin(a2), -k3 * math.cos(a2), -l4 * math.sin(a1), l4 * math.cos(a1)])


def gamma_mode_displacements(element: QuadGeometry, gamma: float) -> tuple[float, float, float, float]:
    """Vertex 3 and 4 displacements (element frame) produced by ``gamma``."""
    c = gamma_mode_vector(element) * gamma
    return tuple(float(x) for x in c)


def gamma_mode_linkage(element: QuadGeometry) -> np.ndarray:
    """Same as :func:`gamma_mode_vector`, solved from the rigid-side constraints.

    Independent construction used to check the closed form.
    """
    P = np.column_stack([element.vertices @ element.e_x, element.vertices @ element.e_y])
    perp = lambda r: np.array([-r[1], r[0]])  # noqa: E731
    v4 = perp(P[3] - P[0])
    w3 = perp(P[2] - P[1])
    d34 = P[2] - P[3]
    omega2 = (v4 @ d34) / (w3 @ d34)
    v3 = omega2 * w3
    return np.array([v3[0], v3[1], v4[0], v4[1]])


def vertex_map(element: QuadGeometry, vertex: int) -> np.ndarray:
    """2x4 matrix giving the global displacement of ``vertex`` (1-based) from ``d``."""
    x, y = element.vertices[vertex - 1] - element.centroid
    T = np.array([[1.0, 0.0, -y, 0.0], [0.0, 1.0, x, 0.0]])
    if vertex in (3, 4):
        c = gamma_mode_vector(element)
        local = c[0:2] if vertex == 3 else c[2:4]
        T[:, 3] = _local_to_global(element, local)
    return T


def compatibility_matrix(element: QuadGeometry, edge: int, frame: tuple[np.ndarray, np.ndarray], side: str) -> np.ndarray:
    """3x4 map from ``d`` to the edge auxiliary DOFs ``[u, v0, v1]``.

    ``side`` is ``"left"`` for the p-element (xi = 0 at the start vertex of the
    edge) and ``"right"`` for the q-element (xi = 0 at the end vertex).
    """
    if edge not in (1, 2, 3, 4):
        raise ValueError(f"edge must be in 1..4, got {edge}")
    e_xi, e_eta = (np.asarray(f, dtype=float) for f in frame)
    if abs(e_xi @ e_eta) > 1e-9 or abs(np.linalg.norm(e_xi) - 1) > 1e-9 or abs(np.linalg.norm(e_eta) - 1) > 1e-9:
        raise ValueError("interface frame must be orthonormal")
    a, b = edge, edge % 4 + 1
    v0, v1 = (a, b) if side == "left" else (b, a)
    T0 = vertex_map(element, v0)
    T1 = vertex_map(element, v1)
    return np.vstack([e_xi @ T0, e_eta @ T0, e_eta @ T1])


def ground_compatibility(reference: np.ndarray, start: np.ndarray, end: np.ndarray, frame) -> np.ndarray:
    """Rigid 3x4 map for a ground pseudo-element with origin ``reference``.

    Ground DOFs are held at zero; the map only serves to read support
    reactions from the interface forces.
    """
    e_xi, e_eta = frame

    def rigid(p):
        x, y = p - reference
        return np.array([[1.0, 0.0, -y, 0.0], [0.0, 1.0, x, 0.0]])

    return np.vstack([e_xi @ rigid(start), e_eta @ rigid(start), e_eta @ rigid(end)])


def relative_displacement(A_p: np.ndarray, A_q: np.ndarray, d_p, d_q, xi: float) -> np.ndarray:
    """Relative displacement ``[slide, opening]`` of q with respect to p at ``xi``."""
    N = interface_shape(xi)
    return N @ (A_q @ np.asarray(d_q, float)) - N @ (A_p @ np.asarray(d_p, float))


def interface_B(A_q: np.ndarray, A_p: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Stack of 2x8 maps ``Ñ(xi_j) A`` acting on ``[d_q, d_p]``, shape (n, 2, 8)."""
    xi = np.atleast_1d(np.asarray(xi, float))
    N = np.zeros((xi.size, 2, 3))
    N[:, 0, 0] = 1.0
    N[:, 1, 1] = 1.0 - xi
    N[:, 1, 2] = xi
    return np.concatenate([N @ A_q, -(N @ A_p)], axis=2)


def point_map(element: QuadGeometry, point) -> np.ndarray:
    """2x4 rigid-body map of a point attached to ``element`` (no Gamma term)."""
    x, y = np.asarray(point, float) - element.centroid
    return np.array([[1.0, 0.0, -y, 0.0], [0.0, 1.0, x, 0.0]])
