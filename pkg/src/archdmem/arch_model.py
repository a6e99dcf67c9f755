"""Model data types and mesh generation for plane masonry arches.

Units throughout: mm, N, MPa. Unit weights are given in kN/m^3 and fracture
energies in N/mm, as in the model files; conversions happen at the point of use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

GROUND = -1

# kN/m^3 -> N/mm^3
UNIT_WEIGHT_SCALE = 1e-6


class MeshError(ValueError):
    """Raised for geometrically infeasible or malformed meshes."""


@dataclass(frozen=True)
class DiagonalShear:
    """Yield domain of the element shear-distortion mechanism.

    ``kind`` is ``"none"`` (always elastic), ``"mohr-coulomb"`` (uses
    ``cohesion`` and ``friction``) or ``"turnsek-cacovic"`` (uses ``tau0``
    and ``b``).
    """

    kind: Literal["none", "mohr-coulomb", "turnsek-cacovic"] = "none"
    cohesion: float = 0.0
    friction: float = 0.0
    tau0: float = 0.0
    b: float = 1.5


@dataclass(frozen=True)
class Material:
    """Homogenised masonry properties (MPa, N/mm, kN/m^3).

    ``math.inf`` stands for unbounded compressive strength or fracture energy.
    """

    E: float
    G_shear: Optional[float] = None
    nu: float = 0.25
    f_t: float = 0.0
    f_m: float = math.inf
    G_t: float = math.inf
    G_m: float = math.inf
    c: float = 0.0
    mu: float = 0.6
    G_s: float = math.inf
    w: float = 0.0
    diagonal_shear: DiagonalShear = field(default_factory=DiagonalShear)

    @property
    def G(self) -> float:
        if self.G_shear is not None:
            return self.G_shear
        return self.E / (2.0 * (1.0 + self.nu))

    def violations(self) -> list[str]:
        out = []
        if not self.E > 0:
            out.append("E must be > 0")
        if not self.G > 0:
            out.append("G_shear must be > 0")
        if not 0.0 <= self.nu < 0.5:
            out.append("nu must lie in [0, 0.5)")
        if not self.f_t >= 0:
            out.append("f_t must be >= 0")
        if not self.f_m > 0:
            out.append("f_m must be > 0")
        for name in ("G_t", "G_m", "G_s", "c", "mu", "w"):
            if not getattr(self, name) >= 0:
                out.append(f"{name} must be >= 0")
        return out


@dataclass(frozen=True, eq=False)
class QuadGeometry:
    """Plane quadrilateral macro-element.

    Vertices are anti-clockwise; edge ``k`` (1-based) runs from vertex ``k``
    to vertex ``k+1``. ``angles[k-1]`` is the interior angle at vertex ``k``.
    ``thickness`` is the out-of-plane thickness.
    """

    vertices: np.ndarray
    thickness: float
    side_lengths: np.ndarray
    angles: np.ndarray
    centroid: np.ndarray
    area: float
    e_x: np.ndarray
    e_y: np.ndarray

    def edge(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Start and end vertex of edge ``k`` (1-based)."""
        return self.vertices[k - 1], self.vertices[k % 4]


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    return orient(a, b, c) * orient(a, b, d) < 0 and orient(c, d, a) * orient(c, d, b) < 0


def compute_element_geometry(vertices: Sequence[Sequence[float]], thickness: float) -> QuadGeometry:
    """Build a :class:`QuadGeometry` from four anti-clockwise vertices.

    Raises
    ------
    MeshError
        For clockwise or self-intersecting quadrilaterals, zero-length edges,
        reflex angles or non-positive thickness.
    """
    v = np.asarray(vertices, dtype=float).reshape(4, 2)
    if not thickness > 0:
        raise MeshError("thickness must be > 0")
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(edges, axis=1)
    scale = max(float(lengths.max()), 1e-300)
    if np.any(lengths <= 1e-12 * scale):
        raise MeshError("zero-length edge")
    if _segments_cross(v[0], v[1], v[2], v[3]) or _segments_cross(v[1], v[2], v[3], v[0]):
        raise MeshError("self-intersecting quadrilateral")
    area = _signed_area(v)
    if area <= 0:
        raise MeshError("vertices are not anti-clockwise (signed area <= 0)")

    angles = np.empty(4)
    for k in range(4):
        to_next = edges[k]
        to_prev = -edges[k - 1]
        cross = to_prev[0] * to_next[1] - to_prev[1] * to_next[0]
        dot = float(to_prev @ to_next)
        # interior angle measured from the outgoing edge to the incoming one (CCW polygon)
        angles[k] = math.atan2(-cross, dot) % (2.0 * math.pi)
    if np.any(angles <= 0) or np.any(angles >= math.pi):
        raise MeshError("quadrilateral is not strictly convex")

    # area centroid by the shoelace formula
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    cx = float(np.sum((x + xn) * cr)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cr)) / (6.0 * area)

    e_x = edges[0] / lengths[0]
    e_y = np.array([-e_x[1], e_x[0]])
    return QuadGeometry(
        vertices=v,
        thickness=float(thickness),
        side_lengths=lengths,
        angles=angles,
        centroid=np.array([cx, cy]),
        area=area,
        e_x=e_x,
        e_y=e_y,
    )


@dataclass(frozen=True, eq=False)
class FiberGeometry:
    """Geometry of the fibers on one side of an interface (arrays of length n_f)."""

    A0: np.ndarray
    A1: np.ndarray
    length: np.ndarray
    direction: np.ndarray  # (n_f, 2) unit vectors pointing into the element

    @property
    def A_min(self) -> np.ndarray:
        return np.minimum(self.A0, self.A1)


@dataclass(frozen=True, eq=False)
class InterfaceSpec:
    """Zero-thickness interface between element ``p`` (left) and ``q`` (right).

    Either side may be :data:`GROUND`. ``start``/``end`` are the interface
    end points at xi = 0 and xi = 1; ``e_xi`` runs from start to end and
    ``e_eta`` points from p toward q.
    """

    p: int
    q: int
    edge_p: Optional[int]
    edge_q: Optional[int]
    start: np.ndarray
    end: np.ndarray
    e_xi: np.ndarray
    e_eta: np.ndarray
    n_f: int
    fibers_p: Optional[FiberGeometry]
    fibers_q: Optional[FiberGeometry]

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    @property
    def xi(self) -> np.ndarray:
        return (np.arange(self.n_f) + 0.5) / self.n_f

    @property
    def is_ground(self) -> bool:
        return self.p == GROUND or self.q == GROUND

    @property
    def tributary_areas(self) -> np.ndarray:
        side = self.fibers_p if self.fibers_p is not None else self.fibers_q
        return side.A0


@dataclass(frozen=True)
class PointLoad:
    """Concentrated load (kN) at a point, transferred to ``element``."""

    element: int
    point: tuple[float, float]
    direction: tuple[float, float] = (0.0, -1.0)
    magnitude: float = 1.0


@dataclass(frozen=True, eq=False)
class ModelMesh:
    elements: list[QuadGeometry]
    materials: list[Material]
    interfaces: list[InterfaceSpec]
    gravity: bool = True
    point_loads: list[PointLoad] = field(default_factory=list)
    monitored: Optional[PointLoad] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_dofs(self) -> int:
        return 4 * len(self.elements)

    def dof_map(self, e: int) -> np.ndarray:
        return np.arange(4 * e, 4 * e + 4)


def _default_fiber_side(elem: QuadGeometry, edge: int, start_at_edge_start: bool, n_f: int) -> FiberGeometry:
    """Fibers from the interface edge to the element mid-line.

    The mid-line joins the midpoints of the two edges adjacent to ``edge``;
    fibers of the two interfaces of a voussoir therefore tile it exactly.
    """
    a, b = elem.edge(edge)
    prev_a, _ = elem.edge((edge - 2) % 4 + 1)
    _, next_b = elem.edge(edge % 4 + 1)
    m_a = 0.5 * (prev_a + a)
    m_b = 0.5 * (b + next_b)
    if not start_at_edge_start:
        a, b = b, a
        m_a, m_b = m_b, m_a
    xi = (np.arange(n_f) + 0.5) / n_f
    pa = a + np.outer(xi, b - a)
    pm = m_a + np.outer(xi, m_b - m_a)
    vec = pm - pa
    length = np.linalg.norm(vec, axis=1)
    if np.any(length <= 0):
        raise MeshError("degenerate fiber (zero length)")
    width = elem.thickness
    A0 = np.full(n_f, width * float(np.linalg.norm(b - a)) / n_f)
    A1 = np.full(n_f, width * float(np.linalg.norm(m_b - m_a)) / n_f)
    return FiberGeometry(A0=A0, A1=A1, length=length, direction=vec / length[:, None])


def make_interface(elements: Sequence[QuadGeometry], p: int, edge_p: Optional[int], q: int, edge_q: Optional[int], n_f: int) -> InterfaceSpec:
    """Interface between edge ``edge_p`` of ``p`` and edge ``edge_q`` of ``q``.

    xi = 0 sits at the start vertex of p's edge (equivalently the end vertex
    of q's edge, since both elements are anti-clockwise).
    """
    if n_f < 2:
        raise MeshError("n_f must be >= 2")
    if p == GROUND and q == GROUND:
        raise MeshError("interface cannot connect ground to ground")
    if p != GROUND:
        start, end = elements[p].edge(edge_p)
    else:
        end, start = elements[q].edge(edge_q)
    t = end - start
    e_xi = t / np.linalg.norm(t)
    e_eta = np.array([e_xi[1], -e_xi[0]])
    fp = _default_fiber_side(elements[p], edge_p, True, n_f) if p != GROUND else None
    fq = _default_fiber_side(elements[q], edge_q, False, n_f) if q != GROUND else None
    return InterfaceSpec(p, q, edge_p, edge_q, start.copy(), end.copy(), e_xi, e_eta, n_f, fp, fq)


@dataclass(frozen=True)
class ArchParameters:
    inner_span: float
    inner_rise: float
    thickness: float
    width: float
    n_voussoirs: int

    def circle(self) -> tuple[np.ndarray, float, float]:
        """Centre, inner radius and half opening angle of the intrados circle."""
        s, r = self.inner_span, self.inner_rise
        R = (0.25 * s * s + r * r) / (2.0 * r)
        half = math.asin(min(1.0, 0.5 * s / R))
        return np.array([0.5 * s, r - R]), R, half


def build_circular_arch(
    inner_span: float,
    inner_rise: float,
    thickness: float,
    width: float,
    n_voussoirs: int,
    material: Material,
    n_f: int = 20,
) -> ModelMesh:
    """Stone-by-stone mesh of a circular arch fixed to the ground at both springings.

    The left intrados springing sits at the origin. Voussoirs subtend equal
    angles and are numbered left to right; edge 1 of every voussoir is the
    intrados. Chord vertices are pushed radially by sqrt(dθ/sin dθ) so that the
    polygonal voussoirs carry the volume of the exact annular sector.
    """
    if min(inner_span, inner_rise, thickness, width) <= 0:
        raise MeshError("arch dimensions must be > 0")
    if n_voussoirs < 3:
        raise MeshError("at least 3 voussoirs are required")
    if inner_rise > 0.5 * inner_span * (1 + 1e-12):
        raise MeshError("rise must not exceed span/2 for a circular segment")
    params = ArchParameters(inner_span, inner_rise, thickness, width, n_voussoirs)
    centre, R_i, half = params.circle()
    R_e = R_i + thickness
    dth = 2.0 * half / n_voussoirs
    if dth <= 0:
        raise MeshError("degenerate voussoir angle")
    scale = math.sqrt(dth / math.sin(dth))
    phis = math.pi / 2 + half - dth * np.arange(n_voussoirs + 1)

    def pt(radius, phi):
        return centre + radius * scale * np.array([math.cos(phi), math.sin(phi)])

    elements = []
    for k in range(n_voussoirs):
        a, b = phis[k], phis[k + 1]
        verts = [pt(R_i, a), pt(R_i, b), pt(R_e, b), pt(R_e, a)]
        elements.append(compute_element_geometry(verts, width))

    interfaces = [make_interface(elements, GROUND, None, 0, 4, n_f)]
    for k in range(n_voussoirs - 1):
        interfaces.append(make_interface(elements, k, 2, k + 1, 4, n_f))
    interfaces.append(make_interface(elements, n_voussoirs - 1, 2, GROUND, None, n_f))
    meta = {
        "circular_arch": {
            "inner_span": inner_span,
            "inner_rise": inner_rise,
            "thickness": thickness,
            "width": width,
            "n_voussoirs": n_voussoirs,
            "n_f": n_f,
        }
    }
    return ModelMesh(elements, [material] * n_voussoirs, interfaces, meta=meta)


def annular_sector_volume(inner_span: float, inner_rise: float, thickness: float, width: float) -> float:
    _, R_i, half = ArchParameters(inner_span, inner_rise, thickness, width, 3).circle()
    R_e = R_i + thickness
    return half * (R_e**2 - R_i**2) * width


def extrados_point(mesh: ModelMesh, x_over_span: float) -> tuple[int, np.ndarray]:
    """Element and extrados point at horizontal position ``x/L``.

    ``L = inner span + 2 * thickness`` is the overall length of the arch and
    ``x`` is measured from one thickness left of the left intrados springing,
    so ``x/L = 0.5`` is the crown of a symmetric arch.
    """
    geo = mesh.meta.get("circular_arch")
    if geo is None:
        raise MeshError("load positions by x/L need a circular-arch mesh")
    t = geo["thickness"]
    x = -t + x_over_span * (geo["inner_span"] + 2.0 * t)
    for e, el in enumerate(mesh.elements):
        a, b = el.edge(3)  # extrados runs right to left
        lo, hi = sorted((a[0], b[0]))
        if lo - 1e-9 <= x <= hi + 1e-9:
            s = (x - a[0]) / (b[0] - a[0])
            return e, a + s * (b - a)
    raise MeshError(f"x/L = {x_over_span} lies outside the extrados")


def with_point_load(mesh: ModelMesh, x_over_span: float, direction=(0.0, -1.0)) -> ModelMesh:
    """Copy of ``mesh`` with a unit vertical load on the extrados at ``x/L``.

    The same point becomes the monitored point of pushover analyses.
    """
    e, point = extrados_point(mesh, x_over_span)
    load = PointLoad(e, (float(point[0]), float(point[1])), tuple(direction), 1.0)
    meta = dict(mesh.meta)
    meta["load_position"] = x_over_span
    return ModelMesh(mesh.elements, mesh.materials, mesh.interfaces, mesh.gravity, [load], load, meta)


def with_material(mesh: ModelMesh, material: Material) -> ModelMesh:
    return ModelMesh(mesh.elements, [material] * mesh.n_elements, mesh.interfaces, mesh.gravity, mesh.point_loads, mesh.monitored, dict(mesh.meta))


def validate_mesh(mesh: ModelMesh) -> list[str]:
    """List every violated model invariant; an empty list means the mesh is valid."""
    out: list[str] = []
    for k, el in enumerate(mesh.elements):
        v = el.vertices
        if _signed_area(v) <= 0:
            out.append(f"element {k}: orientation violation (vertices not anti-clockwise)")
        else:
            try:
                compute_element_geometry(v, el.thickness)
            except MeshError as exc:
                out.append(f"element {k}: {exc}")
        if abs(float(np.sum(el.angles)) - 2 * math.pi) > 1e-9:
            out.append(f"element {k}: interior angles do not sum to 2*pi")
    if len(mesh.materials) != len(mesh.elements):
        out.append("materials: one material per element required")
    for k, mat in enumerate(mesh.materials):
        for msg in mat.violations():
            out.append(f"material of element {k}: {msg}")

    n = mesh.n_elements
    for i, itf in enumerate(mesh.interfaces):
        L = itf.length
        tol = 1e-6 * L
        for side, e, edge in (("p", itf.p, itf.edge_p), ("q", itf.q, itf.edge_q)):
            if e == GROUND:
                continue
            if not 0 <= e < n:
                out.append(f"interface {i}: {side}-element {e} out of range")
                continue
            a, b = mesh.elements[e].edge(edge)
            ends = (a, b) if side == "p" else (b, a)
            if np.linalg.norm(ends[0] - itf.start) > tol or np.linalg.norm(ends[1] - itf.end) > tol:
                out.append(f"interface {i}: coincidence violation on {side}-side edge {edge} of element {e}")
        if abs(float(itf.e_xi @ itf.e_eta)) > 1e-9 or abs(np.linalg.norm(itf.e_xi) - 1) > 1e-9 or abs(np.linalg.norm(itf.e_eta) - 1) > 1e-9:
            out.append(f"interface {i}: frame is not orthonormal")
        if itf.n_f < 2:
            out.append(f"interface {i}: n_f must be >= 2")
        for side, fib in (("p", itf.fibers_p), ("q", itf.fibers_q)):
            if fib is None:
                continue
            if np.any(fib.A0 <= 0) or np.any(fib.A1 <= 0) or np.any(fib.length <= 0):
                out.append(f"interface {i}: non-positive fiber area or length on {side}-side")
            elif e_width := mesh.elements[itf.p if side == "p" else itf.q].thickness:
                if abs(float(np.sum(fib.A0)) / e_width - L) > 1e-6 * L:
                    out.append(f"interface {i}: fiber tributary widths do not sum to interface length")
        # p must lie on the side opposite to e_eta
        if itf.p != GROUND:
            c = mesh.elements[itf.p].centroid - itf.start
            if c @ itf.e_eta >= 0:
                out.append(f"interface {i}: p-element is not on the left of the interface")
        if itf.q != GROUND:
            c = mesh.elements[itf.q].centroid - itf.start
            if c @ itf.e_eta <= 0:
                out.append(f"interface {i}: q-element is not on the right of the interface")
    if n and not any(itf.is_ground for itf in mesh.interfaces):
        out.append("model: no ground interface, structure is unrestrained")
    return out
