"""Fiber calibration of zero-thickness interfaces and their forces and tangent.

Interface vectors of length 8 are ordered ``[d_q, d_p]`` (right element
first), so the relative displacement of fiber ``j`` is ``B[j] @ [d_q, d_p]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arch_model import GROUND, FiberGeometry, InterfaceSpec, Material, ModelMesh
from .constitutive import fiber_kernel, sliding_kernel
from .kinematics import compatibility_matrix, ground_compatibility, interface_B

_INF = math.inf


def fiber_stiffness(E_T: float, A_0, A_1, l) -> np.ndarray:
    """Axial stiffness (N/mm) of a fiber whose area varies linearly from A_0 to A_1."""
    A_0 = np.asarray(A_0, float)
    A_1 = np.asarray(A_1, float)
    l = np.asarray(l, float)
    if np.any(A_0 <= 0) or np.any(A_1 <= 0) or np.any(l <= 0):
        raise ValueError("fiber areas and length must be > 0")
    if E_T < 0:
        raise ValueError("tangent modulus must be >= 0")
    const = np.abs(A_1 - A_0) < 1e-9 * A_0
    with np.errstate(divide="ignore", invalid="ignore"):
        tapered = E_T * (A_1 - A_0) / (l * np.log(A_1 / A_0))
    out = np.where(const, E_T * A_0 / l, tapered)
    return out if out.ndim else float(out)


def fiber_orientation_factor(k, e_fiber, e_eta):
    """Reduce ``k`` by the alignment of the fiber with the interface normal."""
    e_fiber = np.asarray(e_fiber, float)
    return k * np.abs(e_fiber @ np.asarray(e_eta, float))


def side_stiffness(fib: FiberGeometry, E: float, e_eta: np.ndarray) -> np.ndarray:
    return fiber_orientation_factor(fiber_stiffness(E, fib.A0, fib.A1, fib.length), fib.direction, e_eta)


@dataclass
class InterfaceAssembly:
    """Calibrated interface with committed history.

    Arrays have one entry per fiber; sliding quantities are scalars.
    ``N_committed`` (compression positive) and ``A_c_committed`` feed the
    sliding yield surface with a one-step lag.
    """

    spec: InterfaceSpec
    B: np.ndarray  # (n_f, 2, 8)
    k_el: np.ndarray
    F_t: np.ndarray
    F_m: np.ndarray
    u_tu: np.ndarray
    u_mu: np.ndarray
    area: np.ndarray
    k_pen: float
    c: float
    mu: float
    G_s: float
    u_max_t: np.ndarray = None
    u_p_c: np.ndarray = None
    broken_c: np.ndarray = None
    broken_t: np.ndarray = None
    u_p: float = 0.0
    u_p_acc: float = 0.0
    N_committed: float = 0.0
    A_c_committed: float = field(default=0.0)

    def __post_init__(self):
        n = self.k_el.size
        if self.u_max_t is None:
            self.u_max_t = np.zeros(n)
        if self.u_p_c is None:
            self.u_p_c = np.zeros(n)
        if self.broken_c is None:
            self.broken_c = np.zeros(n, bool)
        if self.broken_t is None:
            self.broken_t = np.zeros(n, bool)
        if not self.A_c_committed:
            self.A_c_committed = float(np.sum(self.area))

    @property
    def xi(self) -> np.ndarray:
        return self.spec.xi


def _side(mesh: ModelMesh, e: int):
    return mesh.elements[e], mesh.materials[e]


def calibrate_interface(mesh: ModelMesh, i: int, penalty_factor: float = 1.0, ground_origin=None) -> InterfaceAssembly:
    """Elastic stiffness, strength and ductility of every fiber of interface ``i``."""
    itf = mesh.interfaces[i]
    frame = (itf.e_xi, itf.e_eta)
    sides = []
    A = {}
    for key, e, edge, fib, side in (("q", itf.q, itf.edge_q, itf.fibers_q, "right"), ("p", itf.p, itf.edge_p, itf.fibers_p, "left")):
        if e == GROUND:
            origin = ground_origin if ground_origin is not None else 0.5 * (itf.start + itf.end)
            A[key] = ground_compatibility(origin, itf.start, itf.end, frame)
            continue
        el, mat = _side(mesh, e)
        A[key] = compatibility_matrix(el, edge, frame, side)
        sides.append((fib, mat, side_stiffness(fib, mat.E, itf.e_eta)))
    B = interface_B(A["q"], A["p"], itf.xi)

    if len(sides) == 2:
        k1, k2 = sides[0][2], sides[1][2]
        k_el = k1 * k2 / (k1 + k2)
    else:
        k_el = sides[0][2]
    if np.any(k_el <= 0):
        raise ValueError(f"interface {i}: degenerate fiber perpendicular to the interface normal")

    # a ground side mirrors the element side for strength and fracture energy
    strength_sides = sides if len(sides) == 2 else sides * 2
    Ft = np.minimum.reduce([f.A_min * m.f_t for f, m, _ in strength_sides])
    Fm = np.minimum.reduce([f.A_min * m.f_m for f, m, _ in strength_sides])
    Gt = np.sum([f.A_min * m.G_t for f, m, _ in strength_sides], axis=0)
    Gm = np.sum([f.A_min * m.G_m for f, m, _ in strength_sides], axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        u_tu = np.where(Ft > 0, Gt / np.where(Ft > 0, Ft, 1.0), 0.0)
        u_mu = np.where(np.isfinite(Fm), Gm / np.where(np.isfinite(Fm), Fm, 1.0), _INF)

    area = sides[0][0].A0.copy()
    mats = [m for _, m, _ in strength_sides]
    G = min(m.G for m in mats)
    lengths = [float(np.mean(f.length)) for f, _, _ in sides]
    lbar = sum(lengths) if len(sides) == 2 else lengths[0]
    k_pen = penalty_factor * G * float(np.sum(area)) / (0.5 * lbar)
    return InterfaceAssembly(
        spec=itf,
        B=B,
        k_el=np.asarray(k_el, float),
        F_t=np.asarray(Ft, float),
        F_m=np.asarray(Fm, float),
        u_tu=np.asarray(u_tu, float),
        u_mu=np.asarray(u_mu, float),
        area=area,
        k_pen=k_pen,
        c=min(m.c for m in mats),
        mu=min(m.mu for m in mats),
        G_s=min(m.G_s for m in mats),
    )


def _relative(assembly: InterfaceAssembly, d_p, d_q) -> np.ndarray:
    d = np.concatenate([np.asarray(d_q, float), np.asarray(d_p, float)])
    return assembly.B @ d  # (n_f, 2)


def evaluate_interface(assembly: InterfaceAssembly, d_p, d_q):
    """Trial fiber forces/tangents and sliding force/tangent for the given DOFs.

    Returns ``(f_v, k_v, f_u, k_u, history)`` where ``history`` holds the
    trial history variables.
    """
    rel = _relative(assembly, d_p, d_q)
    f_v, k_v, umax, upc, bt, bc = fiber_kernel(
        rel[:, 1], assembly.k_el, assembly.F_t, assembly.F_m, assembly.u_tu, assembly.u_mu, assembly.u_max_t, assembly.u_p_c, assembly.broken_c
    )
    slide = float(rel[0, 0])
    f_u, k_u, up, acc = sliding_kernel(
        np.array([slide]), assembly.k_pen, assembly.c, assembly.mu, assembly.G_s, assembly.A_c_committed, assembly.N_committed, np.array([assembly.u_p]), np.array([assembly.u_p_acc])
    )
    history = dict(u_max_t=umax, u_p_c=upc, broken_t=bt | assembly.broken_t, broken_c=bc | assembly.broken_c, u_p=float(up[0]), u_p_acc=float(acc[0]), opening=rel[:, 1], slide=slide)
    return f_v, k_v, float(f_u[0]), float(k_u[0]), history


def contact_area(area: np.ndarray, opening: np.ndarray, broken_t: np.ndarray) -> float:
    """Tributary area of fibers that are intact or currently closed."""
    return float(np.sum(area[(~broken_t) | (opening < 0)]))


def interface_internal_forces(assembly: InterfaceAssembly, d_p, d_q) -> np.ndarray:
    """Generalized interface forces on ``[d_q, d_p]`` by virtual work."""
    f_v, _, f_u, _, _ = evaluate_interface(assembly, d_p, d_q)
    B = assembly.B
    return B[:, 1, :].T @ f_v + B[0, 0, :] * f_u


def interface_tangent(assembly: InterfaceAssembly, d_p, d_q) -> np.ndarray:
    """Symmetric 8x8 tangent on ``[d_q, d_p]``: fiber-wise sum over the interface."""
    _, k_v, _, k_u, _ = evaluate_interface(assembly, d_p, d_q)
    Bv = assembly.B[:, 1, :]
    Bu = assembly.B[0, 0, :]
    return (Bv.T * k_v) @ Bv + k_u * np.outer(Bu, Bu)


def commit_interface(assembly: InterfaceAssembly, d_p, d_q) -> None:
    """Accept the trial state at ``(d_p, d_q)`` as the new committed history."""
    f_v, _, _, _, h = evaluate_interface(assembly, d_p, d_q)
    assembly.u_max_t = h["u_max_t"]
    assembly.u_p_c = h["u_p_c"]
    assembly.broken_t = h["broken_t"]
    assembly.broken_c = h["broken_c"]
    assembly.u_p = h["u_p"]
    assembly.u_p_acc = h["u_p_acc"]
    assembly.N_committed = float(-np.sum(f_v))
    assembly.A_c_committed = contact_area(assembly.area, h["opening"], assembly.broken_t)
