"""Rigid-block, no-tension limit analysis of a meshed arch (static linear program).

Independent of the macro-element solver: blocks are rigid, joints resist
no tension and have unbounded compressive strength, and sliding obeys a
friction cone. Used as an oracle for the plateau of pushover curves and for
calibrating fixture geometry.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .arch_model import GROUND, UNIT_WEIGHT_SCALE, ModelMesh


def fiber_lever_fraction(n_f: int) -> float:
    """Largest eccentricity of a joint thrust, as a fraction of the joint length,
    when compression is carried by ``n_f`` equal fibers (centre of the last fiber)."""
    if n_f < 1:
        raise ValueError("n_f must be >= 1")
    return 0.5 - 0.5 / n_f


def collapse_load(mesh: ModelMesh, mu: float | None = None, sliding: bool = True, lever_fraction: float = 0.5) -> float:
    """Largest multiplier (kN) of the mesh's unit point load sustainable with self-weight.

    Unknowns per interface: normal force N (compression positive), shear V
    along e_xi and moment M about the interface midpoint. The thrust may act
    at most ``lever_fraction * length`` from the midpoint (0.5: edge of the
    joint; :func:`fiber_lever_fraction` matches a fiber discretisation).
    ``sliding=False`` removes the friction limit (Heyman's no-sliding
    assumption).
    """
    if not 0.0 < lever_fraction <= 0.5:
        raise ValueError("lever_fraction must lie in (0, 0.5]")
    n_itf = len(mesh.interfaces)
    n_var = 3 * n_itf + 1
    n_el = mesh.n_elements
    Aeq = np.zeros((3 * n_el, n_var))
    beq = np.zeros(3 * n_el)
    for i, itf in enumerate(mesh.interfaces):
        mid = 0.5 * (itf.start + itf.end)
        for e, sign in ((itf.q, 1.0), (itf.p, -1.0)):
            if e == GROUND:
                continue
            r = mid - mesh.elements[e].centroid
            rows = slice(3 * e, 3 * e + 3)
            # force on q from p: N e_eta + V e_xi, plus couple M
            for col, vec in ((3 * i, itf.e_eta), (3 * i + 1, itf.e_xi)):
                Aeq[rows, col] += sign * np.array([vec[0], vec[1], r[0] * vec[1] - r[1] * vec[0]])
            Aeq[3 * e + 2, 3 * i + 2] += sign
    for e, (el, mat) in enumerate(zip(mesh.elements, mesh.materials)):
        W = mat.w * UNIT_WEIGHT_SCALE * el.area * el.thickness if mesh.gravity else 0.0
        beq[3 * e + 1] += W  # interface forces balance the weight
    for load in mesh.point_loads:
        el = mesh.elements[load.element]
        r = np.asarray(load.point) - el.centroid
        dvec = np.asarray(load.direction, float) * load.magnitude * 1000.0
        Aeq[3 * load.element : 3 * load.element + 3, -1] += np.array([dvec[0], dvec[1], r[0] * dvec[1] - r[1] * dvec[0]])

    A_ub, b_ub = [], []
    for i, itf in enumerate(mesh.interfaces):
        half = lever_fraction * itf.length
        for s in (1.0, -1.0):
            row = np.zeros(n_var)
            row[3 * i + 2] = s
            row[3 * i] = -half
            A_ub.append(row)
            b_ub.append(0.0)
        if sliding:
            m = mu if mu is not None else min(mesh.materials[e].mu for e in (itf.p, itf.q) if e != GROUND)
            for s in (1.0, -1.0):
                row = np.zeros(n_var)
                row[3 * i + 1] = s
                row[3 * i] = -m
                A_ub.append(row)
                b_ub.append(0.0)
    bounds = []
    for _ in range(n_itf):
        bounds += [(0, None), (None, None), (None, None)]
    bounds.append((0, None))
    c = np.zeros(n_var)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub), A_eq=Aeq, b_eq=beq, bounds=bounds, method="highs")
    if res.status != 0:
        return 0.0 if res.status == 2 else float("nan")
    return float(res.x[-1])
