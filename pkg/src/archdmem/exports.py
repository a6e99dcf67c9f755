"""Plot-ready CSV exports of analysis results.

Every file has a header row with units in the column names and a fixed
column order. Numbers are written with 6 significant digits unless
``full_precision`` is set, in which case the shortest round-tripping
representation is used. Output depends only on the input data, so repeated
runs produce identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .arch_model import GROUND, ModelMesh
from .kinematics import vertex_map
from .solver import CapacityCurve, Hinge, ModalResult, Snapshot, Structure, detect_hinges

DOF_NAMES = ("U", "V", "Phi", "Gamma")


def fmt(value, full_precision: bool = False) -> str:
    """Format one CSV cell: floats to 6 significant digits, everything else via ``str``."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return repr(v) if full_precision else f"{v:.6g}"
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], full_precision: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v, full_precision) for v in row])
    return path


def write_capacity_curve(path, curve: CapacityCurve, full_precision: bool = False) -> Path:
    rows = ((k, u, F, R) for k, (u, F, R) in enumerate(zip(curve.displacement, curve.load, curve.base_reaction)))
    return write_csv(path, ("step", "displacement_mm", "load_kN", "base_reaction_kN"), rows, full_precision)


def write_modal(path, modal: ModalResult, full_precision: bool = False) -> Path:
    rows = ((k + 1, f, 1.0 / f) for k, f in enumerate(modal.frequencies))
    return write_csv(path, ("mode", "frequency_Hz", "period_s"), rows, full_precision)


def write_hinge_timeline(path, timeline: list, full_precision: bool = False) -> Path:
    rows = ((i, step, u, kind, side or "") for i, step, u, kind, side in timeline)
    return write_csv(path, ("interface", "step", "displacement_mm", "kind", "side"), rows, full_precision)


def write_hinges(path, hinges: Sequence[Hinge], full_precision: bool = False) -> Path:
    rows = ((h.interface, h.kind, h.side or "", h.open_fraction, h.slip, " ".join(map(str, h.zone))) for h in hinges)
    return write_csv(path, ("interface", "kind", "side", "open_fraction", "slip_mm", "zone_interfaces"), rows, full_precision)


def write_damage_map(path, s: Structure, snap: Snapshot, full_precision: bool = False) -> Path:
    """Per-fiber state: abscissa, normal force, opening, largest opening and broken flags."""
    rows = []
    fiber = 0
    for i, itf in enumerate(s.mesh.interfaces):
        for j in range(itf.n_f):
            rows.append(
                (
                    i,
                    j,
                    float(s.xi[fiber]),
                    float(snap.f_v[fiber]) / 1000.0,
                    float(snap.opening[fiber]),
                    float(snap.u_max_t[fiber]),
                    bool(snap.broken_t[fiber]),
                    bool(snap.broken_c[fiber]),
                    float(snap.u_p[i]),
                )
            )
            fiber += 1
    header = ("interface", "fiber", "xi", "normal_force_kN", "opening_mm", "max_opening_mm", "broken_tension", "broken_compression", "interface_slip_mm")
    return write_csv(path, header, rows, full_precision)


def write_mechanism(path, mode: np.ndarray, full_precision: bool = False) -> Path:
    """Collapse-mechanism vector by element DOF, scaled to unit largest component."""
    mode = np.asarray(mode, float)
    peak = float(np.max(np.abs(mode))) if mode.size else 0.0
    if peak > 0:
        mode = mode / peak
        # fixed sign convention: the largest component is positive
        if mode[int(np.argmax(np.abs(mode)))] < 0:
            mode = -mode
    rows = ((k // 4, DOF_NAMES[k % 4], float(v)) for k, v in enumerate(mode))
    return write_csv(path, ("element", "dof", "amplitude"), rows, full_precision)


def deformed_vertices(mesh: ModelMesh, d: np.ndarray) -> np.ndarray:
    """Vertex displacements ``(n_elements, 4, 2)`` in mm for element parameters ``d``."""
    out = np.empty((mesh.n_elements, 4, 2))
    for e, el in enumerate(mesh.elements):
        de = d[4 * e : 4 * e + 4]
        for v in range(4):
            out[e, v] = vertex_map(el, v + 1) @ de
    return out


def write_deformed_shape(path, mesh: ModelMesh, d: np.ndarray, magnification: float = 100.0, full_precision: bool = False) -> Path:
    """Vertex coordinates, displacements and magnified deformed coordinates."""
    disp = deformed_vertices(mesh, d)
    rows = []
    for e, el in enumerate(mesh.elements):
        for v in range(4):
            x, y = el.vertices[v]
            ux, uy = disp[e, v]
            rows.append((e, v + 1, float(x), float(y), float(ux), float(uy), float(x + magnification * ux), float(y + magnification * uy)))
    header = ("element", "vertex", "x_mm", "y_mm", "ux_mm", "uy_mm", "x_deformed_mm", "y_deformed_mm")
    return write_csv(path, header, rows, full_precision)


def write_mesh(out_dir, mesh: ModelMesh, full_precision: bool = False) -> list[Path]:
    """Element vertices and interface end points of a mesh."""
    out_dir = Path(out_dir)
    elements = []
    for e, el in enumerate(mesh.elements):
        for v in range(4):
            elements.append((e, v + 1, float(el.vertices[v, 0]), float(el.vertices[v, 1]), el.thickness))
    side = lambda e: "ground" if e == GROUND else e  # noqa: E731
    interfaces = [
        (i, side(itf.p), itf.edge_p or "", side(itf.q), itf.edge_q or "", *map(float, itf.start), *map(float, itf.end), itf.n_f)
        for i, itf in enumerate(mesh.interfaces)
    ]
    return [
        write_csv(out_dir / "mesh_elements.csv", ("element", "vertex", "x_mm", "y_mm", "thickness_mm"), elements, full_precision),
        write_csv(
            out_dir / "mesh_interfaces.csv",
            ("interface", "p", "edge_p", "q", "edge_q", "x_start_mm", "y_start_mm", "x_end_mm", "y_end_mm", "n_f"),
            interfaces,
            full_precision,
        ),
    ]


def write_hinges_at_steps(out_dir, s: Structure, snapshots: Sequence[Snapshot], steps, full_precision: bool = False) -> list[Path]:
    """``hinges_step_<k>.csv`` for each requested step ``k`` that has a snapshot."""
    by_step = {snap.step: snap for snap in snapshots}
    return [write_hinges(Path(out_dir) / f"hinges_step_{k}.csv", detect_hinges(s, by_step[k]), full_precision) for k in steps if k in by_step]
