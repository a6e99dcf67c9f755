"""JSON model files: schema, validation and conversion to solver inputs.

A model file has four required sections and one optional one::

    {
      "name": "...",
      "geometry": {"circular_arch": {...}} | {"elements": [...], "interfaces": [...]},
      "material": {...},
      "loads": {"gravity": true, "point_load": {"x_over_span": 0.25}},
      "analysis": {...},
      "reference": {"frequencies": [...]}          (optional)
    }

Units: lengths mm, forces kN, stresses MPa, unit weight kN/m^3, fracture
energies N/mm. Unbounded strengths and energies are written as ``"inf"``.
Structure is checked against :data:`MODEL_SCHEMA`; geometric feasibility
by :func:`archdmem.arch_model.validate_mesh`.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .arch_model import (
    GROUND,
    DiagonalShear,
    Material,
    MeshError,
    ModelMesh,
    PointLoad,
    build_circular_arch,
    compute_element_geometry,
    make_interface,
    validate_mesh,
    with_point_load,
)
from .solver import AnalysisProtocol, StructureOptions

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_NONNEG_OR_INF = {"oneOf": [_NONNEG, {"const": "inf"}]}
_POSITIVE_OR_INF = {"oneOf": [_POSITIVE, {"const": "inf"}]}
_POINT = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}

MODEL_SCHEMA: dict = {
    "type": "object",
    "required": ["geometry", "material", "loads", "analysis"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "circular_arch": {
                    "type": "object",
                    "required": ["inner_span", "inner_rise", "thickness", "width", "n_voussoirs"],
                    "additionalProperties": False,
                    "properties": {
                        "inner_span": _POSITIVE,
                        "inner_rise": _POSITIVE,
                        "thickness": _POSITIVE,
                        "width": _POSITIVE,
                        "n_voussoirs": {"type": "integer", "minimum": 3},
                    },
                },
                "elements": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["vertices", "thickness"],
                        "additionalProperties": False,
                        "properties": {
                            "vertices": {"type": "array", "items": _POINT, "minItems": 4, "maxItems": 4},
                            "thickness": _POSITIVE,
                        },
                    },
                },
                "interfaces": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["p", "q"],
                        "additionalProperties": False,
                        "properties": {
                            "p": {"oneOf": [{"type": "integer", "minimum": 0}, {"const": "ground"}]},
                            "q": {"oneOf": [{"type": "integer", "minimum": 0}, {"const": "ground"}]},
                            "edge_p": {"type": "integer", "minimum": 1, "maximum": 4},
                            "edge_q": {"type": "integer", "minimum": 1, "maximum": 4},
                        },
                    },
                },
                "n_f": {"type": "integer", "minimum": 2},
            },
            "oneOf": [{"required": ["circular_arch"]}, {"required": ["elements", "interfaces"]}],
        },
        "material": {
            "type": "object",
            "required": ["E"],
            "additionalProperties": False,
            "properties": {
                "E": _POSITIVE,
                "G_shear": _POSITIVE,
                "nu": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
                "f_t": _NONNEG,
                "f_m": _POSITIVE_OR_INF,
                "G_t": _NONNEG_OR_INF,
                "G_m": _NONNEG_OR_INF,
                "c": _NONNEG,
                "mu": _NONNEG,
                "G_s": _NONNEG_OR_INF,
                "w": _NONNEG,
                "diagonal_shear": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["none", "mohr-coulomb", "turnsek-cacovic"]},
                        "cohesion": _NONNEG,
                        "friction": _NONNEG,
                        "tau0": _NONNEG,
                        "b": _POSITIVE,
                    },
                },
            },
        },
        "loads": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gravity": {"type": "boolean"},
                "point_load": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "x_over_span": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        "element": {"type": "integer", "minimum": 0},
                        "point": _POINT,
                        "direction": _POINT,
                    },
                    "oneOf": [{"required": ["x_over_span"]}, {"required": ["element", "point"]}],
                },
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_modes": {"type": "integer", "minimum": 0},
                "gravity_steps": {"type": "integer", "minimum": 1},
                "target_displacement": _NONNEG,
                "step": _POSITIVE,
                "criterion": _NONNEG,
                "tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.01},
                "max_iter": {"type": "integer", "minimum": 1},
                "rigid_shear": {"type": "boolean"},
                "penalty_factor": _POSITIVE,
                "residual_window": _POSITIVE,
            },
        },
        "reference": {
            "type": "object",
            "properties": {
                "frequencies": {"type": "array", "items": _POSITIVE},
                "peak_load": _POSITIVE,
                "residual_load": _POSITIVE,
            },
        },
    },
}

DEFAULT_ANALYSIS: dict = {
    "n_modes": 4,
    "gravity_steps": 10,
    "target_displacement": 10.0,
    "criterion": 10.0,
    "tol": 1e-6,
    "max_iter": 50,
    "rigid_shear": False,
    "penalty_factor": 1.0,
    "residual_window": 0.5,
}

FIXTURE_DIR = Path(__file__).with_name("fixtures")


class ModelFileError(ValueError):
    """Unreadable or invalid model file; ``diagnostics`` lists one message per problem."""

    def __init__(self, source: str, diagnostics: list[str]):
        self.source = source
        self.diagnostics = list(diagnostics)
        super().__init__(f"{source}: " + "; ".join(self.diagnostics))


@dataclass
class Model:
    """A parsed model: the mesh with its loads plus the analysis settings."""

    mesh: ModelMesh
    analysis: dict
    reference: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    name: str = ""

    @property
    def protocol(self) -> AnalysisProtocol:
        a = self.analysis
        return AnalysisProtocol(
            gravity_steps=a["gravity_steps"],
            target_displacement=a["target_displacement"],
            step=a.get("step"),
            tol=a["tol"],
            max_iter=a["max_iter"],
        )

    @property
    def options(self) -> StructureOptions:
        return StructureOptions(penalty_factor=self.analysis["penalty_factor"], rigid_shear=self.analysis["rigid_shear"])


def fixture_path(name: str) -> Path:
    """Path of a bundled model file (``"ramos_arch"`` or ``"drosopoulos_bridge"``)."""
    path = FIXTURE_DIR / (name if name.endswith(".json") else name + ".json")
    if not path.exists():
        raise FileNotFoundError(path)
    return path


def _field(path) -> str:
    return "/".join(str(p) for p in path) or "<root>"


def schema_diagnostics(data: Any) -> list[str]:
    """Schema violations as ``field: message`` strings, in a fixed order."""
    validator = jsonschema.Draft202012Validator(MODEL_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    return [f"{_field(e.absolute_path)}: {e.message}" for e in errors]


def _number(value) -> float:
    return math.inf if value == "inf" else float(value)


def material_from_dict(d: dict) -> Material:
    ds = d.get("diagonal_shear")
    return Material(
        E=float(d["E"]),
        G_shear=None if d.get("G_shear") is None else float(d["G_shear"]),
        nu=float(d.get("nu", 0.25)),
        f_t=float(d.get("f_t", 0.0)),
        f_m=_number(d.get("f_m", "inf")),
        G_t=_number(d.get("G_t", "inf")),
        G_m=_number(d.get("G_m", "inf")),
        c=float(d.get("c", 0.0)),
        mu=float(d.get("mu", 0.6)),
        G_s=_number(d.get("G_s", "inf")),
        w=float(d.get("w", 0.0)),
        diagonal_shear=DiagonalShear(**ds) if ds else DiagonalShear(),
    )


def _build_geometry(geo: dict, material: Material) -> ModelMesh:
    n_f = geo.get("n_f", 20)
    if "circular_arch" in geo:
        ca = geo["circular_arch"]
        return build_circular_arch(ca["inner_span"], ca["inner_rise"], ca["thickness"], ca["width"], ca["n_voussoirs"], material, n_f)
    elements = []
    for k, el in enumerate(geo["elements"]):
        try:
            elements.append(compute_element_geometry(el["vertices"], el["thickness"]))
        except MeshError as exc:
            raise MeshError(f"geometry/elements/{k}: {exc}") from exc
    interfaces = []
    for k, itf in enumerate(geo["interfaces"]):
        p = GROUND if itf["p"] == "ground" else itf["p"]
        q = GROUND if itf["q"] == "ground" else itf["q"]
        where = f"geometry/interfaces/{k}"
        for side, e, edge in (("p", p, itf.get("edge_p")), ("q", q, itf.get("edge_q"))):
            if e != GROUND and not e < len(elements):
                raise MeshError(f"{where}/{side}: element {e} does not exist")
            if e != GROUND and edge is None:
                raise MeshError(f"{where}: edge_{side} is required for a non-ground side")
        try:
            interfaces.append(make_interface(elements, p, itf.get("edge_p"), q, itf.get("edge_q"), n_f))
        except MeshError as exc:
            raise MeshError(f"{where}: {exc}") from exc
    return ModelMesh(elements, [material] * len(elements), interfaces)


def model_from_dict(data: dict, source: str = "<model>") -> Model:
    """Validate ``data`` and build the :class:`Model`.

    Raises
    ------
    ModelFileError
        With one diagnostic per schema violation or mesh-invariant failure.
    """
    problems = schema_diagnostics(data)
    if problems:
        raise ModelFileError(source, problems)
    material = material_from_dict(data["material"])
    problems = [f"material: {m}" for m in material.violations()]
    if problems:
        raise ModelFileError(source, problems)
    try:
        mesh = _build_geometry(data["geometry"], material)
        loads = data.get("loads", {})
        gravity = loads.get("gravity", True)
        pl = loads.get("point_load")
        if pl is not None:
            direction = tuple(pl.get("direction", (0.0, -1.0)))
            if "x_over_span" in pl:
                mesh = with_point_load(mesh, pl["x_over_span"], direction)
            else:
                if pl["element"] >= mesh.n_elements:
                    raise MeshError(f"loads/point_load/element: element {pl['element']} does not exist")
                load = PointLoad(pl["element"], tuple(map(float, pl["point"])), direction, 1.0)
                mesh = ModelMesh(mesh.elements, mesh.materials, mesh.interfaces, gravity, [load], load, dict(mesh.meta))
        if not gravity:
            mesh = ModelMesh(mesh.elements, mesh.materials, mesh.interfaces, False, mesh.point_loads, mesh.monitored, dict(mesh.meta))
    except MeshError as exc:
        raise ModelFileError(source, [str(exc)]) from exc
    problems = validate_mesh(mesh)
    if problems:
        raise ModelFileError(source, problems)
    analysis = dict(DEFAULT_ANALYSIS)
    analysis.update(data.get("analysis", {}))
    return Model(mesh, analysis, dict(data.get("reference", {})), copy.deepcopy(data), data.get("name", ""))


def load_model(path, overrides: Optional[dict] = None) -> Model:
    """Read, validate and build a model file.

    ``overrides`` replaces entries of the ``analysis`` section (command-line
    flags take precedence over the file, which takes precedence over the
    defaults).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFileError(str(path), [f"cannot read file: {exc.strerror or exc}"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(str(path), [f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    if overrides:
        data = with_overrides(data, overrides)
    return model_from_dict(data, str(path))


def with_overrides(data: dict, overrides: dict) -> dict:
    """Copy of ``data`` whose analysis section is updated by the non-None ``overrides``."""
    out = copy.deepcopy(data)
    section = out.setdefault("analysis", {})
    if isinstance(section, dict):
        section.update({k: v for k, v in overrides.items() if v is not None})
    return out


# --------------------------------------------------------------------------- parameter edits


def set_thickness_ratio(data: dict, t_over_R: float) -> dict:
    """Copy of a circular-arch model with thickness ``t_over_R`` times the mean radius.

    The mean radius and the opening angle are kept; the intrados span and
    rise follow from the new thickness.
    """
    if "circular_arch" not in data["geometry"]:
        raise ValueError("t/R edits need a circular_arch geometry")
    if not 0 < t_over_R < 2:
        raise ValueError("t/R must lie in (0, 2)")
    ca = data["geometry"]["circular_arch"]
    s, r = ca["inner_span"], ca["inner_rise"]
    R_i = (0.25 * s * s + r * r) / (2.0 * r)
    half = math.asin(min(1.0, 0.5 * s / R_i))
    R = R_i + 0.5 * ca["thickness"]
    t = t_over_R * R
    R_i_new = R - 0.5 * t
    out = copy.deepcopy(data)
    out["geometry"]["circular_arch"].update(
        inner_span=2.0 * R_i_new * math.sin(half), inner_rise=R_i_new * (1.0 - math.cos(half)), thickness=t
    )
    return out


def set_parameter(data: dict, parameter: str, value: float) -> dict:
    """Copy of ``data`` with one sweep parameter changed.

    ``parameter`` is ``"mu"``, ``"f_t"``, ``"G_t"`` (material), ``"x_over_span"``
    (load position) or ``"t_over_R"`` (thickness ratio).
    """
    if parameter in ("mu", "f_t", "G_t"):
        out = copy.deepcopy(data)
        out["material"][parameter] = "inf" if math.isinf(value) else value
        return out
    if parameter == "x_over_span":
        out = copy.deepcopy(data)
        out.setdefault("loads", {})["point_load"] = {
            "x_over_span": value,
            **({"direction": data["loads"]["point_load"]["direction"]} if "direction" in data.get("loads", {}).get("point_load", {}) else {}),
        }
        return out
    if parameter == "t_over_R":
        return set_thickness_ratio(data, value)
    raise ValueError(f"unknown sweep parameter {parameter!r}")
