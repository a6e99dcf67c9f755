"""Discrete macro-element method for plane masonry arches.

Modules
-------
arch_model      geometry, materials and mesh generation
kinematics      element parameters to interface displacements
constitutive    fiber, sliding and diagonal-shear laws
interface_mech  fiber calibration and interface forces
element_mech    shear-distortion stiffness, mass and self-weight
solver          assembly, modal and pushover analysis, hinge detection
limit_analysis  rigid-block collapse-load oracle
studies         reductions of parametric sweeps (plateau, critical friction, R^2)
model_io        JSON model files
exports         CSV outputs
cli             command-line front end
"""

from .arch_model import Material, ModelMesh, build_circular_arch, validate_mesh, with_point_load
from .model_io import Model, load_model, fixture_path
from .solver import AnalysisProtocol, StructureOptions, run_static, solve_modal

__all__ = [
    "AnalysisProtocol",
    "Material",
    "Model",
    "ModelMesh",
    "StructureOptions",
    "build_circular_arch",
    "fixture_path",
    "load_model",
    "run_static",
    "solve_modal",
    "validate_mesh",
    "with_point_load",
]
__version__ = "0.1.0"
