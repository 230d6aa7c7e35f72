"""Shear-deformable plate analysis in rescaled coordinates with NURBS elements.

Typical use::

    from fsdtiga import make_disk, solve_model, ClampedDisk
    sol, info = solve_model(make_disk(10.0, p=3, level=4))
    sol.at_points([0.0], [0.0])["u"]
"""
from .analytic import CantileverBeam, ClampedDisk, SimplySupportedBeam, SimplySupportedDisk, kirchhoff_gap
from .assembly import assemble, build_dofmap, element_load, element_stiffness
from .errors import ConfigurationError, DomainError, GeometryError, ModelError, NumericalError
from .geometry import (
    CLAMPED,
    FREE,
    SIMPLY_SUPPORTED,
    MultipatchModel,
    PhysicalCase,
    make_disk,
    make_rectangle,
    tag_edge,
    to_rescaled,
)
from .kernels import BACKEND
from .postprocess import SolutionField, convergence_study, l2_error, sample_line, strong_residual
from .solver import solve_linear, solve_model, solve_system

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CLAMPED",
    "FREE",
    "SIMPLY_SUPPORTED",
    "CantileverBeam",
    "ClampedDisk",
    "ConfigurationError",
    "DomainError",
    "GeometryError",
    "ModelError",
    "MultipatchModel",
    "NumericalError",
    "PhysicalCase",
    "SimplySupportedBeam",
    "SimplySupportedDisk",
    "SolutionField",
    "assemble",
    "build_dofmap",
    "convergence_study",
    "element_load",
    "element_stiffness",
    "kirchhoff_gap",
    "l2_error",
    "make_disk",
    "make_rectangle",
    "sample_line",
    "solve_linear",
    "solve_model",
    "solve_system",
    "strong_residual",
    "tag_edge",
    "to_rescaled",
]
