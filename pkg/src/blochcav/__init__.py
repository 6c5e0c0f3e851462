"""Bloch-wave dispersion for periodic media with small sound-soft cavities.

Pipeline: mesh the unit-scale cavity (geometry), solve the exterior unit
potential problem for its shape coefficient q (capacitance), evaluate the
closed-form leading-order dispersion, cutoffs and cluster structure
(dispersion), and cross-validate against an exactly solvable point-scatterer
lattice (oracle).  The CLI in blochcav.cli ties these together.
"""

from ._kernels import BACKEND as kernel_backend
from .capacitance import (CapacitanceSolution, RichardsonResult,
                          assemble_single_layer, potential_at, richardson_q,
                          solve_capacitance)
from .dispersion import (ClusterBranch, CutoffData, InfeasibilityReport,
                         MediumParams, ShiftOrder, bloch_field,
                         cluster_J_spectrum, cutoff, dispersion_clusters,
                         dispersion_nonexceptional, helmert_basis,
                         near_exceptional_warning,
                         single_direction_infeasibility)
from .errors import BlochcavError, NumericsError, ValidationError
from .geometry import (SurfaceMesh, dump_off, dumps_off, load_off, loads_off,
                       make_ellipsoid_mesh, make_sphere_mesh, subdivide)
from .lattice import (DEFAULT_EXCEPTIONAL_TOL, ExceptionalSet, Lattice,
                      ReciprocalPoint, distance_to_exceptional,
                      enumerate_exceptional, make_lattice)
from .oracle import (LatticeSumContext, ValidationReport, make_context,
                     oracle_dispersion_root, oracle_validation_suite,
                     regularized_green, residue_at, residue_count)

__version__ = "0.1.0"

__all__ = [
    "kernel_backend",
    "BlochcavError", "ValidationError", "NumericsError",
    "Lattice", "ReciprocalPoint", "ExceptionalSet",
    "make_lattice", "enumerate_exceptional", "distance_to_exceptional",
    "DEFAULT_EXCEPTIONAL_TOL",
    "SurfaceMesh", "make_sphere_mesh", "make_ellipsoid_mesh", "subdivide",
    "load_off", "loads_off", "dump_off", "dumps_off",
    "CapacitanceSolution", "RichardsonResult", "assemble_single_layer",
    "solve_capacitance", "potential_at", "richardson_q",
    "MediumParams", "ShiftOrder", "ClusterBranch", "CutoffData",
    "InfeasibilityReport", "dispersion_nonexceptional", "dispersion_clusters",
    "cluster_J_spectrum", "cutoff", "bloch_field",
    "single_direction_infeasibility", "helmert_basis",
    "near_exceptional_warning",
    "LatticeSumContext", "make_context", "regularized_green",
    "oracle_dispersion_root", "residue_at", "residue_count",
    "oracle_validation_suite", "ValidationReport",
]
