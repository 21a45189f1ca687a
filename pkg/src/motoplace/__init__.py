"""Mixed-integer placement of powertrain components in electric motorcycles."""

from motoplace.builder import BuildOptions, assemble, extract_placement, lift_placement
from motoplace.cog_region import DriveCycle, VehicleParams, ideal_cog, inactive_region
from motoplace.geometry import AngleScheme, Circle, DesignSpace, Rect
from motoplace.solver import SolveLimits, SolveResult, branch_and_bound
from motoplace.topology import ElementSpec, Placement, Topology
from motoplace.verify import VerificationReport, verify

__version__ = "0.1.0"

__all__ = [
    "AngleScheme",
    "BuildOptions",
    "Circle",
    "DesignSpace",
    "DriveCycle",
    "ElementSpec",
    "Placement",
    "Rect",
    "SolveLimits",
    "SolveResult",
    "Topology",
    "VehicleParams",
    "VerificationReport",
    "assemble",
    "branch_and_bound",
    "extract_placement",
    "ideal_cog",
    "inactive_region",
    "lift_placement",
    "verify",
]
