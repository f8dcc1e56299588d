"""Boundary controls steering the 1-D heat equation to analytic targets.

The public entry points are :func:`synthesize` for two-sided controls,
:func:`one_sided` for odd targets controlled at one end, and the ``heatreach``
command line tool.
"""
from .carleman import carleman_report, eigen_solution, observability_ratio
from .chebyshev import Density, PowerSeriesTarget, invert_k0
from .contour import ContourSpec, build_contour, select_p, verify_contour
from .errors import (AccuracyError, BranchCutError, CapabilityError, ConsistencyError, DomainError,
                     HeatReachError, InvalidArgument, LayoutMismatch, NumericalFailure, PreconditionError)
from .heatflow import BoundaryControls, HeatState, eval_w, eval_w0, make_source, simulate_forward
from .hum import HUMProblem, duality_pairing_check, functional_J, minimize_J
from .kernels import apply_k0, apply_k_alpha, decompose
from .numerics import SpaceGrid, TimeGrid, composite_rule, gauss_legendre
from .pipeline import RunConfig, one_sided, spectral_membership, synthesize, verify_reach

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "BoundaryControls", "BranchCutError", "CapabilityError", "ConsistencyError",
    "ContourSpec", "Density", "DomainError", "HUMProblem", "HeatReachError", "HeatState",
    "InvalidArgument", "LayoutMismatch", "NumericalFailure", "PowerSeriesTarget", "PreconditionError",
    "RunConfig", "SpaceGrid", "TimeGrid", "apply_k0", "apply_k_alpha", "build_contour",
    "carleman_report", "composite_rule", "decompose", "duality_pairing_check", "eigen_solution",
    "eval_w", "eval_w0", "functional_J", "gauss_legendre", "invert_k0", "make_source", "minimize_J",
    "observability_ratio", "one_sided", "select_p", "simulate_forward", "spectral_membership",
    "synthesize", "verify_contour", "verify_reach",
]
