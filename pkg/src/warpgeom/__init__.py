"""Numerical verification of Ricci-soliton statements on warped products."""

__version__ = "0.1.0"

from .expr import Expr, parse, fd_jet2_batch
from .manifold import (
    ChartManifold, CoordVectorField, ScalarField, SamplePlan,
    euclidean, sphere_chart, hyperbolic_chart, interval,
)
from .warped import WarpedProduct, LiftedField, build_warped
from .tolerances import Tolerances, DEFAULT as DEFAULT_TOLERANCES
from .suites import Instance, verify_suite, run_operation
from .manifest import load_manifest

__all__ = [
    "Expr", "parse", "fd_jet2_batch",
    "ChartManifold", "CoordVectorField", "ScalarField", "SamplePlan",
    "euclidean", "sphere_chart", "hyperbolic_chart", "interval",
    "WarpedProduct", "LiftedField", "build_warped",
    "Tolerances", "DEFAULT_TOLERANCES", "Instance", "verify_suite", "run_operation",
    "load_manifest", "__version__",
]
