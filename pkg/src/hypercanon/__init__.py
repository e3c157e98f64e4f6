"""Period matrices, canonical metric and curvature of hyperelliptic curves."""

from .curve import CurveModel, point_branch, point_inf, point_x
from .metric import MetricEvaluator, curvature, rho, surface_area, total_curvature
from .periods import QuadratureConfig, compute_riemann_matrix

__version__ = "0.1.0"

__all__ = [
    "CurveModel",
    "MetricEvaluator",
    "QuadratureConfig",
    "compute_riemann_matrix",
    "curvature",
    "point_branch",
    "point_inf",
    "point_x",
    "rho",
    "surface_area",
    "total_curvature",
]
