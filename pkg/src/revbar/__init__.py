"""Persistence barcodes and closed geodesics for surfaces of revolution."""

from .bottleneck import (
    Matching,
    bottleneck_distance,
    exhaustive_interleaving_threshold,
    interleaving_check,
    lower_bound_opt_matching,
    matching_feasible,
)
from .constructions import (
    BulkedSphereParams,
    MultiBulkedParams,
    bulked_sphere_profile,
    comparison_constants,
    embed_A,
    embed_L,
    embed_Q,
    family_profile,
    metric_dominates,
    multi_bulked_profile,
    profile_ratio,
    rbm_upper_bound,
    torus_profile,
    volume_and_diameter,
)
from .loop_barcode import class_barcode, infer_barcode, reparametrize, stability_chain_check
from .persistence_core import Bar, Barcode, FinitePM, PMorphism, bar_window, exist_geodesic_windows
from .profiles import ProfileFunction
from .revolution_geodesics import (
    ClosedGeodesic,
    census_class_alpha,
    flow_oscillation,
    integrate_flow,
    jacobi_parallel,
    theta_shift,
)

__version__ = "0.1.0"

__all__ = [
    "Matching",
    "bottleneck_distance",
    "exhaustive_interleaving_threshold",
    "interleaving_check",
    "lower_bound_opt_matching",
    "matching_feasible",
    "BulkedSphereParams",
    "MultiBulkedParams",
    "bulked_sphere_profile",
    "comparison_constants",
    "embed_A",
    "embed_L",
    "embed_Q",
    "family_profile",
    "metric_dominates",
    "multi_bulked_profile",
    "profile_ratio",
    "rbm_upper_bound",
    "torus_profile",
    "volume_and_diameter",
    "ClosedGeodesic",
    "census_class_alpha",
    "flow_oscillation",
    "integrate_flow",
    "jacobi_parallel",
    "theta_shift",
    "class_barcode",
    "infer_barcode",
    "reparametrize",
    "stability_chain_check",
    "Bar",
    "Barcode",
    "FinitePM",
    "PMorphism",
    "bar_window",
    "exist_geodesic_windows",
    "ProfileFunction",
]
