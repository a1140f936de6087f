"""Cusp excursions of geodesics in hyperbolic 2- and 3-orbifolds."""

__version__ = "0.1.0"

from .hypgeom import (
    BoundaryPoint,
    DegenerateEndpoints,
    Geodesic,
    InteriorPoint,
    Isometry,
    TangentVector,
    closest_point_projection,
    distance_to_geodesic,
    geodesic_between,
    geodesic_from_tangent,
    hyp_distance,
)
from .lattice import GroupElement, GroupPreset, load_custom_group, preset
from .horoworld import (
    EndpointInHoroballClosure,
    ExcursionRecord,
    FiniteHoroballCollection,
    Horoball,
    HoroballCollection,
    NotDisjoint,
    WindowEndpointInHoroball,
    enumerate_horoballs,
    excursion,
    horoball_distance,
    min_separation,
)
from .samplers import (
    NotConverged,
    RaySample,
    StepMeasure,
    TwoSidedPath,
    default_measure,
    estimate_drift,
    estimate_return_time_tail,
    sample_lebesgue_direction,
    sample_rw_ray,
    sample_two_sided,
    sample_walk,
)
from .excursion import (
    ExcursionSeries,
    birkhoff_average,
    birkhoff_target,
    excursion_sum,
    f_k_observable,
    rho_series,
    step_excursion,
    thick_distance,
)

__all__ = [
    "BoundaryPoint",
    "DegenerateEndpoints",
    "EndpointInHoroballClosure",
    "ExcursionRecord",
    "ExcursionSeries",
    "FiniteHoroballCollection",
    "Geodesic",
    "GroupElement",
    "GroupPreset",
    "Horoball",
    "HoroballCollection",
    "InteriorPoint",
    "Isometry",
    "NotConverged",
    "NotDisjoint",
    "RaySample",
    "StepMeasure",
    "TangentVector",
    "TwoSidedPath",
    "WindowEndpointInHoroball",
    "birkhoff_average",
    "birkhoff_target",
    "closest_point_projection",
    "default_measure",
    "distance_to_geodesic",
    "enumerate_horoballs",
    "estimate_drift",
    "estimate_return_time_tail",
    "excursion",
    "excursion_sum",
    "f_k_observable",
    "geodesic_between",
    "geodesic_from_tangent",
    "horoball_distance",
    "hyp_distance",
    "load_custom_group",
    "min_separation",
    "preset",
    "rho_series",
    "sample_lebesgue_direction",
    "sample_rw_ray",
    "sample_two_sided",
    "sample_walk",
    "step_excursion",
    "thick_distance",
]
