"""Steady length functional along exact Ricci flows.

Geometry kernel (:mod:`geom`), closed-form flows (:mod:`flows`), curves and
geodesics of the length functional (:mod:`lgeo`), the distance ``L`` and its
derivatives (:mod:`lfunc`), the verification harness (:mod:`verify`) and a
config-driven runner (:mod:`cli`).
"""

from .exceptions import (
    BVPFailure,
    ConjugatePointError,
    DegenerateMetricError,
    InvalidParameterError,
    NotComputableError,
    OutOfDomainError,
    SteadyLengthError,
    UnsupportedFlowError,
)
from .geom import GeometryData, MetricFamily, covariant_derivative, eval_geometry, eval_geometry_batch, fd_geometry
from .flows import FlowSpec, make_flow, sample_pairs, verify_flow
from .curves import Curve, VariationField
from .lgeo import (
    LGeodesic,
    TransportMap,
    el_residual,
    integrate_geodesic,
    jacobi_solve,
    lagrangian,
    solve_bvp,
    transport,
    transported_field,
)
from .lfunc import (
    EndpointPair,
    LData,
    box_operator,
    distance,
    h_term,
    h_trace,
    hessian_mm,
    hessian_mm_fd,
    second_variation,
    trace_check,
)
from .verify import (
    GridSpec,
    InequalityReport,
    MonotonicityTrace,
    check_inequalities,
    fd_crosscheck,
    monotonicity_scan,
    saturation_residual,
)

__version__ = "0.1.0"
