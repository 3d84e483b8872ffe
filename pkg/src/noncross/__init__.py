"""Boundary non-crossing probabilities of additive Wiener fields on a grid.

Modules: ``grid`` (nodes and fields), ``rkhs`` (trend space), ``cones``
(projections onto V1 / V2 / V2+), ``field_sim`` (Monte Carlo), ``bounds``
(analytic bounds and large-deviation fits), ``cli``.
"""

from .bounds import (
    BoundReport,
    ConditionReport,
    LDResult,
    Status,
    alpha_from_p0,
    check_theorem1_conditions,
    ld_slope,
    li_kuelbs_delta,
    sandwich_bounds,
    stieltjes_1d,
    stieltjes_2d,
    theorem1_upper_bound,
)
from .catalog import builtin_boundary, builtin_trend
from .cones import (
    ConeId,
    ConvergenceError,
    ProjectionResult,
    check_cone_membership,
    polar_verify,
    project,
    project_v1,
    project_v2,
    project_v2plus,
)
from .field_sim import (
    CrossingEstimate,
    FieldSample,
    Method,
    estimate_axis,
    estimate_importance,
    estimate_plain,
    oracle_1d,
    sample_field,
    sample_fields,
    verify_ibp,
)
from .grid import DomainError, GridError, GridField, GridSpec, decompose_trend, make_grid, recompose
from .rkhs import AdditiveRkhsFn, H1Fn, H2Fn, differentiate, reconstruct, to_rkhs

__version__ = "0.1.0"
