"""Damped Newton solver for variational equations on embedded manifolds."""

from .fem1d import (
    BandedMatrix,
    BlockTriDiag,
    Grid,
    NodalCurve,
    SingularSystem,
    solve_banded,
    solve_block_tridiagonal,
)
from .geometry import (
    DegenerateUpdate,
    SingularConstraint,
    TangentBasis,
    constrained_hessian_apply,
    normal_multiplier,
    retract_sphere,
    tangent_basis,
    tangent_project,
    tangent_project_deriv,
    transport_vector,
    unit_vector,
)
from .newton import (
    NewtonConfig,
    NewtonIteration,
    NewtonTrace,
    ProblemInterface,
    Termination,
    ZeroStep,
    compute_theta,
    damped_newton,
    newton_direction,
    norm_inf_nodal,
    simplified_rhs,
    update_alpha,
)
from . import problems

__all__ = [
    "BandedMatrix",
    "BlockTriDiag",
    "Grid",
    "NodalCurve",
    "SingularSystem",
    "solve_banded",
    "solve_block_tridiagonal",
    "DegenerateUpdate",
    "SingularConstraint",
    "TangentBasis",
    "constrained_hessian_apply",
    "normal_multiplier",
    "retract_sphere",
    "tangent_basis",
    "tangent_project",
    "tangent_project_deriv",
    "transport_vector",
    "unit_vector",
    "NewtonConfig",
    "NewtonIteration",
    "NewtonTrace",
    "ProblemInterface",
    "Termination",
    "ZeroStep",
    "compute_theta",
    "damped_newton",
    "newton_direction",
    "norm_inf_nodal",
    "simplified_rhs",
    "update_alpha",
    "problems",
]
