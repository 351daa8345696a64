"""Built-in benchmark problems for the damped Newton driver."""

from .curve import SphereCurveProblem, connecting_geodesic_points
from .geodesic import (
    GeodesicForceProblem,
    PoleSingularity,
    winding_force,
    winding_force_deriv,
    winding_force_jacobian,
)
from .obstacle import (
    ObstacleProblem,
    PathFollowResult,
    PenaltyStage,
    obstacle_path_follow,
    penalty_activation,
    penalty_activation_slope,
)
from .rod import RodProblem, RodState, rod_initial_guess

__all__ = [
    "SphereCurveProblem",
    "connecting_geodesic_points",
    "GeodesicForceProblem",
    "PoleSingularity",
    "winding_force",
    "winding_force_deriv",
    "winding_force_jacobian",
    "ObstacleProblem",
    "PathFollowResult",
    "PenaltyStage",
    "obstacle_path_follow",
    "penalty_activation",
    "penalty_activation_slope",
    "RodProblem",
    "RodState",
    "rod_initial_guess",
]
