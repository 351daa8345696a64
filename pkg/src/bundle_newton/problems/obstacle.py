"""Obstacle-avoiding geodesics via a quadratic (Moreau-Yosida) penalty.

The curve must stay below the polar cap ``y3 <= 1 - h_ref``.  Violations
are penalized quadratically; the resulting stationarity condition is only
Newton-differentiable, and the penalty weight is driven up by a simple
path-following loop with warm starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..fem1d import Grid, NodalCurve
from ..newton import NewtonConfig, NewtonTrace, Termination, damped_newton
from .curve import SphereCurveProblem

# feasible defaults whose connecting geodesic crosses the default caps
DEFAULT_GAMMA0 = (0.8, 0.0, 0.6)
DEFAULT_GAMMAT = (-0.8 * np.cos(0.2), 0.8 * np.sin(0.2), 0.6)

_E3 = np.array([0.0, 0.0, 1.0])
_E33 = np.outer(_E3, _E3)


def penalty_activation(x: float) -> float:
    """``max(0, x)``, the scalar penalty kernel."""
    return x if x > 0.0 else 0.0


def penalty_activation_slope(x: float) -> float:
    """Newton-derivative of ``max(0, x)``; the kink value is fixed to 0."""
    return 1.0 if x > 0.0 else 0.0


class ObstacleProblem(SphereCurveProblem):
    """Penalized geodesic problem below the polar cap ``y3 <= 1 - h_ref``."""

    def __init__(
        self,
        grid: Grid,
        gamma0=None,
        gammaT=None,
        h_ref: float = 0.1,
        p: float = 1.0,
        p_growth: float = 1.2,
        violation_tol: float = 1e-3,
    ):
        super().__init__(
            grid,
            DEFAULT_GAMMA0 if gamma0 is None else gamma0,
            DEFAULT_GAMMAT if gammaT is None else gammaT,
        )
        if not 0.0 < h_ref < 1.0:
            raise ValueError("h_ref must lie in (0, 1)")
        if p < 0.0:
            raise ValueError("penalty weight must be nonnegative")
        self.h_ref = float(h_ref)
        self.p = float(p)
        self.p_growth = float(p_growth)
        self.violation_tol = float(violation_tol)

    def gap(self, y) -> float:
        """Constraint value ``y3 - 1 + h_ref``; positive above the cap."""
        return float(y[2] - 1.0 + self.h_ref)

    def with_penalty(self, p: float) -> "ObstacleProblem":
        return ObstacleProblem(
            self.grid,
            self.gamma0,
            self.gammaT,
            h_ref=self.h_ref,
            p=p,
            p_growth=self.p_growth,
            violation_tol=self.violation_tol,
        )

    def violation(self, curve: NodalCurve) -> float:
        """Largest nodal cap violation ``max_i max(0, gap(y_i))``."""
        return float(max(penalty_activation(self.gap(p)) for p in curve.points))

    # -- force interface -----------------------------------------------------

    def force_at(self, y) -> np.ndarray:
        return self.p * penalty_activation(self.gap(y)) * _E3

    def force_jacobian_at(self, y) -> np.ndarray:
        return self.p * penalty_activation_slope(self.gap(y)) * _E33


@dataclass(frozen=True)
class PenaltyStage:
    penalty: float
    violation: float
    trace: NewtonTrace


@dataclass
class PathFollowResult:
    curve: NodalCurve
    stages: list = field(default_factory=list)
    converged: bool = False
    message: str = ""

    @property
    def final_penalty(self) -> float:
        return self.stages[-1].penalty if self.stages else 0.0

    @property
    def violation(self) -> float:
        return self.stages[-1].violation if self.stages else float("nan")


def obstacle_path_follow(
    problem: ObstacleProblem,
    cfg: NewtonConfig = NewtonConfig(),
    initial: NodalCurve | None = None,
    max_stages: int = 500,
) -> PathFollowResult:
    """Penalty path following for the obstacle problem.

    Solves the penalty-free geodesic first; while the solution still violates
    the cap by more than ``problem.violation_tol``, the penalized problem is
    re-solved with the weight grown by ``problem.p_growth`` per stage, warm
    started from the previous stage.  A failed stage aborts with the curve of
    the last successful stage and a diagnostic message.
    """
    curve = problem.initial_curve() if initial is None else initial
    stages = []

    new_curve, trace = damped_newton(problem.with_penalty(0.0), curve, cfg)
    stages.append(PenaltyStage(0.0, problem.violation(new_curve), trace))
    if trace.terminated is not Termination.CONVERGED:
        return PathFollowResult(
            curve, stages, False, f"penalty-free geodesic solve failed: {trace.message}"
        )
    curve = new_curve

    p = problem.p
    while stages[-1].violation > problem.violation_tol:
        if len(stages) > max_stages:
            return PathFollowResult(
                curve, stages, False, f"no convergence within {max_stages} penalty stages"
            )
        new_curve, trace = damped_newton(problem.with_penalty(p), curve, cfg)
        if trace.terminated is not Termination.CONVERGED:
            stages.append(PenaltyStage(p, problem.violation(new_curve), trace))
            return PathFollowResult(
                curve,
                stages,
                False,
                f"stage with penalty {p:g} failed ({trace.terminated.value}): {trace.message}",
            )
        curve = new_curve
        stages.append(PenaltyStage(p, problem.violation(curve), trace))
        p *= problem.p_growth

    return PathFollowResult(curve, stages, True, "")
