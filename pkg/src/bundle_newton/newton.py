"""Damped Newton driver for root problems whose residual lives in a moving
dual fibre.

The driver only talks to a problem through coefficient vectors: residuals
and Jacobians are assembled with respect to per-iterate bases, trial
residuals are back-transported onto the bases of the current iterate, and
the step-size control is driven by norm ratios of coefficient vectors.
Scaling residual and Jacobian jointly therefore leaves the whole iteration
unchanged (affine covariance).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla

from .fem1d import SingularSystem


class ZeroStep(Exception):
    """Contraction ratio requested for an exactly zero step."""


@dataclass(frozen=True)
class NewtonConfig:
    """Parameters of the damped Newton iteration.

    ``theta_acc = math.inf`` accepts every trial step and freezes the
    damping factor at ``alpha0``, which recovers the plain (undamped)
    Newton method for ``alpha0 = 1``.
    """

    tol: float = 1e-10
    theta_des: float = 0.5
    theta_acc: float = 0.9
    alpha0: float = 1.0
    alpha_fail: float = 1e-8
    max_outer: int = 50
    max_inner: int = 20

    def __post_init__(self):
        if not 0.0 < self.theta_des < self.theta_acc:
            raise ValueError("need 0 < theta_des < theta_acc")
        if not 0.0 < self.alpha_fail < self.alpha0 <= 1.0:
            raise ValueError("need 0 < alpha_fail < alpha0 <= 1")
        if self.tol <= 0.0 or self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("invalid iteration limits")


class Termination(Enum):
    CONVERGED = "converged"
    DAMPING_FAILED = "damping_failed"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class NewtonIteration:
    """Record of one accepted outer iteration."""

    norm_dx: float
    accepted_alpha: float
    thetas: tuple
    inner_trials: int
    residual_inf: float

    @property
    def theta_final(self) -> float:
        return self.thetas[-1] if self.thetas else 0.0


@dataclass
class NewtonTrace:
    iterations: list = field(default_factory=list)
    terminated: Termination = Termination.MAX_ITERATIONS
    message: str = ""

    @property
    def n_outer(self) -> int:
        return len(self.iterations)


class ProblemInterface(ABC):
    """Operations a problem supplies to the Newton driver.

    Coefficient vectors refer to the per-node bases of the state they were
    assembled at.  ``assemble_transported_residual(old, new)`` evaluates the
    residual at ``new`` against the test bases of ``old`` transported
    forward, so that its output is comparable with ``assemble_residual(old)``;
    at coincident states the two agree up to round-off.
    """

    @abstractmethod
    def assemble_residual(self, state) -> np.ndarray: ...

    @abstractmethod
    def assemble_jacobian(self, state): ...

    @abstractmethod
    def assemble_transported_residual(self, state_old, state_new) -> np.ndarray: ...

    @abstractmethod
    def retract(self, state, xi, alpha: float): ...

    @abstractmethod
    def norm_inf(self, xi) -> float: ...

    @property
    @abstractmethod
    def dof_count(self) -> int: ...


class _DenseFactorization:
    def __init__(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > 1e14:
            raise SingularSystem(f"dense system is near singular (cond {cond:.2e})")
        self._lu = sla.lu_factor(A)

    def solve(self, rhs):
        return sla.lu_solve(self._lu, np.asarray(rhs, dtype=float))


def factorize(A):
    """Factorize a Newton matrix for repeated right-hand side solves."""
    if hasattr(A, "factorize"):
        return A.factorize()
    return _DenseFactorization(A)


def newton_direction(A, b) -> np.ndarray:
    """Solve the Newton equation ``A xi + b = 0`` for the coefficients xi."""
    return factorize(A).solve(-np.asarray(b, dtype=float))


def simplified_rhs(r_transported, r_old, alpha: float) -> np.ndarray:
    """Right-hand side of the simplified Newton step at damping ``alpha``.

    The transported trial residual minus ``(1 - alpha)`` times the residual
    at the current iterate; it vanishes identically along the exact Newton
    path.
    """
    return np.asarray(r_transported, dtype=float) - (1.0 - alpha) * np.asarray(
        r_old, dtype=float
    )


def compute_theta(dx_bar, dx_scaled, norm_inf) -> float:
    """Contraction estimate ``|simplified step| / |alpha * Newton step|``."""
    denom = norm_inf(dx_scaled)
    if denom == 0.0:
        raise ZeroStep("scaled Newton step has zero norm; test convergence first")
    return norm_inf(dx_bar) / denom


def update_alpha(alpha: float, theta: float, theta_des: float) -> float:
    """Step-size update ``min(1, alpha * theta_des / theta)``."""
    return min(1.0, alpha * theta_des / theta)


def norm_inf_nodal(xi, bases) -> float:
    """Max over nodes of the Euclidean norm of the reconstructed tangent vector.

    ``bases`` is the per-node list of :class:`~bundle_newton.geometry.TangentBasis`
    objects; for orthonormal bases the result equals the max of the per-node
    coefficient 2-norms.
    """
    xi = np.asarray(xi, dtype=float)
    if len(xi) != 2 * len(bases):
        raise ValueError("coefficient vector does not match the per-node dof count")
    best = 0.0
    for k, basis in enumerate(bases):
        vec = xi[2 * k] * basis.v1 + xi[2 * k + 1] * basis.v2
        best = max(best, float(np.linalg.norm(vec)))
    return best


def damped_newton(problem: ProblemInterface, x0, cfg: NewtonConfig = NewtonConfig()):
    """Affine covariant damped Newton iteration.

    Per outer iteration the Newton system is assembled and factorized once;
    every inner trial re-solves only the right-hand side of the simplified
    Newton equation with the stored factorization.  A trial step of damping
    ``alpha`` is accepted when the contraction estimate ``theta`` stays below
    ``cfg.theta_acc``; ``alpha`` is adapted towards ``cfg.theta_des``.

    Returns ``(state, trace)``.  Convergence is certified at the start of an
    outer iteration once the Newton step drops below ``cfg.tol`` (a zero step
    occurs exactly at a root); damping failures and iteration limits are
    reported through ``trace.terminated`` rather than raised.
    """
    x = x0
    alpha = cfg.alpha0
    pin_alpha = math.isinf(cfg.theta_acc)
    trace = NewtonTrace()

    for _ in range(cfg.max_outer):
        b = problem.assemble_residual(x)
        residual_inf = float(np.max(np.abs(b))) if len(b) else 0.0
        A = problem.assemble_jacobian(x)
        fact = factorize(A)
        dx = fact.solve(-b)
        norm_dx = problem.norm_inf(dx)

        if norm_dx <= cfg.tol:
            trace.iterations.append(
                NewtonIteration(norm_dx, 1.0, (), 0, residual_inf)
            )
            trace.terminated = Termination.CONVERGED
            trace.message = "stationary within tolerance"
            return x, trace

        thetas = []
        accepted = False
        x_plus = None
        alpha_used = alpha
        theta = math.inf
        for _trial in range(cfg.max_inner):
            x_plus = problem.retract(x, dx, alpha)
            r_bar = problem.assemble_transported_residual(x, x_plus)
            dx_bar = fact.solve(-simplified_rhs(r_bar, b, alpha))
            theta = compute_theta(dx_bar, alpha * dx, problem.norm_inf)
            thetas.append(theta)
            alpha_used = alpha
            if not pin_alpha:
                alpha = 1.0 if theta == 0.0 else update_alpha(alpha, theta, cfg.theta_des)
                if alpha < cfg.alpha_fail:
                    trace.terminated = Termination.DAMPING_FAILED
                    trace.message = (
                        f"step size collapsed below {cfg.alpha_fail:g} "
                        f"after {len(thetas)} trials (last theta {theta:.3g})"
                    )
                    return x, trace
            if theta <= cfg.theta_acc:
                accepted = True
                break
        if not accepted:
            trace.terminated = Termination.DAMPING_FAILED
            trace.message = (
                f"no acceptable step within {cfg.max_inner} trials "
                f"(last theta {theta:.3g}, alpha {alpha:.3g})"
            )
            return x, trace

        x = x_plus
        trace.iterations.append(
            NewtonIteration(norm_dx, alpha_used, tuple(thetas), len(thetas), residual_inf)
        )

    trace.terminated = Termination.MAX_ITERATIONS
    trace.message = f"no convergence within {cfg.max_outer} outer iterations"
    return x, trace
