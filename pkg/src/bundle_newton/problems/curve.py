"""Shared machinery of the sphere-curve problems.

A curve problem looks for a piecewise-linear curve of unit vectors whose
Dirichlet stiffness balances a nodal force covector field.  Subclasses only
provide the force field and its Euclidean Jacobian; residual and Jacobian
assembly in per-node tangent bases, the projection transport of test
functions, the pointwise retraction and the nodal max-norm are shared.
"""

from __future__ import annotations

import numpy as np

from ..fem1d import (
    Grid,
    NodalCurve,
    assemble_intervals,
    assemble_intervals_vector,
)
from ..geometry import DegenerateUpdate, retract_sphere, tangent_basis, unit_vector
from ..newton import ProblemInterface


def connecting_geodesic_points(grid: Grid, a, b) -> np.ndarray:
    """Great-circle arc from ``a`` to ``b`` sampled at the grid nodes."""
    a = unit_vector(a)
    b = unit_vector(b)
    cosw = float(np.clip(a @ b, -1.0, 1.0))
    omega = np.arccos(cosw)
    s = grid.nodes / grid.t_end
    if np.sin(omega) <= 1e-12:
        if cosw < 0.0:
            raise DegenerateUpdate(
                "antipodal boundary points have no unique connecting geodesic"
            )
        pts = np.tile(a, (grid.n_nodes, 1))
    else:
        pts = (
            np.outer(np.sin((1.0 - s) * omega), a) + np.outer(np.sin(s * omega), b)
        ) / np.sin(omega)
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts[0] = a
    pts[-1] = b
    return pts


def _connection_block(y, g) -> np.ndarray:
    """Bilinear form ``(u, dv) -> <g, -y<dv,u> - dv<y,u>>`` as a 3x3 matrix."""
    return -(g @ y) * np.eye(3) - np.outer(y, g)


class SphereCurveProblem(ProblemInterface):
    """Base class implementing the Newton driver contract for curve problems."""

    def __init__(self, grid: Grid, gamma0, gammaT):
        self.grid = grid
        self.gamma0 = unit_vector(gamma0)
        self.gammaT = unit_vector(gammaT)
        if np.linalg.norm(self.gamma0 + self.gammaT) <= 1e-12:
            raise ValueError("boundary points must not be exactly antipodal")

    # -- force interface, provided by subclasses ---------------------------

    def force_at(self, y) -> np.ndarray:
        """Coefficients of the force covector at the point ``y``."""
        raise NotImplementedError

    def force_jacobian_at(self, y) -> np.ndarray:
        """3x3 Euclidean Jacobian of the force covector field at ``y``."""
        raise NotImplementedError

    # -- states and bases ---------------------------------------------------

    @property
    def dof_count(self) -> int:
        return 2 * self.grid.n_interior

    def initial_curve(self) -> NodalCurve:
        """Connecting geodesic between the boundary points."""
        return NodalCurve(self.grid, connecting_geodesic_points(self.grid, self.gamma0, self.gammaT))

    def bases(self, curve: NodalCurve):
        """Tangent bases at the interior nodes."""
        return [tangent_basis(p) for p in curve.interior]

    def _contraction(self, bases) -> np.ndarray:
        """(N, 2, 3) array mapping Euclidean covectors to dof coefficients."""
        return np.stack([b.matrix.T for b in bases])

    def _nodal_forces(self, points) -> np.ndarray:
        """Force covectors at all nodes; boundary rows are zero (no dofs)."""
        w = np.zeros_like(points)
        for i in range(1, len(points) - 1):
            w[i] = self.force_at(points[i])
        return w

    def _residual_kernel(self, points, forces):
        h = self.grid.h
        half_h = 0.5 * h

        def kernel(i):
            slope = (points[i + 1] - points[i]) / h
            return (-slope + half_h * forces[i], slope + half_h * forces[i + 1])

        return kernel

    # -- driver contract ----------------------------------------------------

    def assemble_residual(self, curve: NodalCurve) -> np.ndarray:
        contract = self._contraction(self.bases(curve))
        forces = self._nodal_forces(curve.points)
        kernel = self._residual_kernel(curve.points, forces)
        return assemble_intervals_vector(self.grid.n_interior, contract, kernel)

    def assemble_transported_residual(self, curve_old: NodalCurve, curve_new: NodalCurve) -> np.ndarray:
        # test bases of the old iterate, transported to the new base points
        # by orthogonal projection before contraction
        contract = self._contraction(self.bases(curve_old)).copy()
        new_interior = curve_new.interior
        for k in range(self.grid.n_interior):
            y = new_interior[k]
            contract[k] = contract[k] - np.outer(contract[k] @ y, y)
        forces = self._nodal_forces(curve_new.points)
        kernel = self._residual_kernel(curve_new.points, forces)
        return assemble_intervals_vector(self.grid.n_interior, contract, kernel)

    def assemble_jacobian(self, curve: NodalCurve):
        h = self.grid.h
        half_h = 0.5 * h
        points = curve.points
        forces = self._nodal_forces(points)
        n_nodes = len(points)
        force_jacs = np.zeros((n_nodes, 3, 3))
        for i in range(1, n_nodes - 1):
            force_jacs[i] = self.force_jacobian_at(points[i])
        eye_h = np.eye(3) / h

        def kernel(i):
            slope = (points[i + 1] - points[i]) / h
            r_left = -slope + half_h * forces[i]
            r_right = slope + half_h * forces[i + 1]
            J = np.empty((2, 2, 3, 3))
            J[0, 0] = eye_h + half_h * force_jacs[i] + _connection_block(points[i], r_left)
            J[1, 1] = eye_h + half_h * force_jacs[i + 1] + _connection_block(
                points[i + 1], r_right
            )
            J[0, 1] = -eye_h
            J[1, 0] = -eye_h
            return r_left, r_right, J

        contract = self._contraction(self.bases(curve))
        A, _ = assemble_intervals(self.grid.n_interior, contract, kernel)
        return A

    def retract(self, curve: NodalCurve, xi, alpha: float) -> NodalCurve:
        xi = np.asarray(xi, dtype=float).reshape(self.grid.n_interior, 2)
        points = curve.points.copy()
        for k, basis in enumerate(self.bases(curve)):
            step = alpha * (xi[k, 0] * basis.v1 + xi[k, 1] * basis.v2)
            points[k + 1] = retract_sphere(points[k + 1], step)
        return NodalCurve(self.grid, points)

    def norm_inf(self, xi) -> float:
        xi = np.asarray(xi, dtype=float).reshape(self.grid.n_interior, 2)
        return float(np.max(np.linalg.norm(xi, axis=1)))
