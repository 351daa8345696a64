"""Elastic geodesics on the sphere in a winding force field.

The force field circulates around the polar axis with a strength that grows
towards the poles; it is non-conservative, so the problem has no energy
formulation and the assembled Newton matrix is asymmetric.
"""

from __future__ import annotations

import numpy as np

from ..fem1d import Grid
from .curve import SphereCurveProblem

POLE_MARGIN = 1e-12

# boundary points used when none are given: almost antipodal, slightly
# off-axis so the connecting geodesic is unique
DEFAULT_GAMMA0 = (np.sin(0.3), 0.0, -np.cos(0.3))
DEFAULT_GAMMAT = (
    -np.sin(0.3) * np.cos(0.2),
    np.sin(0.3) * np.sin(0.2),
    np.cos(0.3),
)


class PoleSingularity(Exception):
    """Winding force evaluated too close to a pole."""


def winding_force(y, scale: float = 3.0) -> np.ndarray:
    """Coefficients of the winding force covector at ``y``.

    ``scale * y3 / (y1^2 + y2^2)`` times the azimuthal direction
    ``(-y2, y1, 0)``; annihilates the radial direction by construction.
    """
    y = np.asarray(y, dtype=float)
    rho2 = y[0] * y[0] + y[1] * y[1]
    if rho2 <= POLE_MARGIN:
        raise PoleSingularity(f"winding force undefined at |y1^2+y2^2| = {rho2:.2e}")
    prefactor = scale * y[2] / rho2
    return prefactor * np.array([-y[1], y[0], 0.0])


def winding_force_jacobian(y, scale: float = 3.0) -> np.ndarray:
    """Euclidean 3x3 Jacobian of the winding force coefficients at ``y``."""
    y = np.asarray(y, dtype=float)
    rho2 = y[0] * y[0] + y[1] * y[1]
    if rho2 <= POLE_MARGIN:
        raise PoleSingularity(f"winding force undefined at |y1^2+y2^2| = {rho2:.2e}")
    azimuthal = np.array([-y[1], y[0], 0.0])
    prefactor = scale * y[2] / rho2
    grad_prefactor = scale * np.array(
        [-2.0 * y[0] * y[2] / rho2**2, -2.0 * y[1] * y[2] / rho2**2, 1.0 / rho2]
    )
    d_azimuthal = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    return np.outer(azimuthal, grad_prefactor) + prefactor * d_azimuthal


def winding_force_deriv(y, dy, scale: float = 3.0) -> np.ndarray:
    """Directional derivative of the winding force coefficients along ``dy``."""
    return winding_force_jacobian(y, scale) @ np.asarray(dy, dtype=float)


class GeodesicForceProblem(SphereCurveProblem):
    """Elastic geodesic between two boundary points in the winding field.

    ``force_scale = 0`` turns the force off entirely (plain geodesic), in
    which case curves may pass through the poles.
    """

    def __init__(self, grid: Grid, gamma0=None, gammaT=None, force_scale: float = 3.0):
        super().__init__(
            grid,
            DEFAULT_GAMMA0 if gamma0 is None else gamma0,
            DEFAULT_GAMMAT if gammaT is None else gammaT,
        )
        self.force_scale = float(force_scale)

    def force_at(self, y) -> np.ndarray:
        if self.force_scale == 0.0:
            return np.zeros(3)
        return winding_force(y, self.force_scale)

    def force_jacobian_at(self, y) -> np.ndarray:
        if self.force_scale == 0.0:
            return np.zeros((3, 3))
        return winding_force_jacobian(y, self.force_scale)
