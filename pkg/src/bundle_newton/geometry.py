"""Geometric primitives for the unit sphere embedded in R^3.

Points are plain numpy arrays of shape (3,); covectors are represented by
their coefficient arrays with respect to the Euclidean pairing.  All
functions are pure and carry no state, so values can be shared freely
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIT_NORM_TOL = 1e-12
DEGENERATE_NORM = 1e-12
CONDITION_LIMIT = 1e14


class DegenerateUpdate(Exception):
    """Raised when a point update collapses to (nearly) the zero vector."""


class SingularConstraint(Exception):
    """Raised when a constraint Jacobian is rank deficient."""


def unit_vector(coords) -> np.ndarray:
    """Return ``coords`` as a validated unit vector of shape (3,)."""
    y = np.asarray(coords, dtype=float).reshape(3)
    nrm = np.linalg.norm(y)
    if abs(nrm - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"not a unit vector: norm deviates by {abs(nrm - 1.0):.2e}")
    return y


def normalized(vec) -> np.ndarray:
    """Normalize ``vec``, raising :class:`DegenerateUpdate` near zero."""
    v = np.asarray(vec, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm <= DEGENERATE_NORM:
        raise DegenerateUpdate(f"cannot normalize a vector of norm {nrm:.2e}")
    return v / nrm


def tangent_project(y, h) -> np.ndarray:
    """Orthogonal projection of ``h`` onto the tangent plane at ``y``."""
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    return h - y * (y @ h)


def tangent_project_deriv(y, v, u) -> np.ndarray:
    """Derivative of the tangent projection at ``y`` along ``v``, applied to ``u``.

    Evaluates ``-y <v, u> - v <y, u>`` for arbitrary ``v`` and ``u``; for a
    pair of tangent vectors the second term vanishes and the result is
    radial.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    return -y * (v @ u) - v * (y @ u)


def retract_sphere(y, d) -> np.ndarray:
    """Move from ``y`` along ``d`` and renormalize back onto the sphere."""
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    if not d.any():
        return y.copy()  # retraction at zero is the exact identity
    w = y + d
    nrm = np.linalg.norm(w)
    if nrm <= DEGENERATE_NORM:
        raise DegenerateUpdate(
            f"update direction collapses the point to norm {nrm:.2e}"
        )
    return w / nrm


def transport_vector(src, dst, u) -> np.ndarray:
    """Transport a tangent vector ``u`` at ``src`` to ``dst`` by projection.

    The transport may lose rank when ``u`` is parallel to ``dst``; the result
    is then (close to) zero and callers must cope.
    """
    del src  # the projection transport only depends on the target point
    return tangent_project(dst, u)


@dataclass(frozen=True)
class TangentBasis:
    """Orthonormal basis ``(v1, v2)`` of the tangent plane at ``base``."""

    base: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """3x2 matrix with the basis vectors as columns."""
        return np.column_stack((self.v1, self.v2))


def tangent_basis(y) -> TangentBasis:
    """Deterministic orthonormal tangent basis at the unit vector ``y``.

    The two coordinate axes least aligned with ``y`` are orthogonalized
    against ``y`` (and against each other) by a single Gram-Schmidt sweep.
    No continuity across nearby base points is promised, or needed.
    """
    y = np.asarray(y, dtype=float)
    order = np.argsort(np.abs(y), kind="stable")
    e_a = np.zeros(3)
    e_a[order[0]] = 1.0
    e_b = np.zeros(3)
    e_b[order[1]] = 1.0
    v1 = normalized(e_a - y * (y @ e_a))
    v2 = normalized(e_b - y * (y @ e_b) - v1 * (v1 @ e_b))
    return TangentBasis(base=y, v1=v1, v2=v2)


def normal_multiplier(fp, cp) -> np.ndarray:
    """Multiplier ``lam`` for which ``fp + lam @ cp`` vanishes on the normal space.

    ``fp`` is the gradient covector of the objective, ``cp`` the constraint
    Jacobian (one row per constraint).  Solves the Gram system
    ``(cp cp^T) lam = -cp fp``.
    """
    cp = np.atleast_2d(np.asarray(cp, dtype=float))
    fp = np.asarray(fp, dtype=float)
    gram = cp @ cp.T
    if np.linalg.cond(gram) > CONDITION_LIMIT:
        raise SingularConstraint("constraint Jacobian is (near) rank deficient")
    return -np.linalg.solve(gram, cp @ fp)


def constrained_hessian_apply(fpp, cp, cpp, lam, dx) -> np.ndarray:
    """Covariant Hessian action ``fpp @ dx + sum_k lam[k] * cpp[k] @ dx``.

    Parameters
    ----------
    fpp : (n, n) array
        Second derivative of the objective.
    cp : (l, n) array
        Constraint Jacobian rows; must have full row rank.
    cpp : (l, n, n) array
        Second derivatives of the constraint components.
    lam : (l,) array
        Multiplier covector solving the normal-space stationarity system,
        see :func:`normal_multiplier`.
    dx : (n,) array
        Direction tangent to the constraint set (``cp @ dx`` vanishes).

    Returns
    -------
    (n,) array
        Coefficients of the output covector.  Restricted to the kernel of
        ``cp`` it agrees with the projection-based covariant derivative of
        the constrained gradient.
    """
    fpp = np.asarray(fpp, dtype=float)
    cp = np.atleast_2d(np.asarray(cp, dtype=float))
    cpp = np.asarray(cpp, dtype=float)
    if cpp.ndim == 2:
        cpp = cpp[None, :, :]
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    dx = np.asarray(dx, dtype=float)
    if np.linalg.matrix_rank(cp) < cp.shape[0]:
        raise SingularConstraint(
            "constraint Jacobian is rank deficient; the multiplier is not unique"
        )
    tangency = np.max(np.abs(cp @ dx))
    if tangency > 1e-10 * (1.0 + np.max(np.abs(dx))):
        raise ValueError(
            f"dx is not tangent to the constraint set: |c'(y) dx| = {tangency:.2e}"
        )
    return fpp @ dx + np.einsum("k,kij,j->i", lam, cpp, dx)
