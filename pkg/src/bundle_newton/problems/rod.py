"""Inextensible elastic rod as a saddle-point system.

Unknowns are the rod position ``y`` (P1 in R^3), its unit direction field
``v`` (P1 on the sphere) and the multiplier ``lambda`` (P0 per interval)
enforcing the constraint ``y' = v``.  Boundary values of ``y`` and ``v`` are
prescribed.  Per interior node the dofs are interleaved as
``(y_i, v_i, lambda_i)`` behind a leading ``lambda_0`` group, which keeps the
assembled Newton matrix banded with bandwidths 9/9 independent of the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fem1d import BandedMatrix, Grid
from ..geometry import normalized, retract_sphere, tangent_basis, unit_vector
from ..newton import ProblemInterface

BANDWIDTH = 9

# reference boundary data: slightly incompatible chord (length 0.8 for a
# unit-length rod) with upward pointing end directions
DEFAULT_Y0 = (0.0, 0.0, 0.0)
DEFAULT_Y1 = (0.8, 0.0, 0.0)
DEFAULT_V0 = (1.0 / np.sqrt(5.0), 0.0, 2.0 / np.sqrt(5.0))
DEFAULT_V1 = (1.0 / np.sqrt(1.64), 0.0, 0.8 / np.sqrt(1.64))


@dataclass(frozen=True)
class RodState:
    """Nodal rod configuration: positions, unit directions, multipliers."""

    grid: Grid
    y: np.ndarray  # (n_nodes, 3)
    v: np.ndarray  # (n_nodes, 3), unit rows
    lam: np.ndarray  # (n_intervals, 3)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        v = np.asarray(self.v, dtype=float)
        lam = np.asarray(self.lam, dtype=float)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "lam", lam)
        n_nodes = self.grid.n_nodes
        if y.shape != (n_nodes, 3) or v.shape != (n_nodes, 3):
            raise ValueError("y and v must hold one 3-vector per node")
        if lam.shape != (self.grid.n_intervals, 3):
            raise ValueError("lam must hold one 3-vector per interval")
        err = np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0))
        if err > 1e-12:
            raise ValueError(f"direction field leaves the sphere by {err:.2e}")

    def constraint_residuals(self) -> np.ndarray:
        """Per-interval values of ``(y_{i+1} - y_i)/h - (v_i + v_{i+1})/2``."""
        h = self.grid.h
        return np.diff(self.y, axis=0) / h - 0.5 * (self.v[:-1] + self.v[1:])


def rod_initial_guess(grid: Grid, y0, y1, v0, v1) -> RodState:
    """Affine positions, nodewise-normalized affine directions, zero multiplier."""
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    v0 = unit_vector(v0)
    v1 = unit_vector(v1)
    s = (grid.nodes / grid.t_end)[:, None]
    y = (1.0 - s) * y0 + s * y1
    v = np.array([normalized(w) for w in (1.0 - s) * v0 + s * v1])
    v[0] = v0
    v[-1] = v1
    lam = np.zeros((grid.n_intervals, 3))
    return RodState(grid, y, v, lam)


class RodProblem(ProblemInterface):
    """Equilibrium system of the inextensible rod for the Newton driver.

    ``sigma`` is the flexural stiffness, a scalar or one value per interval;
    ``force`` is an optional pair ``(force_at, force_jacobian_at)`` of
    callables describing an external force covector field on the positions.
    """

    def __init__(self, grid: Grid, y0=None, y1=None, v0=None, v1=None,
                 sigma=1.0, force=None):
        self.grid = grid
        self.y0 = np.asarray(DEFAULT_Y0 if y0 is None else y0, dtype=float)
        self.y1 = np.asarray(DEFAULT_Y1 if y1 is None else y1, dtype=float)
        self.v0 = unit_vector(DEFAULT_V0 if v0 is None else v0)
        self.v1 = unit_vector(DEFAULT_V1 if v1 is None else v1)
        sig = np.asarray(sigma, dtype=float)
        if sig.ndim == 0:
            sig = np.full(grid.n_intervals, float(sig))
        if sig.shape != (grid.n_intervals,):
            raise ValueError("sigma must be scalar or one value per interval")
        if np.any(sig <= 0.0):
            raise ValueError("flexural stiffness must be positive")
        self.sigma = sig
        self.force = force

    # -- dof layout ----------------------------------------------------------

    @property
    def dof_count(self) -> int:
        return 8 * self.grid.n_interior + 3

    def _y_slice(self, i: int) -> slice:
        base = 3 + (i - 1) * 8
        return slice(base, base + 3)

    def _v_slice(self, i: int) -> slice:
        base = 3 + (i - 1) * 8
        return slice(base + 3, base + 5)

    def _lam_slice(self, j: int) -> slice:
        if j == 0:
            return slice(0, 3)
        base = 3 + (j - 1) * 8
        return slice(base + 5, base + 8)

    def initial_state(self) -> RodState:
        return rod_initial_guess(self.grid, self.y0, self.y1, self.v0, self.v1)

    def bases(self, state: RodState):
        return [tangent_basis(p) for p in state.v[1:-1]]

    # -- nodal residual covectors ---------------------------------------------

    def _y_covectors(self, state: RodState) -> np.ndarray:
        """Euclidean covectors paired with the interior position tests."""
        r = state.lam[:-1] - state.lam[1:]
        if self.force is not None:
            force_at = self.force[0]
            r = r + self.grid.h * np.stack([force_at(p) for p in state.y[1:-1]])
        return r

    def _v_covectors(self, state: RodState) -> np.ndarray:
        """Euclidean covectors paired with the interior direction tests."""
        h = self.grid.h
        slopes = np.diff(state.v, axis=0) / h
        sig = self.sigma[:, None]
        r = sig[:-1] * slopes[:-1] - sig[1:] * slopes[1:]
        r -= 0.5 * h * (state.lam[:-1] + state.lam[1:])
        return r

    def _residual_from(self, state: RodState, contract) -> np.ndarray:
        b = np.zeros(self.dof_count)
        r_y = self._y_covectors(state)
        r_v = self._v_covectors(state)
        r_lam = self.grid.h * state.constraint_residuals()
        for i in range(1, self.grid.n_interior + 1):
            b[self._y_slice(i)] = r_y[i - 1]
            b[self._v_slice(i)] = contract[i - 1] @ r_v[i - 1]
        for j in range(self.grid.n_intervals):
            b[self._lam_slice(j)] = r_lam[j]
        return b

    # -- driver contract -------------------------------------------------------

    def assemble_residual(self, state: RodState) -> np.ndarray:
        contract = np.stack([b.matrix.T for b in self.bases(state)])
        return self._residual_from(state, contract)

    def assemble_transported_residual(self, state_old: RodState, state_new: RodState) -> np.ndarray:
        # position and multiplier tests live in fixed linear spaces; only the
        # direction tests are transported, by projection onto the new tangents
        contract = np.stack([b.matrix.T for b in self.bases(state_old)])
        new_v = state_new.v[1:-1]
        for k in range(self.grid.n_interior):
            y = new_v[k]
            contract[k] = contract[k] - np.outer(contract[k] @ y, y)
        return self._residual_from(state_new, contract)

    def assemble_jacobian(self, state: RodState) -> BandedMatrix:
        n = self.grid.n_interior
        h = self.grid.h
        sig = self.sigma
        A = BandedMatrix(self.dof_count, BANDWIDTH, BANDWIDTH)
        bases = self.bases(state)
        vmats = [b.matrix for b in bases]  # (3, 2) each
        eye3 = np.eye(3)
        r_v = self._v_covectors(state)

        def add(rows, cols, block):
            A.add_block(range(rows.start, rows.stop), range(cols.start, cols.stop), block)

        for i in range(1, n + 1):
            # position rows: multiplier difference, optional force derivative
            add(self._y_slice(i), self._lam_slice(i - 1), eye3)
            add(self._y_slice(i), self._lam_slice(i), -eye3)
            if self.force is not None:
                force_jac_at = self.force[1]
                add(self._y_slice(i), self._y_slice(i), h * force_jac_at(state.y[i]))

            # direction rows: stiffness, connection correction, multiplier
            V = vmats[i - 1]
            vi = state.v[i]
            ri = r_v[i - 1]
            conn = -(ri @ vi) * eye3 - np.outer(vi, ri)
            diag = ((sig[i - 1] + sig[i]) / h) * eye3 + conn
            add(self._v_slice(i), self._v_slice(i), V.T @ diag @ V)
            if i - 1 >= 1:
                add(self._v_slice(i), self._v_slice(i - 1), -(sig[i - 1] / h) * V.T @ vmats[i - 2])
            if i + 1 <= n:
                add(self._v_slice(i), self._v_slice(i + 1), -(sig[i] / h) * V.T @ vmats[i])
            add(self._v_slice(i), self._lam_slice(i - 1), -0.5 * h * V.T)
            add(self._v_slice(i), self._lam_slice(i), -0.5 * h * V.T)

        for j in range(self.grid.n_intervals):
            # constraint rows: position difference minus interval mean direction
            if j >= 1:
                add(self._lam_slice(j), self._y_slice(j), -eye3)
                add(self._lam_slice(j), self._v_slice(j), -0.5 * h * vmats[j - 1])
            if j + 1 <= n:
                add(self._lam_slice(j), self._y_slice(j + 1), eye3)
                add(self._lam_slice(j), self._v_slice(j + 1), -0.5 * h * vmats[j])
        return A

    def retract(self, state: RodState, xi, alpha: float) -> RodState:
        xi = np.asarray(xi, dtype=float)
        y = state.y.copy()
        v = state.v.copy()
        lam = state.lam.copy()
        bases = self.bases(state)
        for i in range(1, self.grid.n_interior + 1):
            y[i] += alpha * xi[self._y_slice(i)]
            dv = xi[self._v_slice(i)]
            basis = bases[i - 1]
            v[i] = retract_sphere(v[i], alpha * (dv[0] * basis.v1 + dv[1] * basis.v2))
        for j in range(self.grid.n_intervals):
            lam[j] += alpha * xi[self._lam_slice(j)]
        return RodState(self.grid, y, v, lam)

    def norm_inf(self, xi) -> float:
        xi = np.asarray(xi, dtype=float)
        best = 0.0
        for i in range(1, self.grid.n_interior + 1):
            best = max(best, float(np.linalg.norm(xi[self._y_slice(i)])))
            best = max(best, float(np.linalg.norm(xi[self._v_slice(i)])))
        for j in range(self.grid.n_intervals):
            best = max(best, float(np.linalg.norm(xi[self._lam_slice(j)])))
        return best
