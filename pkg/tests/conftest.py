"""Shared helpers for the test suite: random points, states, FD oracles."""

import numpy as np

from bundle_newton import Grid, NodalCurve
from bundle_newton.problems import RodState


def random_unit(rng, z_margin=None):
    """Random unit vector; optionally bounded away from the poles."""
    while True:
        v = rng.standard_normal(3)
        nrm = np.linalg.norm(v)
        if nrm < 0.1:
            continue
        v = v / nrm
        if z_margin is None or abs(v[2]) <= 1.0 - z_margin:
            return v


def random_tangent(rng, y, scale=1.0):
    u = rng.standard_normal(3)
    u = u - y * (y @ u)
    return scale * u


def random_sphere_curve(grid, rng, z_margin=None):
    """Random admissible nodal curve, optionally away from the poles."""
    pts = np.array([random_unit(rng, z_margin) for _ in range(grid.n_nodes)])
    return NodalCurve(grid, pts)


def random_obstacle_curve(grid, rng, problem, kink_margin=1e-4):
    """Random curve with every node at least ``kink_margin`` from the cap.

    The central difference step of the consistency oracles crosses margins
    comparable to the step size, so states are generated clear of the kink.
    """
    pts = []
    for _ in range(grid.n_nodes):
        while True:
            y = random_unit(rng)
            if abs(problem.gap(y)) >= kink_margin:
                pts.append(y)
                break
    return NodalCurve(grid, np.array(pts))


def random_rod_state(grid, rng, base=None):
    base = base if base is not None else _straight_rod(grid)
    y = base.y + 0.2 * rng.standard_normal(base.y.shape)
    v = base.v + 0.3 * rng.standard_normal(base.v.shape)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    lam = 0.5 * rng.standard_normal(base.lam.shape)
    y[0], y[-1] = base.y[0], base.y[-1]
    v[0], v[-1] = base.v[0], base.v[-1]
    return RodState(grid, y, v, lam)


def _straight_rod(grid):
    from bundle_newton.problems import rod_initial_guess

    return rod_initial_guess(grid, (0.0, 0.0, 0.0), (0.8, 0.0, 0.0),
                             (1 / np.sqrt(5), 0, 2 / np.sqrt(5)),
                             (1 / np.sqrt(1.64), 0, 0.8 / np.sqrt(1.64)))


def jacobian_fd_error(problem, state, rng, n_directions=5, step=1e-5):
    """Worst relative error of the Jacobian action against a central
    difference of the transported residual along random directions."""
    A = problem.assemble_jacobian(state)
    worst = 0.0
    for _ in range(n_directions):
        xi = rng.standard_normal(problem.dof_count)
        xi /= np.abs(xi).max()
        jxi = A.matvec(xi)
        plus = problem.assemble_transported_residual(state, problem.retract(state, xi, step))
        minus = problem.assemble_transported_residual(state, problem.retract(state, xi, -step))
        fd = (plus - minus) / (2.0 * step)
        worst = max(worst, np.abs(jxi - fd).max() / (1.0 + np.abs(jxi).max()))
    return worst


def random_block_tridiag(rng, n_blocks, m):
    """Well conditioned random block tridiagonal matrix (diagonally boosted)."""
    from bundle_newton import BlockTriDiag

    A = BlockTriDiag(
        diag=rng.standard_normal((n_blocks, m, m)),
        lower=rng.standard_normal((max(n_blocks - 1, 0), m, m)),
        upper=rng.standard_normal((max(n_blocks - 1, 0), m, m)),
    )
    for i in range(n_blocks):
        A.diag[i] += 4.0 * m * np.eye(m)
    return A


def random_banded(rng, dim, kl, ku):
    from bundle_newton import BandedMatrix

    A = BandedMatrix(dim, kl, ku)
    for j in range(dim):
        for i in range(max(0, j - ku), min(dim, j + kl + 1)):
            A.add(i, j, rng.standard_normal())
    for i in range(dim):
        A.add(i, i, 4.0 * (kl + ku + 1))
    return A
