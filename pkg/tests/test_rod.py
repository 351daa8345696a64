import numpy as np
import pytest

from bundle_newton import DegenerateUpdate, Grid, NewtonConfig, Termination, damped_newton
from bundle_newton.problems import RodProblem, RodState, rod_initial_guess
from conftest import jacobian_fd_error, random_rod_state

SQRT5 = np.sqrt(5.0)


def straight_rod_problem(grid):
    e1 = np.array([1.0, 0.0, 0.0])
    return RodProblem(grid, y0=(0, 0, 0), y1=(1, 0, 0), v0=e1, v1=e1)


# -- initial guess -----------------------------------------------------------------


def test_initial_guess_reference_boundary_data():
    grid = Grid(1.0, 10)
    problem = RodProblem(grid)
    state = problem.initial_state()
    assert np.abs(np.linalg.norm(state.v, axis=1) - 1.0).max() < 1e-12
    assert np.array_equal(state.lam, np.zeros((grid.n_intervals, 3)))
    assert np.allclose(state.y[0], [0, 0, 0]) and np.allclose(state.y[-1], [0.8, 0, 0])
    assert np.allclose(state.v[0], [1 / SQRT5, 0, 2 / SQRT5])


def test_initial_guess_constant_directions():
    grid = Grid(1.0, 5)
    v = np.array([0.0, 0.6, 0.8])
    state = rod_initial_guess(grid, (0, 0, 0), (0, 0.6, 0.8), v, v)
    assert np.abs(state.v - v).max() < 1e-15


def test_initial_guess_single_interior_node():
    grid = Grid(1.0, 1)
    v0 = np.array([1.0, 0.0, 0.0])
    v1 = np.array([0.0, 1.0, 0.0])
    state = rod_initial_guess(grid, (0, 0, 0), (1, 0, 0), v0, v1)
    mid = 0.5 * (v0 + v1)
    assert np.allclose(state.v[1], mid / np.linalg.norm(mid))


def test_initial_guess_antipodal_directions_degenerate():
    grid = Grid(1.0, 3)
    with pytest.raises(DegenerateUpdate):
        rod_initial_guess(grid, (0, 0, 0), (1, 0, 0), (1, 0, 0), (-1, 0, 0))


# -- residual ------------------------------------------------------------------------


def test_straight_rod_is_stationary():
    grid = Grid(1.0, 12)
    problem = straight_rod_problem(grid)
    state = problem.initial_state()
    assert np.abs(problem.assemble_residual(state)).max() < 1e-12


def test_constraint_rows_formula():
    rng = np.random.default_rng(0)
    grid = Grid(1.0, 6)
    problem = RodProblem(grid)
    state = random_rod_state(grid, rng)
    b = problem.assemble_residual(state)
    h = grid.h
    for j in range(grid.n_intervals):
        expected = h * (
            (state.y[j + 1] - state.y[j]) / h - 0.5 * (state.v[j] + state.v[j + 1])
        )
        assert np.abs(b[problem._lam_slice(j)] - expected).max() < 1e-14


def test_multiplier_enters_linearly():
    rng = np.random.default_rng(1)
    grid = Grid(1.0, 5)
    problem = RodProblem(grid)
    state = random_rod_state(grid, rng)
    dlam = rng.standard_normal(state.lam.shape)
    shifted = RodState(grid, state.y, state.v, state.lam + dlam)
    zero_lam = RodState(grid, state.y, state.v, np.zeros_like(state.lam))
    only_dlam = RodState(grid, state.y, state.v, dlam)
    diff = problem.assemble_residual(shifted) - problem.assemble_residual(state)
    linear_part = problem.assemble_residual(only_dlam) - problem.assemble_residual(zero_lam)
    assert np.abs(diff - linear_part).max() < 1e-12
    # constraint rows do not depend on the multiplier
    for j in range(grid.n_intervals):
        assert np.abs(diff[problem._lam_slice(j)]).max() == 0.0


# -- Jacobian -------------------------------------------------------------------------


def test_jacobian_position_block_vanishes_without_force():
    rng = np.random.default_rng(2)
    grid = Grid(1.0, 5)
    problem = RodProblem(grid)
    state = random_rod_state(grid, rng)
    dense = problem.assemble_jacobian(state).to_dense()
    for i in range(1, grid.n_interior + 1):
        for j in range(1, grid.n_interior + 1):
            block = dense[problem._y_slice(i), problem._y_slice(j)]
            assert np.abs(block).max() == 0.0


def test_jacobian_direction_block_is_pure_stiffness_at_straight_state():
    grid = Grid(1.0, 6)
    problem = straight_rod_problem(grid)
    state = problem.initial_state()  # constant v, zero multiplier
    dense = problem.assemble_jacobian(state).to_dense()
    h = grid.h
    from bundle_newton import tangent_basis

    vmats = [tangent_basis(p).matrix for p in state.v[1:-1]]
    for i in range(1, grid.n_interior + 1):
        diag = dense[problem._v_slice(i), problem._v_slice(i)]
        assert np.abs(diag - (2.0 / h) * np.eye(2)).max() < 1e-12 / h
        if i + 1 <= grid.n_interior:
            off = dense[problem._v_slice(i), problem._v_slice(i + 1)]
            expected = -(1.0 / h) * vmats[i - 1].T @ vmats[i]
            assert np.abs(off - expected).max() < 1e-12 / h


def test_jacobian_matches_fd_of_transported_residual():
    rng = np.random.default_rng(3)
    grid = Grid(1.0, 7)
    problem = RodProblem(grid)
    for _ in range(3):
        state = random_rod_state(grid, rng)
        assert jacobian_fd_error(problem, state, rng) < 1e-6


def test_jacobian_respects_declared_bandwidth():
    rng = np.random.default_rng(4)
    grid = Grid(1.0, 6)
    problem = RodProblem(grid)
    state = random_rod_state(grid, rng)
    dense = problem.assemble_jacobian(state).to_dense()
    n = problem.dof_count
    for i in range(n):
        for j in range(n):
            if abs(i - j) > 9:
                assert dense[i, j] == 0.0


def test_variable_stiffness_profile():
    rng = np.random.default_rng(5)
    grid = Grid(1.0, 6)
    sigma = 1.0 + 0.5 * rng.random(grid.n_intervals)
    problem = RodProblem(grid, sigma=sigma)
    state = random_rod_state(grid, rng)
    assert jacobian_fd_error(problem, state, rng) < 1e-6


# -- solve ----------------------------------------------------------------------------


def test_rod_converges_with_damping():
    grid = Grid(1.0, 25)
    problem = RodProblem(grid)
    state, trace = damped_newton(problem, problem.initial_state(), NewtonConfig())
    assert trace.terminated is Termination.CONVERGED
    assert trace.iterations[0].accepted_alpha < 1.0
    assert np.abs(state.constraint_residuals()).max() <= 1e-8
    assert np.abs(np.linalg.norm(state.v, axis=1) - 1.0).max() <= 1e-12
    # the converged positions trace the directions: |y'| = 1 up to the scheme
    slopes = np.diff(state.y, axis=0) / grid.h
    assert np.abs(np.linalg.norm(slopes, axis=1) - 1.0).max() < 0.01


def test_rod_solution_mesh_convergence_second_order():
    solutions = {}
    for n in (24, 49, 99):
        grid = Grid(1.0, n)
        problem = RodProblem(grid)
        state, trace = damped_newton(problem, problem.initial_state(), NewtonConfig())
        assert trace.terminated is Termination.CONVERGED
        solutions[n] = state
    dy1 = np.linalg.norm(solutions[24].y - solutions[49].y[::2], axis=1).max()
    dy2 = np.linalg.norm(solutions[49].y - solutions[99].y[::2], axis=1).max()
    dv1 = np.linalg.norm(solutions[24].v - solutions[49].v[::2], axis=1).max()
    dv2 = np.linalg.norm(solutions[49].v - solutions[99].v[::2], axis=1).max()
    assert 3.2 <= dy1 / dy2 <= 4.8
    assert 3.2 <= dv1 / dv2 <= 4.8


def test_rod_norm_groups():
    grid = Grid(1.0, 4)
    problem = RodProblem(grid)
    xi = np.zeros(problem.dof_count)
    xi[problem._v_slice(2)] = [3.0, 4.0]
    assert problem.norm_inf(xi) == pytest.approx(5.0)
    xi[problem._lam_slice(0)] = [0.0, 0.0, 7.0]
    assert problem.norm_inf(xi) == pytest.approx(7.0)
