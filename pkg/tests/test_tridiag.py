import numpy as np
import pytest

from app.errors import ConsistencyError
from app.services.grid import Grid1D
from app.services.tridiag import neumann_dirichlet_operator, solve_tridiagonal


def test_solve_matches_dense():
    rng = np.random.default_rng(7)
    n = 12
    lower = -rng.random(n)
    upper = -rng.random(n)
    diag = 3.0 + rng.random(n)
    rhs = rng.random(n)
    dense = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
    np.testing.assert_allclose(solve_tridiagonal(lower, diag, upper, rhs), np.linalg.solve(dense, rhs))


def test_singular_system_raises():
    n = 5
    with pytest.raises(ConsistencyError):
        solve_tridiagonal(np.zeros(n), np.zeros(n), np.zeros(n), np.ones(n))


def test_operator_bands():
    grid = Grid1D(1.0, 10)
    op = neumann_dirichlet_operator(grid, 2.0)
    inv = 1.0 / grid.dx ** 2
    assert op.diag[0] == pytest.approx(inv)
    assert op.diag[5] == pytest.approx(2 * inv)
    assert op.diag[-1] == pytest.approx(3 * inv)
    assert op.load[-1] == pytest.approx(4.0 * inv)
    assert np.all(op.load[:-1] == 0.0)


def test_constant_boundary_value_is_in_the_kernel():
    grid = Grid1D(1.0, 16)
    op = neumann_dirichlet_operator(grid, 0.7)
    np.testing.assert_allclose(op.apply(np.full(grid.n, 0.7)), 0.0, atol=1e-9)


def test_poisson_problem_is_second_order():
    # -v'' = 2 with v'(0) = 0, v(1) = 1 has v = 2 - x^2
    errors = []
    for n in (20, 40, 80):
        grid = Grid1D(1.0, n)
        op = neumann_dirichlet_operator(grid, 1.0)
        v = solve_tridiagonal(op.lower, op.diag, op.upper, 2.0 + op.load)
        errors.append(np.max(np.abs(v - (2.0 - grid.centers ** 2))))
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.15)
    assert errors[1] / errors[2] == pytest.approx(4.0, rel=0.15)
