import math

import numpy as np
import pytest

from app.errors import InputDomainError
from app.services.grid import (
    Dirichlet,
    Field,
    Grid1D,
    antiderivative,
    face_gradient,
    integrate,
    norm,
    restrict,
    right_boundary_value,
)


def test_grid_geometry():
    grid = Grid1D(2.0, 8)
    assert grid.dx == 0.25
    np.testing.assert_allclose(grid.centers, 0.125 + 0.25 * np.arange(8))
    assert grid.faces[0] == 0.0 and grid.faces[-1] == pytest.approx(2.0)
    assert grid.dx * grid.n == pytest.approx(grid.L, rel=1e-15)


@pytest.mark.parametrize("L, n", [(1.0, 3), (0.0, 10), (-1.0, 10), (1.0, 10.5)])
def test_invalid_grids(L, n):
    with pytest.raises(InputDomainError):
        Grid1D(L, n)


def test_field_shape_is_checked():
    with pytest.raises(InputDomainError):
        Field(Grid1D(1.0, 10), np.zeros(9))


def test_field_values_are_read_only():
    f = Grid1D(1.0, 10).constant(1.0)
    with pytest.raises(ValueError):
        f.values[0] = 2.0


def test_fields_on_different_grids_do_not_mix():
    with pytest.raises(InputDomainError):
        Grid1D(1.0, 10).constant(1.0) - Grid1D(1.0, 20).constant(1.0)


def test_integrate_examples():
    assert integrate(Grid1D(1.0, 100).constant(1.0)) == pytest.approx(1.0, abs=1e-14)
    for n in (4, 37, 200):
        assert integrate(Grid1D(1.0, n).sample(lambda x: x)) == pytest.approx(0.5, abs=1e-14)
    paper = Grid1D(1.0, 200).sample(lambda x: 0.5 * x ** 2 * (3 - 2 * x))
    assert integrate(paper) == pytest.approx(0.25, abs=1e-4)


def test_face_gradient_examples():
    grid = Grid1D(1.0, 10)
    assert np.all(face_gradient(grid.constant(3.0))[1:-1] == 0.0)
    np.testing.assert_allclose(face_gradient(grid.sample(lambda x: x))[1:-1], 1.0, rtol=1e-12)
    # face 5 sits at x = 0.5
    assert face_gradient(grid.sample(lambda x: x ** 2))[5] == pytest.approx(1.0, rel=1e-12)


def test_face_gradient_boundary_rules():
    grid = Grid1D(1.0, 10)
    f = grid.sample(lambda x: x)
    grad = face_gradient(f, right=Dirichlet(1.0))
    assert grad[0] == 0.0
    assert grad[-1] == pytest.approx(1.0, rel=1e-12)


def test_norm_examples():
    grid = Grid1D(1.0, 50)
    for kind in ("L2", "H1", "Linf"):
        assert norm(grid.constant(0.0), kind) == 0.0
    assert norm(grid.constant(1.0), "L2") == pytest.approx(1.0)
    assert norm(grid.constant(1.0), "H1") == pytest.approx(1.0)
    assert norm(grid.sample(lambda x: -2.0 * x), "Linf") == pytest.approx(2.0 - 0.02)


def test_h1_norm_of_identity():
    # interior faces only: the gradient term is (n - 1) / n
    grid = Grid1D(1.0, 400)
    exact_discrete = math.sqrt(1.0 / 3.0 - grid.dx ** 2 / 12.0 + (grid.n - 1) / grid.n)
    assert norm(grid.sample(lambda x: x), "H1") == pytest.approx(exact_discrete, rel=1e-12)
    fine = Grid1D(1.0, 1000)
    assert norm(fine.sample(lambda x: x), "H1") == pytest.approx(math.sqrt(4.0 / 3.0), abs=1e-3)


def test_h1_dominates_l2():
    f = Grid1D(1.0, 64).sample(np.cos)
    assert norm(f, "H1") >= norm(f, "L2") >= 0.0


def test_antiderivative():
    grid = Grid1D(1.0, 100)
    assert np.all(antiderivative(grid.constant(0.0)).values == 0.0)
    assert antiderivative(grid.constant(1.0)).values[-1] == pytest.approx(1.0, abs=1e-14)
    f = grid.sample(np.sin)
    phi = antiderivative(f)
    assert phi.values[-1] == pytest.approx(integrate(f), abs=1e-15)
    np.testing.assert_allclose(np.diff(phi.values) / grid.dx, f.values[1:], atol=1e-12)


def test_antiderivative_of_zero_mass_field_ends_at_zero():
    grid = Grid1D(1.0, 200)
    f = grid.sample(lambda x: np.cos(2 * np.pi * x))
    assert abs(antiderivative(f).values[-1]) <= 1e-12


def test_restrict_averages_pairs():
    fine = Grid1D(1.0, 8).sample(lambda x: x)
    coarse = restrict(fine, Grid1D(1.0, 4))
    np.testing.assert_allclose(coarse.values, Grid1D(1.0, 4).centers, atol=1e-15)
    with pytest.raises(InputDomainError):
        restrict(fine, Grid1D(1.0, 5))


def test_right_boundary_value_is_exact_for_quadratics():
    grid = Grid1D(1.0, 5)
    f = grid.sample(lambda x: 2.0 - 3.0 * x + 4.0 * x * x)
    assert right_boundary_value(f) == pytest.approx(3.0, abs=1e-12)
    assert right_boundary_value(grid.sample(lambda x: x * x)) == pytest.approx(1.0, abs=1e-12)
