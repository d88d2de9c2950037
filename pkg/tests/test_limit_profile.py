import math

import numpy as np
import pytest

from app.errors import InputDomainError
from app.models import Params
from app.services.analysis import chi_sweep
from app.services.grid import Grid1D, integrate
from app.services.limit_profile import (
    compare_to_limit,
    crossing,
    limit_ode_residual,
    limit_profile,
    sample_limit,
    u_limit,
    v_limit,
    v_limit_derivative,
)
from app.services.steady_solver import SteadyState

PLATEAU = 2.0 * math.exp(0.25) / (1.0 + math.exp(0.5))


@pytest.fixture
def profile(reference_params):
    return limit_profile(reference_params)


def test_profile_constants(profile):
    assert profile.interface == pytest.approx(0.75)
    assert profile.plateau == pytest.approx(PLATEAU, rel=1e-14)
    assert profile.plateau == pytest.approx(0.9695436, abs=1e-7)


def test_u_limit_branches(profile):
    assert u_limit(profile, 0.0) == 0.0
    assert u_limit(profile, 1.0) == 1.0
    assert u_limit(profile, 0.75) == 0.5
    assert u_limit(profile, 0.7499) == 0.0
    assert u_limit(profile, 0.7501) == 1.0


def test_v_limit_values(profile):
    assert v_limit(profile, 1.0) == pytest.approx(1.0, abs=1e-14)
    assert v_limit(profile, 0.0) == pytest.approx(PLATEAU, rel=1e-14)
    assert v_limit(profile, 0.3) == profile.plateau


def test_v_limit_is_continuous_and_flat_at_interface(profile):
    x = profile.interface
    lo, hi = _branches(profile, x)
    assert abs(lo - hi) <= 1e-12
    assert abs(v_limit_derivative(profile, x)) <= 1e-12


def _branches(profile, x):
    right = profile.c1 * math.exp(-profile.root_k * x) + profile.c2 * math.exp(profile.root_k * x)
    return profile.plateau, right


def test_positions_outside_domain(profile):
    for x in (-0.1, 1.1):
        with pytest.raises(InputDomainError):
            u_limit(profile, x)
        with pytest.raises(InputDomainError):
            v_limit(profile, x)


def test_limit_needs_mass():
    with pytest.raises(InputDomainError):
        limit_profile(Params(chi=20.0))


def test_u_limit_carries_the_mass(profile):
    grid = Grid1D(1.0, 400)
    assert integrate(grid.sample(lambda x: u_limit(profile, x))) == pytest.approx(0.25, abs=1e-12)


def test_limit_ode_is_satisfied(profile):
    coarse = limit_ode_residual(profile, Grid1D(1.0, 100))
    fine = limit_ode_residual(profile, Grid1D(1.0, 200))
    assert fine < 1e-4
    assert coarse / fine == pytest.approx(4.0, rel=0.1)


def test_sample_limit_at_faces(profile):
    grid = Grid1D(1.0, 200)
    samples = sample_limit(profile, grid.faces)
    assert samples.x.shape == (201,)
    assert samples.v[-1] == pytest.approx(1.0, abs=1e-14)
    assert samples.u[0] == 0.0 and samples.u[-1] == 1.0


def test_crossing_interpolates():
    x = np.array([0.0, 1.0, 2.0])
    assert crossing(x, np.array([0.0, 0.2, 1.0]), 0.6) == pytest.approx(1.5)
    assert crossing(x, np.array([0.7, 0.8, 1.0]), 0.5) is None
    assert crossing(x, np.array([0.0, 0.1, 0.2]), 0.5) is None


def test_self_comparison_is_zero(profile):
    grid = Grid1D(1.0, 200)
    U = grid.sample(lambda x: u_limit(profile, x))
    V = grid.sample(lambda x: v_limit(profile, x))
    state = SteadyState(
        lam=1.0, log_lambda=0.0, U=U, V=V, mass_residual=0.0, ode_residual=0.0,
        flux_residual=0.0, iterations=0, bisection_steps=0,
    )
    result = compare_to_limit(state, profile)
    assert result.l1_u == 0.0
    assert result.sup_v == 0.0
    assert result.width < grid.dx
    assert result.midpoint == pytest.approx(0.75)


def test_flat_density_has_no_layer_metrics(profile):
    grid = Grid1D(1.0, 50)
    state = SteadyState(
        lam=1.0, log_lambda=0.0, U=grid.constant(0.25), V=grid.constant(1.0),
        mass_residual=0.0, ode_residual=0.0, flux_residual=0.0, iterations=0, bisection_steps=0,
    )
    result = compare_to_limit(state, profile)
    assert result.midpoint is None and result.width is None
    assert result.l1_u > 0


def test_steady_state_is_near_limit(steady_state, profile):
    result = compare_to_limit(steady_state, profile)
    assert result.l1_u < 0.25
    assert result.midpoint == pytest.approx(0.976, abs=steady_state.grid.dx)
    assert result.width > 0


@pytest.mark.slow
def test_sweep_approaches_limit(reference_params, grid200):
    rows = chi_sweep(reference_params, grid200, [20.0, 40.0, 80.0, 160.0, 320.0])
    assert all(row.error is None for row in rows)
    l1 = [row.l1_u_vs_limit for row in rows]
    assert all(b < a for a, b in zip(l1, l1[1:]))
    offsets = [abs(row.midpoint - 0.75) for row in rows]
    assert all(b < a for a, b in zip(offsets, offsets[1:]))
    assert abs(rows[-1].plateau_v0 - PLATEAU) < abs(rows[0].plateau_v0 - PLATEAU)
    assert rows[-1].plateau_v0 == pytest.approx(0.957687, abs=5e-5)
    assert rows[-1].midpoint == pytest.approx(0.7911, abs=1e-3)
