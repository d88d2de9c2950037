"""Shared fixtures: reproduction parameters, grids and cached solver results."""

import pytest

from app.models import Params, SchemeConfig
from app.services.evolution import discrete_equilibrium, initial_state, run
from app.services.grid import Grid1D, integrate
from app.services.steady_solver import assemble_steady


@pytest.fixture(scope="session")
def reference_params() -> Params:
    return Params(chi=20.0, L=1.0, b=1.0, m=0.25)


@pytest.fixture(scope="session")
def grid200() -> Grid1D:
    return Grid1D(1.0, 200)


@pytest.fixture(scope="session")
def steady_state(reference_params, grid200):
    return assemble_steady(reference_params, grid200)


@pytest.fixture(scope="session")
def reproduction(reference_params, grid200):
    """
    Full t = 100 run from the reproduction initial data, with its steady
    reference and the fixed point of the scheme it relaxes to.
    """
    bare = reference_params.model_copy(update={"m": None})
    start = initial_state(bare, grid200, "paper", "paper")
    reference = assemble_steady(reference_params.with_mass(integrate(start.u)), grid200)
    scheme = SchemeConfig(
        dt=5e-4, t_end=100.0, snapshot_times=(25.0, 50.0, 100.0), diagnostic_interval=0.1
    )
    equilibrium = discrete_equilibrium(bare, start, scheme)
    traj = run(bare, grid200, scheme, steady=reference, initial=start, equilibrium=equilibrium)
    return traj, reference, equilibrium
