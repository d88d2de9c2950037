import numpy as np
import pandas as pd
import pytest

from app.errors import ConsistencyError, InputDomainError, SolverError, StepSizeError
from app.models import Params, SchemeConfig
from app.services.analysis import decay_fit, exponential_window
from app.services.evolution import (
    TimeState,
    discrete_equilibrium,
    evaluate_profile,
    initial_state,
    resolve_profile,
    run,
    stable_dt,
    step,
)
from app.services.grid import Grid1D, integrate, norm


@pytest.fixture
def bare_params(reference_params):
    return reference_params.model_copy(update={"m": None})


def short_scheme(steps=100, dt=5e-4, **extra):
    return SchemeConfig(
        dt=dt, t_end=steps * dt, snapshot_times=(), diagnostic_interval=10 * dt, **extra
    )


def test_paper_initial_data(reference_params, grid200):
    state = initial_state(reference_params, grid200)
    assert integrate(state.u) == pytest.approx(0.25, abs=1e-4)
    assert state.t == 0.0 and state.steps == 0
    np.testing.assert_allclose(state.v.values, grid200.centers ** 2)


def test_general_paper_profiles_scale_with_parameters():
    params = Params(chi=5.0, L=2.0, b=3.0, q={"K": 4.0, "gamma": 1.0})
    grid = Grid1D(2.0, 100)
    u0 = resolve_profile("paper", grid, params, "u")
    v0 = resolve_profile("paper", grid, params, "v")
    xi = grid.centers / 2.0
    np.testing.assert_allclose(u0, 4.0 * 0.5 * xi ** 2 * (3 - 2 * xi))
    np.testing.assert_allclose(v0, 3.0 * xi ** 2)


def test_polynomial_and_csv_profiles(tmp_path, bare_params, grid200):
    np.testing.assert_allclose(
        resolve_profile([0.0, 0.0, 1.0], grid200, bare_params, "v"), grid200.centers ** 2
    )
    path = tmp_path / "u0.csv"
    pd.DataFrame({"x": [0.0, 1.0], "u": [0.0, 0.5]}).to_csv(path, index=False)
    np.testing.assert_allclose(
        resolve_profile(str(path), grid200, bare_params, "u"), 0.5 * grid200.centers
    )
    with pytest.raises(InputDomainError):
        resolve_profile("no-such-profile", grid200, bare_params, "u")


def test_density_above_capacity_is_rejected(bare_params, grid200):
    with pytest.raises(InputDomainError) as info:
        initial_state(bare_params, grid200, [1.5], "paper")
    assert len(info.value.details["cells"]) > 0


def test_oxygen_must_match_boundary(bare_params, grid200):
    with pytest.raises(InputDomainError):
        initial_state(bare_params, grid200, "paper", [0.5])


@pytest.mark.parametrize("n", [4, 10, 25])
def test_compatible_oxygen_is_accepted_on_coarse_grids(bare_params, n):
    grid = Grid1D(1.0, n)
    for v0 in ["paper", [0.0, 0.0, 1.0]]:
        state = initial_state(bare_params, grid, "paper", v0)
        assert state.v.values[-1] < 1.0
        assert evaluate_profile(v0, np.array([1.0]), bare_params, "v")[0] == 1.0


def test_csv_oxygen_is_checked_at_the_right_end(tmp_path, bare_params):
    grid = Grid1D(1.0, 25)
    good = tmp_path / "good.csv"
    pd.DataFrame({"x": [0.0, 0.5, 1.0], "v": [0.0, 0.25, 1.0]}).to_csv(good, index=False)
    initial_state(bare_params, grid, "paper", str(good))
    short = tmp_path / "short.csv"
    pd.DataFrame({"x": [0.0, 0.5, 0.9], "v": [0.0, 0.25, 0.81]}).to_csv(short, index=False)
    with pytest.raises(InputDomainError):
        initial_state(bare_params, grid, "paper", str(short))


def test_zero_mass_needs_opt_in(bare_params, grid200):
    with pytest.raises(InputDomainError):
        initial_state(bare_params, grid200, "zero", "paper")
    state = initial_state(bare_params, grid200, "zero", "paper", allow_zero_mass=True)
    assert integrate(state.u) == 0.0


def test_configured_mass_must_agree(grid200):
    with pytest.raises(InputDomainError):
        initial_state(Params(chi=20.0, m=0.3), grid200)


def test_step_conserves_mass(bare_params, grid200):
    state = initial_state(bare_params, grid200)
    cfg = short_scheme()
    mass = integrate(state.u)
    for _ in range(50):
        state = step(state, bare_params, cfg)
        assert integrate(state.u) == pytest.approx(mass, rel=1e-13)
    assert state.t == pytest.approx(50 * cfg.dt)
    assert state.steps == 50


@pytest.mark.parametrize("upwind", [True, False])
def test_uniform_oxygen_switches_off_chemotaxis(bare_params, upwind):
    grid = Grid1D(1.0, 40)
    u = grid.sample(lambda x: 0.2 + 0.1 * np.cos(np.pi * x))
    state = TimeState(t=0.0, u=u, v=grid.constant(1.0))
    with_chi = step(state, bare_params, short_scheme(upwind=upwind))
    without = step(state, bare_params.with_chi(1e-12), short_scheme(upwind=upwind))
    np.testing.assert_allclose(with_chi.u.values, without.u.values, atol=1e-15)


def test_zero_density_stays_zero_and_oxygen_relaxes(bare_params, grid200):
    start = initial_state(bare_params, grid200, "zero", "paper", allow_zero_mass=True)
    traj = run(bare_params, grid200, short_scheme(steps=400), initial=start)
    assert np.all(traj.final.u.values == 0.0)
    gaps = [1.0 - s.v_min for s in traj.diagnostics]
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < gaps[0]


def test_explicit_flux_enforces_cfl(bare_params, grid200):
    state = initial_state(bare_params, grid200)
    cfg = short_scheme(chemotaxis="explicit")
    limit = stable_dt(state, bare_params, cfg)
    assert limit < cfg.dt
    with pytest.raises(StepSizeError) as info:
        step(state, bare_params, cfg)
    assert info.value.suggested_dt == pytest.approx(limit)


def test_explicit_flux_conserves_mass_below_cfl(bare_params, grid200):
    state = initial_state(bare_params, grid200)
    cfg = short_scheme(steps=20, dt=5e-5, chemotaxis="explicit")
    traj = run(bare_params, grid200, cfg, initial=state)
    assert traj.max_mass_drift <= 1e-12


def test_oxygen_maximum_principle_is_asserted(bare_params):
    grid = Grid1D(1.0, 20)
    state = TimeState(t=0.0, u=grid.constant(-50.0), v=grid.constant(1.0))
    cfg = short_scheme(upwind=False)
    with pytest.raises(ConsistencyError):
        step(state, bare_params, cfg)


def test_run_records_snapshots_and_diagnostics(bare_params, grid200):
    cfg = SchemeConfig(dt=5e-4, t_end=0.1, snapshot_times=(0.0, 0.05, 0.1), diagnostic_interval=0.01)
    traj = run(bare_params, grid200, cfg)
    assert [s.t for s in traj.snapshots] == pytest.approx([0.0, 0.05, 0.1])
    assert len(traj.diagnostics) == 11
    frame = traj.diagnostics_frame()
    assert list(frame.columns) == ["t", "mass", "u_min", "u_max", "v_min", "v_max", "dist_h1", "dist_eq"]
    assert frame["dist_h1"].isna().all() and frame["dist_eq"].isna().all()
    assert traj.max_mass_drift <= 1e-12
    assert traj.bound_violations == []


def test_snapshot_times_must_align_with_dt(bare_params, grid200):
    cfg = SchemeConfig(dt=0.03, t_end=0.09, snapshot_times=(0.05,), diagnostic_interval=0.03)
    with pytest.raises(InputDomainError):
        run(bare_params, grid200, cfg)


def test_steady_state_is_nearly_fixed(reference_params, grid200, steady_state):
    start = TimeState(t=0.0, u=steady_state.U, v=steady_state.V)
    t_end = 5.0
    cfg = SchemeConfig(
        dt=5e-4, t_end=t_end, snapshot_times=(), diagnostic_interval=0.5, upwind=False
    )
    traj = run(reference_params, grid200, cfg, steady=steady_state, initial=start)
    assert traj.final.steps == 10_000
    assert traj.diagnostics[0].dist_h1 == 0.0
    bound = 10.0 * (steady_state.ode_residual + steady_state.flux_residual) * t_end
    assert 0.0 < traj.diagnostics[-1].dist_h1 <= bound


def test_discrete_equilibrium_is_fixed_by_both_flux_modes(bare_params, grid200):
    start = initial_state(bare_params, grid200)
    cfg = SchemeConfig(dt=5e-4, t_end=1.0, snapshot_times=())
    eq = discrete_equilibrium(bare_params, start, cfg)
    assert eq.increment <= 1e-12
    assert integrate(eq.U) == pytest.approx(integrate(start.u), rel=1e-12)

    state = TimeState(t=0.0, u=eq.U, v=eq.V)
    for mode, dt in [("semi_implicit", 5e-4), ("explicit", 5e-5)]:
        moved = step(state, bare_params, cfg.model_copy(update={"dt": dt, "chemotaxis": mode}))
        assert np.max(np.abs(moved.u.values - eq.U.values)) <= 1e-10
        assert np.max(np.abs(moved.v.values - eq.V.values)) <= 1e-10


def test_discrete_equilibrium_does_not_depend_on_relaxation_step(bare_params, grid200):
    start = initial_state(bare_params, grid200)
    cfg = SchemeConfig(dt=5e-4, t_end=1.0, snapshot_times=())
    a = discrete_equilibrium(bare_params, start, cfg, relax_dt=1e-2)
    b = discrete_equilibrium(bare_params, start, cfg, relax_dt=4e-2)
    np.testing.assert_allclose(a.U.values, b.U.values, atol=1e-8)
    np.testing.assert_allclose(a.V.values, b.V.values, atol=1e-8)


def test_discrete_equilibrium_reports_a_stalled_relaxation(bare_params, grid200):
    start = initial_state(bare_params, grid200)
    cfg = SchemeConfig(dt=5e-4, t_end=1.0, snapshot_times=())
    with pytest.raises(SolverError) as info:
        discrete_equilibrium(bare_params, start, cfg, max_steps=3)
    assert info.value.details["increment"] > 1e-12


def test_runs_are_deterministic(bare_params, grid200):
    cfg = short_scheme(steps=40)
    a = run(bare_params, grid200, cfg).final
    b = run(bare_params, grid200, cfg).final
    assert np.array_equal(a.u.values, b.u.values) and np.array_equal(a.v.values, b.v.values)


@pytest.mark.slow
def test_reproduction_run(reproduction):
    traj, reference, equilibrium = reproduction
    final_u = traj.final.u.values
    first = int(np.flatnonzero(final_u >= 0.5)[0])
    assert traj.final.u.grid.centers[first] == pytest.approx(0.976, abs=traj.final.u.grid.dx)
    assert traj.max_mass_drift <= 1e-10
    for sample in traj.diagnostics:
        assert 0.0 <= sample.u_min and sample.u_max <= 1.0 + 1e-8
        assert 0.0 <= sample.v_min and sample.v_max <= 1.0 + 1e-12


@pytest.mark.slow
def test_reproduction_relaxes_to_discrete_equilibrium(reproduction):
    traj, reference, equilibrium = reproduction
    by_time = {round(s.t, 6): s for s in traj.diagnostics}
    assert by_time[50.0].dist_eq <= 1e-8
    assert by_time[100.0].dist_eq <= 1e-8

    gap = np.sqrt(
        norm(equilibrium.U - reference.U, "H1") ** 2 + norm(equilibrium.V - reference.V, "H1") ** 2
    )
    assert 0.0 < gap < 2e-3
    assert by_time[100.0].dist_h1 == pytest.approx(gap, abs=1e-8)

    window = exponential_window(traj.diagnostics, "dist_eq")
    assert window[1] < 50.0
    fit = decay_fit(traj.diagnostics, window, key="dist_eq")
    assert fit.alpha > 0
    assert fit.r2 >= 0.99


@pytest.mark.slow
def test_snapshot_distances_use_h1(reproduction):
    traj, reference, equilibrium = reproduction
    last = traj.snapshots[-1]
    expected = np.sqrt(norm(last.u - reference.U, "H1") ** 2 + norm(last.v - reference.V, "H1") ** 2)
    assert traj.diagnostics[-1].dist_h1 == pytest.approx(expected)
