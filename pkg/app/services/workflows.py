"""Config-driven workflows behind the CLI subcommands."""

import logging
from pathlib import Path
from typing import List, Optional

from ..config import RunConfig
from ..errors import FitError, InputDomainError
from ..models import DecayReport, Params, VerifyCheck
from . import storage_service as storage
from .analysis import chi_sweep, decay_fit, exponential_window
from .evolution import Trajectory, discrete_equilibrium, initial_state, run
from .grid import Grid1D, integrate
from .limit_profile import limit_profile, sample_limit
from .steady_solver import SteadyState, assemble_steady
from .verify_suite import run_checks

logger = logging.getLogger(__name__)


def grid_for(cfg: RunConfig) -> Grid1D:
    return Grid1D(cfg.length, cfg.cells)


def resolve_params(cfg: RunConfig) -> Params:
    """Params with m taken from the config, or else from the initial density."""
    params = cfg.params()
    if params.m is not None:
        return params
    start = initial_state(params, grid_for(cfg), cfg.u0, cfg.v0, cfg.allow_zero_mass)
    m = integrate(start.u)
    logger.info(f"mass taken from u0: m = {m:.12g}")
    return params.with_mass(m)


def steady(cfg: RunConfig, out_dir: Path) -> SteadyState:
    """steady.csv with x, U, V and the steady.json report."""
    params = resolve_params(cfg)
    grid = grid_for(cfg)
    state = assemble_steady(params, grid, cfg.tolerances())
    storage.write_frame(
        storage.profile_frame(grid.centers, {"U": state.U.values, "V": state.V.values}),
        out_dir,
        "steady.csv",
    )
    storage.write_json(state.report(params), out_dir, "steady.json")
    return state


def limit(cfg: RunConfig, out_dir: Path) -> Path:
    """limit.csv with x, U_inf, V_inf at the grid faces."""
    profile = limit_profile(resolve_params(cfg))
    samples = sample_limit(profile, grid_for(cfg).faces)
    return storage.write_frame(
        storage.profile_frame(samples.x, {"U_inf": samples.u, "V_inf": samples.v}),
        out_dir,
        "limit.csv",
    )


def evolve(cfg: RunConfig, out_dir: Path) -> Trajectory:
    """Snapshots, diagnostics.csv and, with positive mass, decay.json."""
    params = cfg.params()
    grid = grid_for(cfg)
    scheme = cfg.scheme()
    start = initial_state(params, grid, cfg.u0, cfg.v0, cfg.allow_zero_mass)
    m = integrate(start.u)

    reference = equilibrium = None
    if m > 0:
        reference = assemble_steady(params.with_mass(m), grid, cfg.tolerances())
        equilibrium = discrete_equilibrium(params, start, scheme)
    traj = run(params, grid, scheme, steady=reference, initial=start, equilibrium=equilibrium)

    for snap in traj.snapshots:
        storage.write_frame(
            storage.profile_frame(grid.centers, {"u": snap.u.values, "v": snap.v.values}),
            out_dir,
            storage.snapshot_filename(snap.t),
        )
    storage.write_frame(traj.diagnostics_frame(), out_dir, "diagnostics.csv")

    if reference is not None:
        report = fit_decay(traj, cfg)
        if report is not None:
            storage.write_json(report, out_dir, "decay.json")
    return traj


def fit_decay(traj: Trajectory, cfg: RunConfig) -> Optional[DecayReport]:
    """
    Decay of the distance to the discrete equilibrium, over cfg.fit_window or
    else the window before that distance reaches its round-off floor.
    """
    try:
        window = cfg.fit_window or exponential_window(traj.diagnostics, "dist_eq")
        return decay_fit(traj.diagnostics, window, key="dist_eq")
    except (FitError, InputDomainError) as exc:
        logger.error(f"no decay fit: {exc}")
        return None


def sweep(cfg: RunConfig, out_dir: Path):
    """sweep.csv with one row per chi."""
    rows = chi_sweep(
        resolve_params(cfg),
        grid_for(cfg),
        cfg.chis,
        tolerances=cfg.tolerances(),
        max_workers=cfg.sweep_workers,
    )
    storage.write_frame(storage.sweep_frame(rows), out_dir, "sweep.csv")
    return rows


def verify(cfg: RunConfig, out_dir: Path) -> List[VerifyCheck]:
    """verify.json listing every check and the failures."""
    checks = run_checks(resolve_params(cfg), grid_for(cfg), cfg.scheme(), cfg.tolerances())
    failures = [c.name for c in checks if not c.passed]
    storage.write_json(
        {"passed": not failures, "failures": failures, "checks": checks}, out_dir, "verify.json"
    )
    return checks
