"""
Time integration of the chemotaxis-consumption system.

u_t = (D(u) u_x - chi S(u) v_x)_x,   v_t = v_xx - u v

on [0, L] with zero total u-flux at both ends, v_x(0) = 0 and v(L) = b.
u lives in flux form on the cell mesh, so every step conserves dx * sum(u)
up to round-off. Each step is one tridiagonal solve for u (backward Euler
diffusion, chemotaxis either linearly implicit or explicit upwind) followed by
one for v (backward Euler diffusion, consumption with the fresh u).
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import ConsistencyError, InputDomainError, SolverError, StepSizeError
from ..models import Params, SchemeConfig
from .grid import Field, Grid1D, integrate, norm, require_same_grid
from .model_functions import diffusivity, q_eval, sensitivity
from .tridiag import neumann_dirichlet_operator, solve_tridiagonal

logger = logging.getLogger(__name__)

ProfileSpec = Union[str, Path, Sequence[float]]

U_BOUND_SLACK = 1e-8
V_BOUND_SLACK = 1e-12
FACE_CAPACITY_MARGIN = 1e-12
MASS_CONSISTENCY_TOL = 1e-4
V0_BOUNDARY_TOL = 1e-3
STEP_GRID_TOL = 1e-9
EQUILIBRIUM_TOL = 1e-12
EQUILIBRIUM_DT = 1e-2
EQUILIBRIUM_MAX_STEPS = 200_000

DIAGNOSTIC_COLUMNS = ["t", "mass", "u_min", "u_max", "v_min", "v_max", "dist_h1", "dist_eq"]


@dataclass(frozen=True, eq=False)
class TimeState:
    """(u, v) at time t after `steps` steps."""

    t: float
    u: Field
    v: Field
    steps: int = 0


@dataclass(frozen=True)
class DiagnosticSample:
    t: float
    mass: float
    u_min: float
    u_max: float
    v_min: float
    v_max: float
    dist_h1: Optional[float] = None
    dist_eq: Optional[float] = None


@dataclass(frozen=True)
class BoundViolation:
    """A step at which u or v left its admissible range."""

    t: float
    quantity: str
    minimum: float
    maximum: float


@dataclass
class Trajectory:
    """Snapshots, sampled diagnostics and bound records of one run."""

    initial_mass: float
    final: TimeState
    snapshots: List[TimeState] = field(default_factory=list)
    diagnostics: List[DiagnosticSample] = field(default_factory=list)
    bound_violations: List[BoundViolation] = field(default_factory=list)

    def diagnostics_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[getattr(s, c) for c in DIAGNOSTIC_COLUMNS] for s in self.diagnostics],
            columns=DIAGNOSTIC_COLUMNS,
        )

    @property
    def max_mass_drift(self) -> float:
        """Largest relative deviation of the sampled masses from the initial mass."""
        if self.initial_mass == 0:
            return max((abs(s.mass) for s in self.diagnostics), default=0.0)
        return max(
            (abs(s.mass - self.initial_mass) / self.initial_mass for s in self.diagnostics),
            default=0.0,
        )


def resolve_profile(spec: ProfileSpec, grid: Grid1D, params: Params, kind: str) -> np.ndarray:
    """
    Sample an initial profile at the cell centers.

    spec is "paper" (u0 = K xi^2 (3 - 2 xi) / 2, v0 = b xi^2 with xi = x/L),
    "zero", a list of polynomial coefficients in ascending powers of x, or the
    path of a two-column CSV (x, value) interpolated linearly.
    """
    return evaluate_profile(spec, grid.centers, params, kind)


def evaluate_profile(spec: ProfileSpec, x: np.ndarray, params: Params, kind: str) -> np.ndarray:
    """Evaluate a profile spec at arbitrary positions in [0, L]."""
    x = np.asarray(x, dtype=float)
    if isinstance(spec, (list, tuple, np.ndarray)):
        if len(spec) == 0:
            raise InputDomainError(f"{kind}0 polynomial needs at least one coefficient")
        return np.polynomial.polynomial.polyval(x, np.asarray(spec, dtype=float))
    if spec == "paper":
        xi = x / params.L
        if kind == "u":
            return params.q.K * 0.5 * xi * xi * (3.0 - 2.0 * xi)
        return params.b * xi * xi
    if spec == "zero":
        return np.zeros(x.shape)

    path = Path(spec)
    if not path.is_file():
        raise InputDomainError(f"{kind}0 profile '{spec}' is neither a known name nor a file")
    table = pd.read_csv(path)
    if table.shape[1] < 2:
        raise InputDomainError(f"{kind}0 profile file {path} needs columns x, value")
    xs = table.iloc[:, 0].to_numpy(dtype=float)
    values = table.iloc[:, 1].to_numpy(dtype=float)
    order = np.argsort(xs)
    return np.interp(x, xs[order], values[order])


def initial_state(
    params: Params,
    grid: Grid1D,
    u0_spec: ProfileSpec = "paper",
    v0_spec: ProfileSpec = "paper",
    allow_zero_mass: bool = False,
) -> TimeState:
    """
    Sampled initial data after checking 0 <= u0 < K, v0 >= 0 and v0(L) = b.

    The mass of u0 must lie in (0, K L), or be zero when allow_zero_mass is
    set, and agree with params.m when that is given.
    """
    if not math.isclose(grid.L, params.L):
        raise InputDomainError(f"grid length {grid.L} differs from L={params.L}")
    u0 = resolve_profile(u0_spec, grid, params, "u")
    v0 = resolve_profile(v0_spec, grid, params, "v")

    bad_u = np.flatnonzero(~((u0 >= 0) & (u0 < params.q.K)))
    if bad_u.size:
        raise InputDomainError(
            f"u0 must satisfy 0 <= u0 < K={params.q.K}",
            {"cells": bad_u[:20].tolist(), "values": u0[bad_u[:20]].tolist()},
        )
    bad_v = np.flatnonzero(~(v0 >= 0))
    if bad_v.size:
        raise InputDomainError("v0 must be nonnegative", {"cells": bad_v[:20].tolist()})
    v_end = float(evaluate_profile(v0_spec, np.array([params.L]), params, "v")[0])
    if abs(v_end - params.b) > V0_BOUNDARY_TOL * max(1.0, params.b):
        raise InputDomainError(
            f"v0(L) = {v_end:.6g} is incompatible with the boundary value b = {params.b}"
        )

    state = TimeState(t=0.0, u=Field(grid, u0), v=Field(grid, v0))
    m = integrate(state.u)
    if m == 0.0:
        if not allow_zero_mass:
            raise InputDomainError("u0 carries no mass; m must lie in (0, K*L)")
    elif not 0.0 < m < params.capacity_mass:
        raise InputDomainError(f"mass of u0 = {m} outside (0, K*L)")
    if params.m is not None and abs(m - params.m) > MASS_CONSISTENCY_TOL:
        raise InputDomainError(
            f"mass of u0 = {m:.8g} disagrees with the configured m = {params.m}"
        )
    return state


def face_velocity(v: np.ndarray, chi: float, dx: float) -> np.ndarray:
    """chi v_x at the n-1 interior faces."""
    return chi * np.diff(v) / dx


def stable_dt(state: TimeState, params: Params, cfg: SchemeConfig) -> float:
    """Largest dt the explicit chemotaxis flux admits for this state."""
    w = face_velocity(state.v.values, params.chi, state.u.grid.dx)
    peak = float(np.max(np.abs(w))) if w.size else 0.0
    return math.inf if peak == 0.0 else cfg.cfl_safety * state.u.grid.dx / peak


def _u_system(state: TimeState, params: Params, cfg: SchemeConfig) -> tuple:
    grid = state.u.grid
    n, dx, dt = grid.n, grid.dx, cfg.dt
    q = params.q
    u = state.u.values
    w = face_velocity(state.v.values, params.chi, dx)
    r = dt / dx

    u_face = np.clip(0.5 * (u[:-1] + u[1:]), 0.0, q.K * (1.0 - FACE_CAPACITY_MARGIN))
    conduct = np.asarray(diffusivity(q, u_face)) / dx

    lower = np.zeros(n)
    diag = np.ones(n)
    upper = np.zeros(n)
    rhs = u.copy()
    diag[:-1] += r * conduct
    upper[:-1] -= r * conduct
    diag[1:] += r * conduct
    lower[1:] -= r * conduct

    positive = np.clip(u, 0.0, None)
    if cfg.chemotaxis == "semi_implicit":
        qu = np.asarray(q_eval(q, positive))
        if cfg.upwind:
            a = np.maximum(w, 0.0) * qu[:-1]
            c = np.minimum(w, 0.0) * qu[1:]
        else:
            a = 0.5 * w * qu[:-1]
            c = 0.5 * w * qu[1:]
        diag[:-1] += r * a
        upper[:-1] += r * c
        diag[1:] -= r * c
        lower[1:] -= r * a
    else:
        limit = stable_dt(state, params, cfg)
        if dt > limit:
            raise StepSizeError(
                f"dt={dt} exceeds the advective limit {limit:.3e}",
                suggested_dt=limit,
                details={"t": state.t},
            )
        s = np.asarray(sensitivity(q, positive))
        if cfg.upwind:
            flux = np.where(w > 0, w * s[:-1], w * s[1:])
        else:
            flux = w * 0.5 * (s[:-1] + s[1:])
        rhs[:-1] -= r * flux
        rhs[1:] += r * flux
    return lower, diag, upper, rhs


def step(state: TimeState, params: Params, cfg: SchemeConfig) -> TimeState:
    """Advance (u, v) by one time step."""
    grid = require_same_grid(state.u, state.v)
    dt = cfg.dt
    u_new = solve_tridiagonal(*_u_system(state, params, cfg))

    op = neumann_dirichlet_operator(grid, params.b)
    v_new = solve_tridiagonal(
        dt * op.lower,
        1.0 + dt * op.diag + dt * u_new,
        dt * op.upper,
        state.v.values + dt * op.load,
    )

    v_ceiling = max(params.b, float(state.v.values.max()))
    if v_new.min() < -V_BOUND_SLACK * params.b or v_new.max() > v_ceiling * (1.0 + V_BOUND_SLACK):
        raise ConsistencyError(
            "oxygen left its maximum-principle bounds",
            {"t": state.t + dt, "v_min": float(v_new.min()), "v_max": float(v_new.max())},
        )
    steps = state.steps + 1
    return TimeState(t=steps * dt, u=Field(grid, u_new), v=Field(grid, v_new), steps=steps)


@dataclass(frozen=True)
class DiscreteEquilibrium:
    """Fixed point of the time-stepping scheme reached from a given start."""

    U: Field
    V: Field
    steps: int
    increment: float


def discrete_equilibrium(
    params: Params,
    start: TimeState,
    cfg: SchemeConfig,
    relax_dt: float = EQUILIBRIUM_DT,
    tol: float = EQUILIBRIUM_TOL,
    max_steps: int = EQUILIBRIUM_MAX_STEPS,
) -> DiscreteEquilibrium:
    """
    Relax the scheme of cfg to its own fixed point.

    The fixed point solves flux(u) = 0 together with the discrete v equation
    and does not depend on dt, and both chemotaxis modes share it, so the
    relaxation steps linearly implicitly with max(cfg.dt, relax_dt) until no
    cell moves by more than tol. The mass of start is kept.
    """
    relax = cfg.model_copy(
        update={"dt": max(cfg.dt, relax_dt), "chemotaxis": "semi_implicit"}
    )
    state = TimeState(t=0.0, u=start.u, v=start.v)
    increment = math.inf
    for _ in range(max_steps):
        nxt = step(state, params, relax)
        increment = max(
            float(np.max(np.abs(nxt.u.values - state.u.values))),
            float(np.max(np.abs(nxt.v.values - state.v.values))),
        )
        state = nxt
        if increment <= tol:
            logger.info(
                f"discrete equilibrium after {state.steps} relaxation steps "
                f"of dt={relax.dt:g}, last increment {increment:.2e}"
            )
            return DiscreteEquilibrium(U=state.u, V=state.v, steps=state.steps, increment=increment)
    raise SolverError(
        f"scheme did not settle within {max_steps} relaxation steps",
        {"increment": increment, "dt": relax.dt},
    )


def _steps_for(times: Sequence[float], dt: float, what: str) -> Dict[int, float]:
    out = {}
    for t in times:
        k = int(round(t / dt))
        if abs(k * dt - t) > STEP_GRID_TOL * max(1.0, abs(t)):
            raise InputDomainError(f"{what} {t} is not a multiple of dt={dt}")
        out[k] = t
    return out


def _distance(state: TimeState, target) -> Optional[float]:
    if target is None:
        return None
    return math.sqrt(norm(state.u - target.U, "H1") ** 2 + norm(state.v - target.V, "H1") ** 2)


def _sample(state: TimeState, steady, equilibrium=None) -> DiagnosticSample:
    u, v = state.u.values, state.v.values
    return DiagnosticSample(
        t=state.t,
        mass=integrate(state.u),
        u_min=float(u.min()),
        u_max=float(u.max()),
        v_min=float(v.min()),
        v_max=float(v.max()),
        dist_h1=_distance(state, steady),
        dist_eq=_distance(state, equilibrium),
    )


def _bounds(state: TimeState, params: Params) -> List[BoundViolation]:
    found = []
    u, v = state.u.values, state.v.values
    if u.min() < 0 or u.max() > params.q.K + U_BOUND_SLACK:
        found.append(BoundViolation(state.t, "u", float(u.min()), float(u.max())))
    if v.min() < 0 or v.max() > params.b + V_BOUND_SLACK:
        found.append(BoundViolation(state.t, "v", float(v.min()), float(v.max())))
    return found


def run(
    params: Params,
    grid: Grid1D,
    cfg: SchemeConfig,
    u0_spec: ProfileSpec = "paper",
    v0_spec: ProfileSpec = "paper",
    steady=None,
    allow_zero_mass: bool = False,
    initial: Optional[TimeState] = None,
    equilibrium: Optional[DiscreteEquilibrium] = None,
) -> Trajectory:
    """
    Integrate from the initial data to cfg.t_end.

    Snapshots are kept at cfg.snapshot_times and diagnostics every
    cfg.diagnostic_interval, with H1 distances to the steady state and to the
    discrete equilibrium of the scheme when those are given. `initial`
    replaces the sampled initial data.
    """
    state = initial or initial_state(params, grid, u0_spec, v0_spec, allow_zero_mass)
    for target in (steady, equilibrium):
        if target is not None:
            require_same_grid(state.u, target.U)
    n_steps = next(iter(_steps_for([cfg.t_end], cfg.dt, "t_end")))
    snapshot_steps = _steps_for(cfg.snapshot_times, cfg.dt, "snapshot time")
    stride = cfg.diagnostic_stride

    if cfg.chemotaxis == "semi_implicit":
        courant = cfg.dt / stable_dt(state, params, cfg) * cfg.cfl_safety
        logger.info(f"initial chemotactic Courant number {courant:.3g}")

    traj = Trajectory(initial_mass=integrate(state.u), final=state)
    warned = set()
    for k in range(n_steps + 1):
        if k > 0:
            state = step(state, params, cfg)
        if k in snapshot_steps:
            traj.snapshots.append(state)
        if k % stride == 0 or k == n_steps:
            traj.diagnostics.append(_sample(state, steady, equilibrium))
        for violation in _bounds(state, params):
            if len(traj.bound_violations) < 1000:
                traj.bound_violations.append(violation)
            if violation.quantity not in warned:
                warned.add(violation.quantity)
                logger.warning(
                    f"{violation.quantity} out of bounds at t={violation.t:.6g}: "
                    f"min={violation.minimum:.3e}, max={violation.maximum:.17g}"
                )

    traj.final = state
    logger.info(
        f"run finished at t={state.t:g} after {state.steps} steps, "
        f"mass drift {traj.max_mass_drift:.2e}"
    )
    return traj
