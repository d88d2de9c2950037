"""
Steady states of the chemotaxis-consumption system.

The zero-flux condition integrates to U / q(U) = lambda * exp(chi * V), so the
steady problem reduces to the semilinear boundary value problem

    -V'' + G^-1(lambda e^{chi V}) V = 0,   V'(0) = 0,   V(L) = b,

plus the mass constraint that selects lambda. At fixed lambda the reduced
problem is solved by monotone (shifted Picard) iteration squeezed between the
upper solution b and the lower solution 0; lambda is then located by
bracketing and bisection.

Internally lambda is carried as log(lambda) and bracketed through
kappa = lambda * e^{chi b}, the transform value at x = L, which stays of order
one where lambda itself underflows any fixed range for large chi.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..errors import BracketError, ConsistencyError, InputDomainError, SolverError
from ..models import Params, SteadyReport, Tolerances
from .grid import Field, Grid1D
from .model_functions import (
    diffusivity,
    g_inverse,
    g_inverse_derivative,
    sensitivity,
)
from .tridiag import MixedOperator, neumann_dirichlet_operator, solve_tridiagonal

logger = logging.getLogger(__name__)

SHIFT_SAMPLES = 64
SHIFT_SAFETY = 1.25
# Half-width, in units of log(w), of the window sampled around the layer.
SHIFT_WINDOW = 6.0
ORDERING_SLACK = 10.0 * np.finfo(float).eps
MONOTONE_SLACK = 1e-12
KAPPA_EXPONENT_CAP = 12
LN10 = math.log(10.0)
NEWTON_MAX_STEPS = 50


@dataclass(frozen=True, eq=False)
class SteadyState:
    """Steady state (lambda, U, V) with its residuals and iteration counts."""

    lam: float
    log_lambda: float
    U: Field
    V: Field
    mass_residual: float
    ode_residual: float
    flux_residual: float
    iterations: int
    bisection_steps: int

    @property
    def grid(self) -> Grid1D:
        return self.U.grid

    def report(self, params: Params) -> SteadyReport:
        return SteadyReport(
            lambda_=self.lam,
            log_lambda=self.log_lambda,
            mass_residual=self.mass_residual,
            ode_residual=self.ode_residual,
            flux_residual=self.flux_residual,
            iterations=self.iterations,
            bisection_steps=self.bisection_steps,
            n=self.grid.n,
            params=params,
        )


@dataclass(frozen=True)
class ReducedSolution:
    """Solution of the reduced problem at one lambda."""

    log_lambda: float
    V: np.ndarray
    U: np.ndarray
    mass: float
    iterations: int


@dataclass(frozen=True)
class LemmaCheck:
    """Worst-case slacks of the monotonicity and gradient estimates."""

    min_du: float
    min_dv: float
    max_gradient_excess: float


@dataclass(frozen=True)
class MassMap:
    """Sampled lambda -> mass map."""

    lambdas: List[float]
    masses: List[float]
    increasing: bool


def _log_lambda(lam: float) -> float:
    if lam < 0 or math.isnan(lam):
        raise InputDomainError(f"lambda must be nonnegative, got {lam}")
    return -math.inf if lam == 0 else math.log(lam)


def _densities(params: Params, log_lam: float, v: np.ndarray, g_tol: float) -> np.ndarray:
    """U = G^-1(lambda e^{chi v})."""
    if log_lam == -math.inf:
        return np.zeros_like(v)
    return np.asarray(g_inverse(params.q, np.exp(log_lam + params.chi * v), tol=g_tol))


def _reaction(params: Params, log_lam: float, v: np.ndarray, g_tol: float) -> np.ndarray:
    return _densities(params, log_lam, v, g_tol) * v


def estimate_shift(params: Params, log_lam: float, g_tol: float = 1e-14) -> float:
    """
    Shift mu >= sup f'(s) on [0, b] for the Picard iteration.

    f' is sampled by central differences on a uniform set plus a window around
    the point where lambda e^{chi s} = 1, where f' peaks for large chi.
    """
    b = params.b
    samples = np.linspace(0.0, b, SHIFT_SAMPLES)
    if log_lam != -math.inf:
        center = -log_lam / params.chi
        window = center + np.linspace(-SHIFT_WINDOW, SHIFT_WINDOW, SHIFT_SAMPLES) / params.chi
        window = window[(window >= 0.0) & (window <= b)]
        samples = np.concatenate([samples, window])
    h = 1e-6 * max(1.0, b)
    slope = (
        _reaction(params, log_lam, samples + h, g_tol)
        - _reaction(params, log_lam, samples - h, g_tol)
    ) / (2.0 * h)
    return SHIFT_SAFETY * max(float(slope.max()), 0.0)


def _newton_polish(
    params: Params,
    op: MixedOperator,
    log_lam: float,
    v: np.ndarray,
    tol: float,
    tolerances: Tolerances,
) -> tuple:
    for k in range(1, NEWTON_MAX_STEPS + 1):
        u = _densities(params, log_lam, v, tolerances.g_tol)
        residual = op.apply(v) + u * v
        w = np.exp(log_lam + params.chi * v)
        slope = u + params.chi * v * w * np.asarray(g_inverse_derivative(params.q, u))
        delta = solve_tridiagonal(op.lower, op.diag + slope, op.upper, -residual)
        v = v + delta
        if float(np.max(np.abs(delta))) <= tol:
            return v, k
    raise SolverError("Newton polish did not converge", {"steps": NEWTON_MAX_STEPS})


def _monotone_iteration(
    params: Params, grid: Grid1D, log_lam: float, tol: float, tolerances: Tolerances
) -> tuple:
    """Return (V, iterations) for the reduced problem at fixed lambda."""
    b = params.b
    if log_lam == -math.inf:
        return np.full(grid.n, b), 0

    op = neumann_dirichlet_operator(grid, b)
    mu = estimate_shift(params, log_lam, tolerances.g_tol)
    shifted = op.diag + mu
    slack = ORDERING_SLACK * max(1.0, b)

    upper_seq = np.full(grid.n, b)
    lower_seq = np.zeros(grid.n)
    gap = float("inf")
    for k in range(1, tolerances.max_iterations + 1):
        next_upper = solve_tridiagonal(
            op.lower,
            shifted,
            op.upper,
            mu * upper_seq - _reaction(params, log_lam, upper_seq, tolerances.g_tol) + op.load,
        )
        next_lower = solve_tridiagonal(
            op.lower,
            shifted,
            op.upper,
            mu * lower_seq - _reaction(params, log_lam, lower_seq, tolerances.g_tol) + op.load,
        )
        spread = next_upper - next_lower
        if float(spread.min()) < -slack:
            raise ConsistencyError(
                "upper and lower iterates lost their ordering",
                {"iteration": k, "violation": float(-spread.min()), "shift": mu},
            )
        step = max(
            float(np.max(np.abs(next_upper - upper_seq))),
            float(np.max(np.abs(next_lower - lower_seq))),
        )
        gap = float(spread.max())
        upper_seq, lower_seq = next_upper, next_lower

        if tolerances.newton and gap < tolerances.newton_switch_gap:
            v, extra = _newton_polish(
                params, op, log_lam, 0.5 * (upper_seq + lower_seq), tol, tolerances
            )
            return v, k + extra
        if gap <= tol and step <= tol:
            logger.debug(f"monotone iteration converged in {k} steps (mu={mu:.3g})")
            return 0.5 * (upper_seq + lower_seq), k

    raise SolverError(
        "monotone iteration hit its iteration cap",
        {"iterations": tolerances.max_iterations, "gap": gap, "shift": mu},
    )


def _solve_reduced(
    params: Params, grid: Grid1D, log_lam: float, tolerances: Tolerances
) -> ReducedSolution:
    v, iterations = _monotone_iteration(params, grid, log_lam, tolerances.tol_v, tolerances)
    u = _densities(params, log_lam, v, tolerances.g_tol)
    return ReducedSolution(
        log_lambda=log_lam,
        V=v,
        U=u,
        mass=float(grid.dx * np.sum(u)),
        iterations=iterations,
    )


def solve_v_for_lambda(
    params: Params,
    grid: Grid1D,
    lam: float,
    tol: float = 1e-10,
    tolerances: Optional[Tolerances] = None,
) -> Field:
    """V(.; lambda) solving -V'' + G^-1(lambda e^{chi V}) V = 0 with V'(0) = 0, V(L) = b."""
    if tol <= 0:
        raise InputDomainError("tolerance must be positive")
    tolerances = tolerances or Tolerances()
    v, _ = _monotone_iteration(params, grid, _log_lambda(lam), tol, tolerances)
    return Field(grid, v)


def mass_of_lambda(
    params: Params,
    grid: Grid1D,
    lam: float,
    tol: Optional[float] = None,
    tolerances: Optional[Tolerances] = None,
) -> float:
    """Integral of G^-1(lambda e^{chi V_lambda})."""
    tolerances = tolerances or Tolerances()
    if tol is not None:
        tolerances = tolerances.model_copy(update={"tol_v": tol})
    return _solve_reduced(params, grid, _log_lambda(lam), tolerances).mass


def _require_mass(params: Params) -> float:
    if params.m is None:
        raise InputDomainError("a bacterial mass m in (0, K*L) is required")
    return params.m


def _locate(params: Params, grid: Grid1D, tolerances: Tolerances) -> tuple:
    """Bracket and bisect log(kappa); returns (ReducedSolution, bisection_steps)."""
    m = _require_mass(params)
    shift = params.chi * params.b

    def evaluate(log_kappa: float) -> ReducedSolution:
        sol = _solve_reduced(params, grid, log_kappa - shift, tolerances)
        logger.debug(f"log kappa={log_kappa:.12g} mass={sol.mass:.12g}")
        return sol

    def hit(sol: ReducedSolution) -> bool:
        return abs(sol.mass - m) <= tolerances.tol_mass

    exponent = 0
    sol = evaluate(0.0)
    if hit(sol):
        return sol, 0
    direction = 1 if sol.mass < m else -1
    previous = sol
    while True:
        exponent += direction
        if abs(exponent) > KAPPA_EXPONENT_CAP:
            raise BracketError(
                "mass constraint could not be bracketed",
                {
                    "target": m,
                    "reachable_mass": previous.mass,
                    "kappa_cap": 10.0 ** (direction * KAPPA_EXPONENT_CAP),
                },
            )
        sol = evaluate(exponent * LN10)
        if hit(sol):
            return sol, 0
        if (sol.mass > m) == (direction == 1):
            break
        previous = sol

    lo, hi = sorted((previous.log_lambda + shift, sol.log_lambda + shift))
    for step in range(1, tolerances.max_bisection_steps + 1):
        mid = 0.5 * (lo + hi)
        sol = evaluate(mid)
        if hit(sol):
            return sol, step
        if sol.mass < m:
            lo = mid
        else:
            hi = mid
    raise SolverError(
        "bisection on lambda did not meet the mass tolerance",
        {"bracket_log_kappa": [lo, hi], "mass": sol.mass, "target": m},
    )


def find_lambda(
    params: Params,
    grid: Grid1D,
    tol_mass: float = 1e-8,
    tol_v: float = 1e-10,
    tolerances: Optional[Tolerances] = None,
) -> float:
    """lambda_m such that the reduced solution carries mass m."""
    tolerances = (tolerances or Tolerances()).model_copy(
        update={"tol_mass": tol_mass, "tol_v": tol_v}
    )
    sol, _ = _locate(params, grid, tolerances)
    return math.exp(sol.log_lambda)


def ode_residual(U: Field, V: Field) -> float:
    """max |V'' - U V| with V'' from the fourth-order stencil on cells 2..n-3."""
    dx = V.grid.dx
    v = V.values
    d2 = (-v[:-4] + 16.0 * v[1:-3] - 30.0 * v[2:-2] + 16.0 * v[3:-1] - v[4:]) / (12.0 * dx * dx)
    return float(np.max(np.abs(d2 - U.values[2:-2] * v[2:-2])))


def flux_residual(params: Params, U: Field, V: Field) -> float:
    """max |D(U) U' - chi S(U) V'| over interior faces."""
    dx = U.grid.dx
    u_face = 0.5 * (U.values[:-1] + U.values[1:])
    flux = (
        np.asarray(diffusivity(params.q, u_face)) * np.diff(U.values) / dx
        - params.chi * np.asarray(sensitivity(params.q, u_face)) * np.diff(V.values) / dx
    )
    return float(np.max(np.abs(flux)))


def invariant_violations(state: SteadyState, params: Params) -> List[str]:
    """Bounds and monotonicity of a steady state; empty when all hold."""
    problems = []
    u, v = state.U.values, state.V.values
    if not (np.all(u > 0) and np.all(u < params.q.K)):
        problems.append(f"U outside (0, K): min={u.min():.3e}, max={u.max():.17g}")
    if not (np.all(v > 0) and np.all(v <= params.b * (1.0 + MONOTONE_SLACK))):
        problems.append(f"V outside (0, b]: min={v.min():.3e}, max={v.max():.17g}")
    if np.any(np.diff(u) < -MONOTONE_SLACK):
        problems.append(f"U decreases by {-np.diff(u).min():.3e}")
    if np.any(np.diff(v) < -MONOTONE_SLACK):
        problems.append(f"V decreases by {-np.diff(v).min():.3e}")
    return problems


def assemble_steady(
    params: Params, grid: Grid1D, tolerances: Optional[Tolerances] = None
) -> SteadyState:
    """Locate lambda_m, recover U and fill in all residuals."""
    tolerances = tolerances or Tolerances()
    if not math.isclose(grid.L, params.L):
        raise InputDomainError(f"grid length {grid.L} differs from L={params.L}")
    sol, steps = _locate(params, grid, tolerances)
    U = Field(grid, sol.U)
    V = Field(grid, sol.V)
    state = SteadyState(
        lam=math.exp(sol.log_lambda),
        log_lambda=sol.log_lambda,
        U=U,
        V=V,
        mass_residual=abs(sol.mass - params.m),
        ode_residual=ode_residual(U, V),
        flux_residual=flux_residual(params, U, V),
        iterations=sol.iterations,
        bisection_steps=steps,
    )
    problems = invariant_violations(state, params)
    if problems:
        raise ConsistencyError("steady state violates its invariants", {"violations": problems})
    logger.info(
        f"steady state: lambda={state.lam:.6e} n={grid.n} "
        f"mass_residual={state.mass_residual:.2e} ode_residual={state.ode_residual:.2e}"
    )
    return state


def lemma_checks(state: SteadyState) -> LemmaCheck:
    """Monotonicity of U, V and (V')^2 <= U V^2 at interior faces."""
    u, v = state.U.values, state.V.values
    dv = np.diff(v) / state.grid.dx
    u_face = 0.5 * (u[:-1] + u[1:])
    v_face = 0.5 * (v[:-1] + v[1:])
    return LemmaCheck(
        min_du=float(np.diff(u).min()),
        min_dv=float(np.diff(v).min()),
        max_gradient_excess=float(np.max(dv * dv - u_face * v_face * v_face)),
    )


def mass_map(
    params: Params,
    grid: Grid1D,
    lambdas: Sequence[float],
    tolerances: Optional[Tolerances] = None,
) -> MassMap:
    """Masses on a sorted lambda sample; `increasing` is the uniqueness diagnostic."""
    lams = list(lambdas)
    if lams != sorted(lams):
        raise InputDomainError("lambda samples must be sorted")
    masses = [mass_of_lambda(params, grid, lam, tolerances=tolerances) for lam in lams]
    increasing = all(b > a for a, b in zip(masses, masses[1:]))
    return MassMap(lambdas=lams, masses=masses, increasing=increasing)


def lambda_ordering(
    params: Params,
    grid: Grid1D,
    lambdas: Sequence[float],
    tolerances: Optional[Tolerances] = None,
) -> float:
    """
    Largest violation of V(.; lambda_1) >= V(.; lambda_2) for lambda_1 < lambda_2.

    Zero or negative means the comparison ordering holds on the sample.
    """
    tolerances = tolerances or Tolerances()
    lams = sorted(lambdas)
    profiles = [
        solve_v_for_lambda(params, grid, lam, tolerances.tol_v, tolerances).values
        for lam in lams
    ]
    worst = -math.inf
    for smaller, larger in zip(profiles, profiles[1:]):
        worst = max(worst, float(np.max(larger - smaller)))
    return worst


def log_g_identity_residual(state: SteadyState, params: Params) -> float:
    """sup over interior faces of |ln G(U_{j+1}) - ln G(U_j) - chi (V_{j+1} - V_j)|."""
    u = state.U.values
    log_g = np.log(u) - params.q.gamma * np.log1p(-u / params.q.K)
    return float(np.max(np.abs(np.diff(log_g) - params.chi * np.diff(state.V.values))))
