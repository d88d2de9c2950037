"""Invariant checks run by the `verify` subcommand."""

import logging
import math
from typing import Callable, List, Tuple

import numpy as np

from ..errors import LabError
from ..models import Params, QFamily, SchemeConfig, Tolerances, VerifyCheck
from .analysis import (
    SecondDifferenceProblem,
    SteadyResidualProblem,
    refinement_study,
)
from .evolution import initial_state, run
from .grid import Grid1D, integrate
from .model_functions import diffusivity, g_eval, g_inverse
from .steady_solver import (
    assemble_steady,
    invariant_violations,
    lemma_checks,
    mass_map,
    solve_v_for_lambda,
)

logger = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)
ROUND_TRIP_SAMPLES = 1000
CONSERVATION_STEPS = 200
GRADIENT_SLACK = 1e-6
ORDER_TARGET = 2.0
ORDER_TOLERANCE = 0.3


def round_trip_bound(q: QFamily, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Admissible |G(G^-1(w)) - w| given the conditioning of G at u."""
    cond = 1.0 + q.gamma * u / (q.K - u)
    return 1e-12 * np.maximum(1.0, w) + 4.0 * EPS * cond * w


def check_round_trip(params: Params) -> VerifyCheck:
    worst = 0.0
    for gamma in (0.5, 1.0, 2.0):
        q = QFamily(K=params.q.K, gamma=gamma)
        u = np.linspace(0.0, q.K * (1.0 - 1e-6), ROUND_TRIP_SAMPLES)
        w = np.asarray(g_eval(q, u))
        back = np.asarray(g_inverse(q, w))
        excess = np.abs(np.asarray(g_eval(q, back)) - w) / round_trip_bound(q, back, w)
        worst = max(worst, float(excess.max()))
    return VerifyCheck(
        name="g_inverse_round_trip",
        passed=worst <= 1.0,
        detail=f"worst error / bound = {worst:.3g}",
    )


def check_gamma_one(params: Params) -> VerifyCheck:
    q = QFamily(K=1.0, gamma=1.0)
    w = np.logspace(-8, 8, 200)
    closed = float(np.max(np.abs(np.asarray(g_inverse(q, w)) - w / (1.0 + w))))
    flat = float(np.max(np.abs(np.asarray(diffusivity(q, np.linspace(0.0, 0.999, 200))) - 1.0)))
    return VerifyCheck(
        name="gamma_one_closed_forms",
        passed=closed <= 1e-12 and flat <= 4.0 * EPS,
        detail=f"G^-1 error {closed:.3g}, |D - 1| {flat:.3g}",
    )


def check_zero_lambda(params: Params, grid: Grid1D) -> VerifyCheck:
    v = solve_v_for_lambda(params, grid, 0.0)
    return VerifyCheck(
        name="zero_lambda_gives_constant",
        passed=bool(np.all(v.values == params.b)),
        detail=f"max |V - b| = {float(np.max(np.abs(v.values - params.b))):.3g}",
    )


def check_steady(params: Params, grid: Grid1D, tolerances: Tolerances) -> VerifyCheck:
    state = assemble_steady(params, grid, tolerances)
    problems = invariant_violations(state, params)
    lemma = lemma_checks(state)
    if lemma.max_gradient_excess > GRADIENT_SLACK:
        problems.append(f"(V')^2 exceeds U V^2 by {lemma.max_gradient_excess:.3g}")
    if state.mass_residual > tolerances.tol_mass:
        problems.append(f"mass residual {state.mass_residual:.3g}")
    return VerifyCheck(
        name="steady_invariants",
        passed=not problems,
        detail="; ".join(problems) or f"lambda = {state.lam:.6e}",
    )


def check_mass_map(params: Params, grid: Grid1D, tolerances: Tolerances) -> VerifyCheck:
    kappas = np.logspace(-6, 6, 13)
    lambdas = kappas * math.exp(-params.chi * params.b)
    sampled = mass_map(params, grid, lambdas.tolist(), tolerances)
    return VerifyCheck(
        name="mass_map_increasing",
        passed=sampled.increasing,
        detail=f"masses from {sampled.masses[0]:.3e} to {sampled.masses[-1]:.6f}",
    )


def check_conservation(params: Params, grid: Grid1D, scheme: SchemeConfig) -> VerifyCheck:
    short = scheme.model_copy(
        update={
            "t_end": CONSERVATION_STEPS * scheme.dt,
            "snapshot_times": (),
            "diagnostic_interval": 10 * scheme.dt,
        }
    )
    traj = run(params.model_copy(update={"m": None}), grid, short)
    return VerifyCheck(
        name="mass_conservation",
        passed=traj.max_mass_drift <= 1e-10 and not traj.bound_violations,
        detail=(
            f"drift {traj.max_mass_drift:.3g}, "
            f"{len(traj.bound_violations)} bound violation(s)"
        ),
    )


def check_zero_density(params: Params, grid: Grid1D, scheme: SchemeConfig) -> VerifyCheck:
    short = scheme.model_copy(
        update={
            "t_end": CONSERVATION_STEPS * scheme.dt,
            "snapshot_times": (),
            "diagnostic_interval": 10 * scheme.dt,
        }
    )
    bare = params.model_copy(update={"m": None})
    start = initial_state(bare, grid, "zero", "paper", allow_zero_mass=True)
    traj = run(bare, grid, short, initial=start)
    gaps = [params.b - s.v_min for s in traj.diagnostics]
    monotone = all(g1 <= g0 for g0, g1 in zip(gaps, gaps[1:]))
    zero = bool(np.all(traj.final.u.values == 0.0))
    return VerifyCheck(
        name="zero_density_run",
        passed=zero and monotone,
        detail=f"u stays zero: {zero}, sup|v - b| nonincreasing: {monotone}",
    )


def check_steady_order(params: Params, tolerances: Tolerances) -> VerifyCheck:
    report = refinement_study(SteadyResidualProblem(params, tolerances), [100, 200, 400, 800])
    passed = report.available and abs(report.order - ORDER_TARGET) <= ORDER_TOLERANCE
    return VerifyCheck(
        name="steady_residual_order",
        passed=passed,
        detail=f"orders {[round(o, 3) for o in report.orders]}",
    )


def check_second_difference_order() -> VerifyCheck:
    report = refinement_study(SecondDifferenceProblem(), [50, 100, 200, 400])
    passed = report.available and abs(report.order - ORDER_TARGET) <= ORDER_TOLERANCE
    return VerifyCheck(
        name="second_difference_order",
        passed=passed,
        detail=f"orders {[round(o, 3) for o in report.orders]}",
    )


def run_checks(
    params: Params, grid: Grid1D, scheme: SchemeConfig, tolerances: Tolerances
) -> List[VerifyCheck]:
    """
    Run every check; a check that raises is reported as failed with the error.

    params must carry the mass used by the steady checks.
    """
    checks: List[Tuple[str, Callable[[], VerifyCheck]]] = [
        ("g_inverse_round_trip", lambda: check_round_trip(params)),
        ("gamma_one_closed_forms", lambda: check_gamma_one(params)),
        ("zero_lambda_gives_constant", lambda: check_zero_lambda(params, grid)),
        ("steady_invariants", lambda: check_steady(params, grid, tolerances)),
        ("mass_map_increasing", lambda: check_mass_map(params, grid, tolerances)),
        ("mass_conservation", lambda: check_conservation(params, grid, scheme)),
        ("zero_density_run", lambda: check_zero_density(params, grid, scheme)),
        ("steady_residual_order", lambda: check_steady_order(params, tolerances)),
        ("second_difference_order", check_second_difference_order),
    ]
    results = []
    for name, check in checks:
        try:
            result = check()
        except LabError as exc:
            result = VerifyCheck(name=name, passed=False, detail=f"{type(exc).__name__}: {exc}")
        log = logger.info if result.passed else logger.error
        log(f"check {name}: {'passed' if result.passed else 'FAILED'} ({result.detail})")
        results.append(result)
    return results
