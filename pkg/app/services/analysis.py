"""
Diagnostics built on the solvers: perturbation norms, exponential decay fits,
chi sweeps against the limit profile and grid refinement studies.
"""

import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from ..errors import FitError, InputDomainError, LabError
from ..models import (
    DecayReport,
    Params,
    PerturbationNorms,
    RefinementReport,
    SchemeConfig,
    SweepRow,
    Tolerances,
)
from .evolution import DiagnosticSample, ProfileSpec, discrete_equilibrium, initial_state, run
from .grid import (
    Field,
    Grid1D,
    antiderivative,
    integrate,
    norm,
    require_same_grid,
    restrict,
    right_boundary_value,
)
from .limit_profile import compare_to_limit, limit_profile
from .steady_solver import SteadyState, assemble_steady

logger = logging.getLogger(__name__)

MIN_FIT_SAMPLES = 8
PSI_BOUNDARY_TOL = 1e-3

DistanceKey = Literal["dist_h1", "dist_eq"]


def perturbation_norms(
    u: Field, v: Field, steady: SteadyState, psi_boundary_tol: float = PSI_BOUNDARY_TOL
) -> PerturbationNorms:
    """
    Norms of phi = antiderivative(u - U) in discrete H2 and psi = v - V in H1.

    psi must vanish at x = L; its boundary value is extrapolated quadratically
    from the last three cells.
    """
    grid = require_same_grid(u, v, steady.U, steady.V)
    dx = grid.dx
    du = u - steady.U
    phi = antiderivative(du)
    d2 = np.diff(du.values) / dx
    phi_h2 = math.sqrt(
        dx * float(np.sum(phi.values ** 2))
        + dx * float(np.sum(du.values ** 2))
        + dx * float(np.sum(d2 * d2))
    )

    psi = v - steady.V
    psi_end = right_boundary_value(psi)
    if abs(psi_end) > psi_boundary_tol:
        raise InputDomainError(
            f"v - V must vanish at x = L, extrapolated value {psi_end:.3e}",
            {"tolerance": psi_boundary_tol},
        )
    psi_h1 = norm(psi, "H1")
    return PerturbationNorms(
        phi_h2=phi_h2,
        psi_h1=psi_h1,
        total=phi_h2 ** 2 + psi_h1 ** 2,
        phi_endpoint=float(phi.values[-1]),
    )


def fit_exponential(
    times: Sequence[float], distances: Sequence[Optional[float]], window: Tuple[float, float]
) -> DecayReport:
    """Least-squares line through (t, log dist) restricted to window."""
    t_a, t_b = window
    if not t_a < t_b:
        raise InputDomainError(f"fit window [{t_a}, {t_b}] is empty")
    picked = [(t, d) for t, d in zip(times, distances) if t_a <= t <= t_b]
    if len(picked) < MIN_FIT_SAMPLES:
        raise InputDomainError(
            f"decay fit needs at least {MIN_FIT_SAMPLES} samples in [{t_a}, {t_b}], "
            f"got {len(picked)}"
        )
    bad = [t for t, d in picked if d is None or not d > 0]
    if bad:
        raise FitError(
            "distances must be positive to take logarithms",
            {"first_bad_t": bad[0], "count": len(bad)},
        )
    t = np.array([p[0] for p in picked])
    y = np.log(np.array([p[1] for p in picked], dtype=float))
    fit = linregress(t, y)
    residual = y - (fit.intercept + fit.slope * t)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(residual ** 2)) / ss_tot
    return DecayReport(
        alpha=-float(fit.slope),
        c=math.exp(fit.intercept),
        r2=min(max(r2, 0.0), 1.0),
        window=(t_a, t_b),
        samples=len(picked),
    )


def default_window(diagnostics: Sequence[DiagnosticSample]) -> Tuple[float, float]:
    t_end = diagnostics[-1].t
    return 0.2 * t_end, 0.8 * t_end


def decay_fit(
    diagnostics: Sequence[DiagnosticSample],
    window: Optional[Tuple[float, float]] = None,
    key: DistanceKey = "dist_h1",
) -> DecayReport:
    """Fit the `key` distance ~ c exp(-alpha t); default window [0.2, 0.8] * t_end."""
    if not diagnostics:
        raise InputDomainError("no diagnostic samples to fit")
    window = window or default_window(diagnostics)
    return fit_exponential(
        [s.t for s in diagnostics], [getattr(s, key) for s in diagnostics], window
    )


def exponential_window(
    diagnostics: Sequence[DiagnosticSample],
    key: DistanceKey = "dist_eq",
    floor_factor: float = 100.0,
    head_fraction: float = 0.1,
) -> Tuple[float, float]:
    """
    Window over which the `key` distance decays cleanly.

    It opens at the first sample below head_fraction times the first positive
    distance and closes at the last sample of the following run that stays at
    or above floor_factor times the smallest positive distance. Zero distances
    count as below the floor. Raises FitError when no such window holds
    MIN_FIT_SAMPLES samples.
    """
    dists = [getattr(s, key) for s in diagnostics]
    if not dists or any(d is None for d in dists):
        raise FitError(f"diagnostics carry no {key} distances")
    positive = [d for d in dists if d > 0]
    if not positive:
        raise FitError(f"all {key} distances vanish")
    head = head_fraction * positive[0]
    floor = min(positive)
    first = next((i for i, d in enumerate(dists) if 0 < d <= head), None)
    if first is None:
        raise FitError(f"{key} never drops below {head:.3e}", {"key": key})
    last = first
    for i in range(first, len(dists)):
        if not dists[i] >= floor_factor * floor:
            break
        last = i
    count = last - first + 1 if dists[first] >= floor_factor * floor else 0
    if count < MIN_FIT_SAMPLES:
        raise FitError(
            f"only {count} samples of {key} between {head:.3e} and the floor band "
            f"{floor_factor:g} x {floor:.3e}",
            {"key": key, "samples": count},
        )
    return diagnostics[first].t, diagnostics[last].t


def _sweep_entry(
    params: Params,
    grid: Grid1D,
    tolerances: Tolerances,
    scheme: Optional[SchemeConfig],
    u0_spec: ProfileSpec,
    v0_spec: ProfileSpec,
) -> SweepRow:
    try:
        state = assemble_steady(params, grid, tolerances)
        comparison = compare_to_limit(state, limit_profile(params))
        row = SweepRow(
            chi=params.chi,
            lambda_=state.lam,
            plateau_v0=float(state.V.values[0]),
            midpoint=comparison.midpoint,
            width=comparison.width,
            l1_u_vs_limit=comparison.l1_u,
        )
    except LabError as exc:
        logger.warning(f"sweep entry chi={params.chi} failed: {exc}")
        return SweepRow(chi=params.chi, error=f"{type(exc).__name__}: {exc}")

    if scheme is None:
        return row
    try:
        start = initial_state(params.model_copy(update={"m": None}), grid, u0_spec, v0_spec)
        reference = assemble_steady(params.with_mass(integrate(start.u)), grid, tolerances)
        equilibrium = discrete_equilibrium(params, start, scheme)
        traj = run(params, grid, scheme, steady=reference, initial=start, equilibrium=equilibrium)
        window = exponential_window(traj.diagnostics, "dist_eq")
        fit = decay_fit(traj.diagnostics, window, key="dist_eq")
        return row.model_copy(update={"alpha": fit.alpha})
    except LabError as exc:
        logger.warning(f"decay fit for chi={params.chi} skipped: {exc}")
        return row.model_copy(update={"error": f"{type(exc).__name__}: {exc}"})


def chi_sweep(
    base_params: Params,
    grid: Grid1D,
    chis: Sequence[float],
    tolerances: Optional[Tolerances] = None,
    max_workers: int = 1,
    scheme: Optional[SchemeConfig] = None,
    u0_spec: ProfileSpec = "paper",
    v0_spec: ProfileSpec = "paper",
) -> List[SweepRow]:
    """
    One steady state and limit comparison per chi, rows in input order.

    Failures are recorded in the row. With a scheme, each chi is also evolved
    from the initial data and the fitted decay rate is recorded.
    """
    chis = [float(c) for c in chis]
    if not chis:
        raise InputDomainError("chi sweep needs at least one chi")
    if any(c <= 0 for c in chis) or chis != sorted(chis):
        raise InputDomainError("chis must be positive and sorted ascending", {"chis": chis})
    tolerances = tolerances or Tolerances()

    def entry(chi: float) -> SweepRow:
        return _sweep_entry(
            base_params.with_chi(chi), grid, tolerances, scheme, u0_spec, v0_spec
        )

    logger.info(f"chi sweep over {len(chis)} values with {max_workers} worker(s)")
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        return list(pool.map(entry, chis))


def observed_order(ns: Sequence[int], errors: Sequence[float]) -> RefinementReport:
    """
    Orders log(e_i / e_{i+1}) / log(n_{i+1} / n_i); the reported order is the
    finest pair's. Unavailable unless the errors are positive and strictly
    decreasing.
    """
    ns, errors = list(ns), [float(e) for e in errors]
    positive = all(e > 0 and math.isfinite(e) for e in errors)
    orders = []
    if positive:
        orders = [
            math.log(e0 / e1) / math.log(n1 / n0)
            for (n0, e0), (n1, e1) in zip(zip(ns, errors), zip(ns[1:], errors[1:]))
        ]
    available = positive and len(errors) >= 2 and all(
        e1 < e0 for e0, e1 in zip(errors, errors[1:])
    )
    return RefinementReport(
        ns=ns,
        errors=errors,
        orders=orders,
        order=orders[-1] if available else None,
        available=available,
    )


class RefinementProblem(ABC):
    """An error functional evaluated on a doubling sequence of grids."""

    @abstractmethod
    def errors(self, ns: Sequence[int]) -> Tuple[List[int], List[float]]:
        """Cell counts the errors belong to, and the errors."""


@dataclass
class SteadyResidualProblem(RefinementProblem):
    """ode_residual of the assembled steady state."""

    params: Params
    tolerances: Tolerances = field(default_factory=Tolerances)

    def errors(self, ns):
        values = [
            assemble_steady(self.params, Grid1D(self.params.L, n), self.tolerances).ode_residual
            for n in ns
        ]
        return list(ns), values


@dataclass
class EvolvedSolutionProblem(RefinementProblem):
    """L2 differences of u at t_end between successive grids, fine restricted to coarse."""

    params: Params
    scheme: SchemeConfig
    u0_spec: ProfileSpec = "paper"
    v0_spec: ProfileSpec = "paper"

    def errors(self, ns):
        finals = []
        for n in ns:
            grid = Grid1D(self.params.L, n)
            start = initial_state(
                self.params.model_copy(update={"m": None}), grid, self.u0_spec, self.v0_spec
            )
            finals.append(run(self.params, grid, self.scheme, initial=start).final.u)
        values = [
            norm(restrict(fine, coarse.grid) - coarse, "L2")
            for coarse, fine in zip(finals, finals[1:])
        ]
        return list(ns[:-1]), values


@dataclass
class SecondDifferenceProblem(RefinementProblem):
    """
    Error of the central second difference of a manufactured field, zero on
    the two boundary cells, measured in the chosen norm.
    """

    fn: Callable[[np.ndarray], np.ndarray] = np.sin
    second: Callable[[np.ndarray], np.ndarray] = lambda x: -np.sin(x)
    L: float = math.pi
    kind: str = "H1"

    def errors(self, ns):
        values = []
        for n in ns:
            grid = Grid1D(self.L, n)
            f = self.fn(grid.centers)
            err = np.zeros(n)
            err[1:-1] = (f[:-2] - 2.0 * f[1:-1] + f[2:]) / grid.dx ** 2 - self.second(
                grid.centers[1:-1]
            )
            values.append(norm(Field(grid, err), self.kind))
        return list(ns), values


def refinement_study(problem: RefinementProblem, ns: Sequence[int]) -> RefinementReport:
    """Observed order of problem's error functional over doubling grids."""
    ns = [int(n) for n in ns]
    if len(ns) < 3 or any(n1 != 2 * n0 for n0, n1 in zip(ns, ns[1:])):
        raise InputDomainError(
            "refinement needs at least three cell counts, each double the last", {"ns": ns}
        )
    used, errors = problem.errors(ns)
    report = observed_order(used, errors)
    if report.available:
        logger.info(f"observed order {report.order:.3f} from errors {errors}")
    else:
        logger.warning(f"observed order unavailable, errors {errors}")
    return report
