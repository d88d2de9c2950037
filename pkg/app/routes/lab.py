"""Steady-state, limit-profile and chi-sweep endpoints."""

import logging

from fastapi import APIRouter

from ..config import get_settings
from ..models import (
    LimitRequest,
    ProfileResponse,
    SteadyRequest,
    SteadyResponse,
    SweepRequest,
    SweepResponse,
)
from ..services.analysis import chi_sweep
from ..services.grid import Grid1D
from ..services.limit_profile import limit_profile, sample_limit
from ..services.steady_solver import assemble_steady

logger = logging.getLogger(__name__)

router = APIRouter(tags=["Lab"])


# Computations are CPU bound, so these handlers are plain functions and run
# in FastAPI's threadpool.


@router.post("/steady", response_model=SteadyResponse, response_model_by_alias=True)
def compute_steady(request: SteadyRequest):
    """Assemble the steady state for the given mass and return its profiles."""
    grid = Grid1D(request.params.L, request.cells)
    state = assemble_steady(request.params, grid, request.tolerances)
    logger.info(f"steady request chi={request.params.chi} n={grid.n} lambda={state.lam:.6e}")
    return SteadyResponse(
        report=state.report(request.params),
        profile=ProfileResponse(
            x=grid.centers.tolist(), U=state.U.values.tolist(), V=state.V.values.tolist()
        ),
    )


@router.post("/limit", response_model=ProfileResponse)
def compute_limit(request: LimitRequest):
    """Sample the chi -> infinity profiles at the grid faces."""
    grid = Grid1D(request.params.L, request.cells)
    samples = sample_limit(limit_profile(request.params), grid.faces)
    return ProfileResponse(x=samples.x.tolist(), U=samples.u.tolist(), V=samples.v.tolist())


@router.post("/sweep", response_model=SweepResponse, response_model_by_alias=True)
def compute_sweep(request: SweepRequest):
    """Steady state and limit comparison for each chi."""
    rows = chi_sweep(
        request.params,
        Grid1D(request.params.L, request.cells),
        request.chis,
        tolerances=request.tolerances,
        max_workers=get_settings().sweep_workers,
    )
    return SweepResponse(rows=rows, count=len(rows))
