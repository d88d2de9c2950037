"""Health check endpoint."""

from fastapi import APIRouter

from ..config import get_settings
from ..models import HealthResponse

router = APIRouter()

VERSION = "1.0.0"


@router.get("/health", response_model=HealthResponse)
async def health_check():
    """Liveness plus the solver defaults this instance runs with."""
    settings = get_settings()
    return HealthResponse(
        status="healthy",
        version=VERSION,
        cells=settings.cells,
        tol_mass=settings.tol_mass,
        sweep_workers=settings.sweep_workers,
    )
