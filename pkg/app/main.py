"""FastAPI application entry point."""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .config import get_settings
from .errors import InputDomainError, LabError
from .models import ErrorResponse
from .routes import health, lab

settings = get_settings()

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper()),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan events."""
    logger.info(f"Chemotaxis lab API starting (sweep workers: {settings.sweep_workers})")
    yield
    logger.info("Chemotaxis lab API shutting down")


app = FastAPI(
    title="Chemotaxis Lab API",
    description="Steady states and limit profiles of a volume-filling chemotaxis-consumption model",
    version="1.0.0",
    lifespan=lifespan,
)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(LabError)
async def lab_error_handler(request: Request, exc: LabError):
    """Input errors map to 400, solver and consistency failures to 422."""
    code = (
        status.HTTP_400_BAD_REQUEST
        if isinstance(exc, InputDomainError)
        else status.HTTP_422_UNPROCESSABLE_ENTITY
    )
    logger.warning(f"{request.url.path} failed: {exc}")
    return JSONResponse(status_code=code, content=ErrorResponse(**exc.to_dict()).model_dump())


@app.exception_handler(RequestValidationError)
async def validation_error_handler(request: Request, exc: RequestValidationError):
    return JSONResponse(
        status_code=status.HTTP_400_BAD_REQUEST,
        content=ErrorResponse(
            error="InputDomainError",
            message="request failed validation",
            details={"errors": jsonable_errors(exc)},
        ).model_dump(),
    )


def jsonable_errors(exc: RequestValidationError) -> list:
    return [
        {"loc": [str(part) for part in err.get("loc", ())], "msg": str(err.get("msg", ""))}
        for err in exc.errors()
    ]


# Include routers
app.include_router(health.router)
app.include_router(lab.router)


@app.get("/")
async def root():
    """Root endpoint redirect to docs."""
    return {"message": "Chemotaxis Lab API", "docs": "/docs"}
