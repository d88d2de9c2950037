"""Pydantic models for parameters, solver settings and reports."""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class QFamily(BaseModel):
    """Squeezing probability q(u) = ((1 - u/K)^+)^gamma."""

    model_config = ConfigDict(frozen=True)

    K: float = Field(1.0, gt=0, description="Crowding capacity")
    gamma: float = Field(1.0, gt=0, description="Exponent of the prototype family")


class Params(BaseModel):
    """Physical parameters of the chemotaxis-consumption system."""

    model_config = ConfigDict(frozen=True)

    chi: float = Field(..., gt=0, description="Chemotactic coefficient")
    L: float = Field(1.0, gt=0, description="Domain length")
    b: float = Field(1.0, gt=0, description="Oxygen level at x = L")
    m: Optional[float] = Field(None, description="Bacterial mass, 0 < m < K*L")
    q: QFamily = Field(default_factory=QFamily)

    @model_validator(mode="after")
    def _check_mass(self) -> "Params":
        if self.m is not None and not (0.0 < self.m < self.q.K * self.L):
            raise ValueError(
                f"mass m={self.m} must lie in (0, K*L) = (0, {self.q.K * self.L})"
            )
        return self

    @property
    def capacity_mass(self) -> float:
        """Largest admissible mass K*L."""
        return self.q.K * self.L

    def with_mass(self, m: float) -> "Params":
        """Copy with a different mass, validated."""
        return Params(chi=self.chi, L=self.L, b=self.b, m=m, q=self.q)

    def with_chi(self, chi: float) -> "Params":
        """Copy with a different chemotactic coefficient."""
        return Params(chi=chi, L=self.L, b=self.b, m=self.m, q=self.q)


class Tolerances(BaseModel):
    """Tolerances and caps of the steady-state construction."""

    model_config = ConfigDict(frozen=True)

    tol_v: float = Field(1e-10, gt=0)
    tol_mass: float = Field(1e-8, gt=0)
    g_tol: float = Field(1e-14, gt=0)
    max_iterations: int = Field(10_000, gt=0)
    max_bisection_steps: int = Field(200, gt=0)
    newton: bool = False
    newton_switch_gap: float = Field(1e-3, gt=0)


class SchemeConfig(BaseModel):
    """Time-stepping configuration for the evolution solver."""

    model_config = ConfigDict(frozen=True)

    dt: float = Field(5e-4, gt=0)
    t_end: float = Field(100.0, gt=0)
    cfl_safety: float = Field(0.9, gt=0, le=1)
    snapshot_times: Tuple[float, ...] = (25.0, 50.0, 100.0)
    upwind: bool = True
    chemotaxis: Literal["semi_implicit", "explicit"] = "semi_implicit"
    diagnostic_interval: float = Field(0.5, gt=0)

    @field_validator("snapshot_times")
    @classmethod
    def _sorted_snapshots(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if list(value) != sorted(value):
            raise ValueError("snapshot_times must be sorted")
        return value

    @model_validator(mode="after")
    def _snapshots_in_range(self) -> "SchemeConfig":
        for t in self.snapshot_times:
            if t < 0 or t > self.t_end:
                raise ValueError(f"snapshot time {t} outside [0, t_end={self.t_end}]")
        return self

    @property
    def diagnostic_stride(self) -> int:
        """Steps between two diagnostic samples."""
        return max(1, int(round(self.diagnostic_interval / self.dt)))


# Reports


class SteadyReport(BaseModel):
    """JSON report of an assembled steady state."""

    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(alias="lambda")
    log_lambda: float
    mass_residual: float
    ode_residual: float
    flux_residual: float
    iterations: int
    bisection_steps: int
    n: int
    params: Params


class LimitComparison(BaseModel):
    """Distance of a finite-chi steady state to its limit profile."""

    l1_u: float
    sup_v: float
    width: Optional[float] = None
    midpoint: Optional[float] = None


class PerturbationNorms(BaseModel):
    """Norms of the anti-derivative perturbation variables."""

    phi_h2: float
    psi_h1: float
    total: float
    phi_endpoint: float


class DecayReport(BaseModel):
    """Least-squares exponential fit dist ~ c * exp(-alpha * t)."""

    alpha: float
    c: float
    r2: float = Field(..., ge=0, le=1)
    window: Tuple[float, float]
    samples: int = Field(..., ge=8)


class SweepRow(BaseModel):
    """One row of a chi sweep table."""

    chi: float
    lambda_: Optional[float] = Field(None, alias="lambda")
    plateau_v0: Optional[float] = None
    midpoint: Optional[float] = None
    width: Optional[float] = None
    l1_u_vs_limit: Optional[float] = None
    alpha: Optional[float] = None
    error: Optional[str] = None

    model_config = ConfigDict(populate_by_name=True)


class RefinementReport(BaseModel):
    """Observed order of accuracy from successive error ratios."""

    ns: List[int]
    errors: List[float]
    orders: List[float]
    order: Optional[float] = None
    available: bool


class VerifyCheck(BaseModel):
    """Outcome of one invariant check of the verify suite."""

    name: str
    passed: bool
    detail: str = ""


class HealthResponse(BaseModel):
    """Health check response with the default solver settings."""

    status: str
    version: str
    cells: int
    tol_mass: float
    sweep_workers: int


class ErrorResponse(BaseModel):
    """Error response model."""

    error: str
    message: str
    details: dict = Field(default_factory=dict)


# HTTP request/response bodies


class SteadyRequest(BaseModel):
    """Request for a steady-state computation."""

    params: Params
    cells: int = Field(200, ge=4)
    tolerances: Tolerances = Field(default_factory=Tolerances)


class ProfileResponse(BaseModel):
    """Sampled profiles on a set of abscissae."""

    x: List[float]
    U: List[float]
    V: List[float]


class SteadyResponse(BaseModel):
    """Steady report plus the sampled profiles."""

    report: SteadyReport
    profile: ProfileResponse


class LimitRequest(BaseModel):
    """Request for sampled chi -> infinity limit profiles."""

    params: Params
    cells: int = Field(200, ge=4)


class SweepRequest(BaseModel):
    """Request for a chi sweep."""

    params: Params
    cells: int = Field(200, ge=4)
    chis: List[float] = Field(..., min_length=1)
    tolerances: Tolerances = Field(default_factory=Tolerances)


class SweepResponse(BaseModel):
    """Response for a chi sweep."""

    rows: List[SweepRow]
    count: int
