"""Application settings from the environment and run configuration files."""

from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError
from .models import Params, QFamily, SchemeConfig, Tolerances


class Settings(BaseSettings):
    """Defaults loaded from environment variables (prefix CHEMOLAB_) or .env."""

    model_config = SettingsConfigDict(
        env_prefix="CHEMOLAB_", env_file=".env", env_file_encoding="utf-8"
    )

    # Logging level
    log_level: str = "INFO"

    # Directory for run artifacts when no --out-dir is given
    out_dir: str = "./out"

    # Solver defaults used when a config leaves them out
    cells: int = 200
    tol_mass: float = 1e-8
    tol_v: float = 1e-10
    g_inverse_tol: float = 1e-14
    max_picard_iterations: int = 10_000

    # Threads for chi sweeps
    sweep_workers: int = 1


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


ProfileValue = Union[str, List[float]]

LIST_KEYS = {"snapshots", "chis", "refine_cells", "fit_window"}
PROFILE_KEYS = {"u0", "v0"}


class RunConfig(BaseModel):
    """Validated contents of a flat key = value run configuration."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    capacity: float = Field(1.0, gt=0)
    gamma: float = Field(1.0, gt=0)
    chi: float = Field(..., gt=0)
    length: float = Field(1.0, gt=0)
    boundary_b: float = Field(1.0, gt=0)
    mass: Optional[float] = None
    cells: int = Field(default_factory=lambda: get_settings().cells, ge=4)
    dt: float = Field(5e-4, gt=0)
    t_end: float = Field(100.0, gt=0)
    snapshots: Optional[List[float]] = None
    chis: List[float] = Field(default_factory=lambda: [20.0, 40.0, 80.0, 160.0, 320.0])
    refine_cells: List[int] = Field(default_factory=lambda: [100, 200, 400, 800])
    tol_mass: float = Field(default_factory=lambda: get_settings().tol_mass, gt=0)
    tol_v: float = Field(default_factory=lambda: get_settings().tol_v, gt=0)
    upwind: bool = True
    u0: ProfileValue = "paper"
    v0: ProfileValue = "paper"
    out_dir: Optional[str] = None
    diagnostic_interval: float = Field(0.5, gt=0)
    cfl_safety: float = Field(0.9, gt=0, le=1)
    chemotaxis: Literal["semi_implicit", "explicit"] = "semi_implicit"
    newton: bool = False
    allow_zero_mass: bool = False
    fit_window: Optional[Tuple[float, float]] = None
    sweep_workers: int = Field(default_factory=lambda: get_settings().sweep_workers, ge=1)

    @field_validator("mass")
    @classmethod
    def _mass_in_range(cls, value: Optional[float], info: ValidationInfo) -> Optional[float]:
        capacity = info.data.get("capacity")
        length = info.data.get("length")
        if value is not None and capacity and length and not 0.0 < value < capacity * length:
            raise ValueError(f"mass must lie in (0, K*L) = (0, {capacity * length})")
        return value

    @field_validator("snapshots")
    @classmethod
    def _snapshots_in_range(cls, value: Optional[List[float]], info: ValidationInfo):
        t_end = info.data.get("t_end")
        if value is None:
            return value
        if value != sorted(value):
            raise ValueError("snapshots must be sorted")
        if t_end is not None and any(t < 0 or t > t_end for t in value):
            raise ValueError(f"snapshots must lie in [0, t_end={t_end}]")
        return value

    @field_validator("chis")
    @classmethod
    def _chis_sorted(cls, value: List[float]) -> List[float]:
        if not value or any(c <= 0 for c in value) or value != sorted(value):
            raise ValueError("chis must be positive and sorted ascending")
        return value

    def params(self) -> Params:
        """Physical parameters; m stays unset when the config gives no mass."""
        return Params(
            chi=self.chi,
            L=self.length,
            b=self.boundary_b,
            m=self.mass,
            q=QFamily(K=self.capacity, gamma=self.gamma),
        )

    def scheme(self) -> SchemeConfig:
        snapshots = self.snapshots
        if snapshots is None:
            snapshots = [0.25 * self.t_end, 0.5 * self.t_end, self.t_end]
        return SchemeConfig(
            dt=self.dt,
            t_end=self.t_end,
            cfl_safety=self.cfl_safety,
            snapshot_times=tuple(snapshots),
            upwind=self.upwind,
            chemotaxis=self.chemotaxis,
            diagnostic_interval=self.diagnostic_interval,
        )

    def tolerances(self) -> Tolerances:
        settings = get_settings()
        return Tolerances(
            tol_v=self.tol_v,
            tol_mass=self.tol_mass,
            g_tol=settings.g_inverse_tol,
            max_iterations=settings.max_picard_iterations,
            newton=self.newton,
        )


def _coerce(key: str, raw: str, line: int):
    if raw == "":
        raise ConfigError("empty value", key=key, line=line)
    if key in LIST_KEYS:
        return [part.strip() for part in raw.split(",")]
    if key in PROFILE_KEYS:
        parts = [part.strip() for part in raw.split(",")]
        try:
            return [float(part) for part in parts]
        except ValueError:
            if len(parts) > 1:
                raise ConfigError("polynomial coefficients must be numbers", key=key, line=line)
            return raw
    return raw


def parse_config(text: str) -> RunConfig:
    """
    Parse a flat key = value configuration.

    '#' starts a comment, lists are comma separated. Unknown or duplicate keys,
    unparsable values and invalid combinations raise ConfigError naming the
    key and line.
    """
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=number)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in RunConfig.model_fields:
            raise ConfigError("unknown key", key=key or "<empty>", line=number)
        if key in values:
            raise ConfigError(f"duplicate key, first set on line {lines[key]}", key=key, line=number)
        values[key] = _coerce(key, raw, number)
        lines[key] = number

    try:
        return RunConfig(**values)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = str(first["loc"][0]) if first["loc"] else None
        raise ConfigError(first["msg"], key=key, line=lines.get(key)) from exc


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read and parse a configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    return parse_config(text)
