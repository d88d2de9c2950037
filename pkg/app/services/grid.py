"""Uniform cell-centered mesh, sampled fields and the discrete calculus on them."""

from dataclasses import dataclass
from typing import Callable, Literal, Union

import numpy as np

from ..errors import InputDomainError

NormKind = Literal["L2", "H1", "Linf"]


@dataclass(frozen=True)
class Grid1D:
    """n cells of width dx = L/n on [0, L], values live at cell centers."""

    L: float
    n: int

    def __post_init__(self):
        if not self.L > 0:
            raise InputDomainError(f"domain length must be positive, got {self.L}")
        if int(self.n) != self.n or self.n < 4:
            raise InputDomainError(f"grid needs at least 4 cells, got {self.n}")

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        """The n + 1 face positions, endpoints included."""
        return np.arange(self.n + 1) * self.dx

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        """Evaluate fn at the cell centers."""
        return Field(self, np.broadcast_to(fn(self.centers), (self.n,)))

    def constant(self, value: float) -> "Field":
        return Field(self, np.full(self.n, float(value)))


@dataclass(frozen=True, eq=False)
class Field:
    """One scalar per cell center of a grid; the values are read-only."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise InputDomainError(
                f"field has shape {values.shape}, grid expects ({self.grid.n},)"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __sub__(self, other: "Field") -> "Field":
        require_same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __add__(self, other: "Field") -> "Field":
        require_same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return Field(self.grid, fn(self.values))


def require_same_grid(*fields: Field) -> Grid1D:
    """Return the common grid or raise."""
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise InputDomainError(
                "fields live on different grids",
                {"expected": [grid.L, grid.n], "got": [f.grid.L, f.grid.n]},
            )
    return grid


@dataclass(frozen=True)
class Mirror:
    """Zero-gradient boundary: the ghost cell copies its neighbour."""


@dataclass(frozen=True)
class Dirichlet:
    """Boundary value imposed at the face: ghost = 2 * value - neighbour."""

    value: float


BoundaryRule = Union[Mirror, Dirichlet]
MIRROR = Mirror()


def _ghost(rule: BoundaryRule, neighbour: float) -> float:
    if isinstance(rule, Dirichlet):
        return 2.0 * rule.value - neighbour
    return neighbour


def integrate(f: Field) -> float:
    """Midpoint rule dx * sum(f_j)."""
    return float(f.grid.dx * np.sum(f.values))


def face_gradient(
    f: Field, left: BoundaryRule = MIRROR, right: BoundaryRule = MIRROR
) -> np.ndarray:
    """Differences at the n + 1 faces; boundary faces use the ghost rules."""
    dx = f.grid.dx
    vals = f.values
    grad = np.empty(f.grid.n + 1)
    grad[1:-1] = np.diff(vals) / dx
    grad[0] = (vals[0] - _ghost(left, vals[0])) / dx
    grad[-1] = (_ghost(right, vals[-1]) - vals[-1]) / dx
    return grad


def norm(f: Field, kind: NormKind = "L2") -> float:
    """Discrete L2, H1 (interior faces only) or max norm."""
    dx = f.grid.dx
    vals = f.values
    if kind == "Linf":
        return float(np.max(np.abs(vals)))
    l2_sq = dx * float(np.sum(vals * vals))
    if kind == "L2":
        return float(np.sqrt(l2_sq))
    if kind == "H1":
        grad = np.diff(vals) / dx
        return float(np.sqrt(l2_sq + dx * float(np.sum(grad * grad))))
    raise InputDomainError(f"unknown norm kind '{kind}'")


def right_boundary_value(f: Field) -> float:
    """Value at x = L from the quadratic through the last three cell centers."""
    vals = f.values
    return float((15.0 * vals[-1] - 10.0 * vals[-2] + 3.0 * vals[-3]) / 8.0)


def antiderivative(f: Field) -> Field:
    """phi_j = dx * sum_{k<=j} f_k, read as the value at the right face of cell j."""
    return Field(f.grid, f.grid.dx * np.cumsum(f.values))


def restrict(f: Field, coarse: Grid1D) -> Field:
    """Average pairs of cells onto a grid with half as many cells."""
    if f.grid.n != 2 * coarse.n or not np.isclose(f.grid.L, coarse.L):
        raise InputDomainError("restriction needs a grid with exactly half the cells")
    return Field(coarse, 0.5 * (f.values[0::2] + f.values[1::2]))
