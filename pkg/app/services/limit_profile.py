"""
Closed-form profiles of the steady state as chi -> infinity.

U tends to a step from 0 to K at the interface x* = L - m/K. V is flat on
[0, x*] and solves V'' = K V on [x*, L] with V(L) = b and V'(x*) = 0.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..errors import InputDomainError
from ..models import LimitComparison, Params
from .grid import Grid1D, require_same_grid

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class LimitProfile:
    """Limit profile data for one parameter set."""

    params: Params
    interface: float
    plateau: float
    c1: float
    c2: float

    @property
    def root_k(self) -> float:
        return math.sqrt(self.params.q.K)


@dataclass(frozen=True)
class LimitSamples:
    """Limit profiles sampled on a set of abscissae."""

    x: np.ndarray
    u: np.ndarray
    v: np.ndarray


def limit_profile(params: Params) -> LimitProfile:
    """Build the limit profile for params (m required)."""
    if params.m is None:
        raise InputDomainError("limit profile needs a bacterial mass m")
    K, L, b, m = params.q.K, params.L, params.b, params.m
    rk = math.sqrt(K)
    # log(1 + e^{2m/sqrt K}) without overflow
    log_denom = float(np.logaddexp(0.0, 2.0 * m / rk))
    return LimitProfile(
        params=params,
        interface=L - m / K,
        plateau=2.0 * b * math.exp(m / rk - log_denom),
        c1=b * math.exp(rk * L - log_denom),
        c2=b * math.exp(-rk * L + 2.0 * m / rk - log_denom),
    )


def _positions(profile: LimitProfile, x: ArrayLike) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(arr > profile.params.L) or np.any(np.isnan(arr)):
        raise InputDomainError(f"positions must lie in [0, L={profile.params.L}]")
    return arr


def _finish(values: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(values) if np.ndim(like) == 0 else values


def u_limit(profile: LimitProfile, x: ArrayLike) -> ArrayLike:
    """0 left of the interface, K right of it, K/2 at the interface."""
    arr = _positions(profile, x)
    K = profile.params.q.K
    values = np.where(arr < profile.interface, 0.0, K)
    values = np.where(arr == profile.interface, 0.5 * K, values)
    return _finish(values, x)


def _right_branch(profile: LimitProfile, arr: np.ndarray) -> tuple:
    rk = profile.root_k
    L = profile.params.L
    # c1 e^{-rk x} and c2 e^{rk x}, written relative to x = L
    lo = profile.c1 * math.exp(-rk * L) * np.exp(rk * (L - arr))
    hi = profile.c2 * math.exp(rk * L) * np.exp(-rk * (L - arr))
    return lo, hi


def v_limit(profile: LimitProfile, x: ArrayLike) -> ArrayLike:
    """Plateau on [0, x*], C1 e^{-sqrt(K) x} + C2 e^{sqrt(K) x} on [x*, L]."""
    arr = _positions(profile, x)
    lo, hi = _right_branch(profile, arr)
    values = np.where(arr <= profile.interface, profile.plateau, lo + hi)
    return _finish(values, x)


def v_limit_derivative(profile: LimitProfile, x: ArrayLike) -> ArrayLike:
    """Zero on the plateau, one-sided from the right at the interface."""
    arr = _positions(profile, x)
    lo, hi = _right_branch(profile, arr)
    values = np.where(arr < profile.interface, 0.0, profile.root_k * (hi - lo))
    return _finish(values, x)


def sample_limit(profile: LimitProfile, xs: ArrayLike) -> LimitSamples:
    xs = np.asarray(xs, dtype=float)
    return LimitSamples(
        x=xs,
        u=np.asarray(u_limit(profile, xs)),
        v=np.asarray(v_limit(profile, xs)),
    )


def limit_ode_residual(profile: LimitProfile, grid: Grid1D) -> float:
    """
    max |second difference of V_inf - K V_inf 1{x > x*}| over interior cells
    whose stencil does not straddle the interface.
    """
    x = grid.centers
    v = np.asarray(v_limit(profile, x))
    d2 = (v[:-2] - 2.0 * v[1:-1] + v[2:]) / grid.dx ** 2
    inner = x[1:-1]
    right = inner > profile.interface
    source = np.where(right, profile.params.q.K * v[1:-1], 0.0)
    clear = (x[2:] < profile.interface) | (x[:-2] > profile.interface)
    if not np.any(clear):
        raise InputDomainError("grid too coarse to sample away from the interface")
    return float(np.max(np.abs(d2 - source)[clear]))


def crossing(x: np.ndarray, u: np.ndarray, level: float) -> Optional[float]:
    """First upward crossing of level, linearly interpolated; None if absent."""
    if u[0] >= level:
        return None
    above = np.flatnonzero(u >= level)
    if above.size == 0:
        return None
    j = int(above[0])
    return float(x[j - 1] + (level - u[j - 1]) / (u[j] - u[j - 1]) * (x[j] - x[j - 1]))


def compare_to_limit(state, profile: LimitProfile) -> LimitComparison:
    """L1 distance of U, sup distance of V and the layer metrics of U."""
    grid = require_same_grid(state.U, state.V)
    if not math.isclose(grid.L, profile.params.L):
        raise InputDomainError("state and limit profile live on different domains")
    x = grid.centers
    u, v = state.U.values, state.V.values
    K = profile.params.q.K

    low = crossing(x, u, 0.1 * K)
    high = crossing(x, u, 0.9 * K)
    return LimitComparison(
        l1_u=float(grid.dx * np.sum(np.abs(u - np.asarray(u_limit(profile, x))))),
        sup_v=float(np.max(np.abs(v - np.asarray(v_limit(profile, x))))),
        width=None if low is None or high is None else high - low,
        midpoint=crossing(x, u, 0.5 * K),
    )
