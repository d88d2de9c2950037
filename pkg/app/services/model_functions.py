"""Squeezing probability and the pointwise nonlinearities derived from it.

All functions accept scalars or numpy arrays and return the same shape.
D, G and G^-1 are restricted to the sub-capacity branch 0 <= u < K.
"""

import logging
from typing import Union

import numpy as np

from ..errors import CapacityProximityError, InputDomainError, SolverError
from ..models import QFamily

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Upper end of the bracket for G^-1, relative to K.
CAPACITY_MARGIN = 1e-14
DEFAULT_G_TOL = 1e-14
DEFAULT_G_MAX_ITER = 200


def _as_array(u: ArrayLike) -> np.ndarray:
    return np.asarray(u, dtype=float)


def _finish(values: np.ndarray, like: ArrayLike) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(values)
    return values


def _require_nonnegative(u: np.ndarray, name: str = "u") -> None:
    if np.any(u < 0) or np.any(np.isnan(u)):
        bad = np.flatnonzero(~(u >= 0))[:10].tolist() if u.ndim else [0]
        raise InputDomainError(f"{name} must be nonnegative", {"indices": bad})


def _require_subcapacity(q: QFamily, u: np.ndarray) -> None:
    _require_nonnegative(u)
    if np.any(u >= q.K):
        bad = np.flatnonzero(u >= q.K)[:10].tolist() if u.ndim else [0]
        raise InputDomainError(
            f"density must stay below capacity K={q.K}", {"indices": bad}
        )


def q_eval(q: QFamily, u: ArrayLike) -> ArrayLike:
    """q(u) = ((1 - u/K)^+)^gamma, zero at and above capacity."""
    arr = _as_array(u)
    _require_nonnegative(arr)
    free = np.clip(1.0 - arr / q.K, 0.0, None)
    return _finish(free ** q.gamma, u)


def diffusivity(q: QFamily, u: ArrayLike) -> ArrayLike:
    """D(u) = q(u) - q'(u) u in the closed form (1 - u/K)^(gamma-1) (1 + (gamma-1) u/K)."""
    arr = _as_array(u)
    _require_subcapacity(q, arr)
    ratio = arr / q.K
    values = (1.0 - ratio) ** (q.gamma - 1.0) * (1.0 + (q.gamma - 1.0) * ratio)
    return _finish(values, u)


def sensitivity(q: QFamily, u: ArrayLike) -> ArrayLike:
    """S(u) = q(u) u."""
    arr = _as_array(u)
    return _finish(_as_array(q_eval(q, arr)) * arr, u)


def g_eval(q: QFamily, u: ArrayLike) -> ArrayLike:
    """G(u) = u / q(u), strictly increasing on [0, K)."""
    arr = _as_array(u)
    _require_subcapacity(q, arr)
    return _finish(arr / (1.0 - arr / q.K) ** q.gamma, u)


def g_inverse_derivative(q: QFamily, u: ArrayLike) -> ArrayLike:
    """(G^-1)'(G(u)) = 1 / G'(u) = q(u)^2 / D(u)."""
    arr = _as_array(u)
    qu = _as_array(q_eval(q, arr))
    return _finish(qu * qu / _as_array(diffusivity(q, arr)), u)


def g_inverse(
    q: QFamily,
    w: ArrayLike,
    tol: float = DEFAULT_G_TOL,
    max_iter: int = DEFAULT_G_MAX_ITER,
) -> ArrayLike:
    """
    Solve G(u) = w for u in [0, K).

    gamma = 1 uses the closed form u = K w / (K + w). Other exponents run a
    safeguarded Newton iteration on F(u) = u - w q(u), falling back to
    bisection whenever a Newton step leaves the current bracket.

    Raises:
        InputDomainError: negative target or non-positive tolerance
        CapacityProximityError: target above G(K (1 - 1e-14))
        SolverError: iteration cap reached, with the last bracket attached
    """
    if tol <= 0:
        raise InputDomainError("g_inverse tolerance must be positive")
    target = _as_array(w)
    _require_nonnegative(target, "w")

    if q.gamma == 1.0:
        return _finish(q.K * target / (q.K + target), w)

    flat = np.atleast_1d(target).astype(float).ravel()
    upper_u = q.K * (1.0 - CAPACITY_MARGIN)
    g_upper = upper_u / (1.0 - upper_u / q.K) ** q.gamma
    if np.any(flat > g_upper):
        raise CapacityProximityError(
            "target lies beyond the resolvable sub-capacity branch",
            {"w_max": float(flat.max()), "g_upper": float(g_upper)},
        )

    lo = np.zeros_like(flat)
    hi = np.full_like(flat, upper_u)
    # Exact for gamma = 1, a good start elsewhere.
    u = np.clip(q.K * flat / (q.K + flat), lo, hi)
    scale = np.maximum(1.0, flat)
    done = flat == 0.0
    u[done] = 0.0

    for _ in range(max_iter):
        active = ~done
        if not np.any(active):
            break
        ua, wa = u[active], flat[active]
        free = 1.0 - ua / q.K
        qa = free ** q.gamma
        residual = ua - wa * qa
        converged = np.abs(residual) <= tol * scale[active] * qa

        below = residual < 0
        lo_a = np.where(below, ua, lo[active])
        hi_a = np.where(below, hi[active], ua)
        slope = 1.0 + wa * q.gamma / q.K * free ** (q.gamma - 1.0)
        candidate = ua - residual / slope
        outside = ~((candidate > lo_a) & (candidate < hi_a))
        candidate = np.where(outside, 0.5 * (lo_a + hi_a), candidate)
        stalled = np.abs(candidate - ua) <= np.spacing(ua)

        lo[active], hi[active] = lo_a, hi_a
        u[active] = np.where(converged, ua, candidate)
        idx = np.flatnonzero(active)
        done[idx[converged | stalled]] = True
    else:
        if not np.all(done):
            pending = np.flatnonzero(~done)
            raise SolverError(
                "g_inverse did not converge",
                {
                    "unconverged": int(pending.size),
                    "bracket": [float(lo[pending[0]]), float(hi[pending[0]])],
                },
            )

    result = u.reshape(np.shape(target))
    return _finish(result, w)
