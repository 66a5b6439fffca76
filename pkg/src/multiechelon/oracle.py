"""Independent numerical references used to cross-check the closed forms."""

from __future__ import annotations

import numpy as np

from .echelon import TrajectorySeries
from .errors import SolverError

DEFAULT_STEP = 1e-2


def rk4_integrate(rhs, x0, t_end: float, step: float = DEFAULT_STEP, t0: float = 0.0) -> TrajectorySeries:
    """Classical fixed-step RK4 for ``x' = rhs(t, x)`` from ``t0`` to ``t_end``.

    The last step is shortened to land exactly on ``t_end``. Every step is
    returned, including the initial state.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if t_end < t0:
        raise ValueError("t_end must not precede t0")
    x = np.array(x0, dtype=float)
    span = t_end - t0
    full = int(np.floor(span / step + 1e-9))
    times = [t0 + k * step for k in range(full + 1)]
    if span - full * step > 1e-12 * max(1.0, abs(t_end)):
        times.append(t_end)
    else:
        times[-1] = t_end
    out = np.empty((len(times), x.size))
    out[0] = x
    for k in range(1, len(times)):
        t, h = times[k - 1], times[k] - times[k - 1]
        k1 = rhs(t, x)
        k2 = rhs(t + h / 2, x + h / 2 * k1)
        k3 = rhs(t + h / 2, x + h / 2 * k2)
        k4 = rhs(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise SolverError(f"RK4 state became non-finite at t={times[k]}")
        out[k] = x
    return TrajectorySeries(np.array(times), out)


def rk4_sample(rhs, x0, times, step: float = DEFAULT_STEP) -> TrajectorySeries:
    """Integrate with RK4 and keep only the states at ``times`` (increasing, >= 0)."""
    times = np.asarray(times, dtype=float).ravel()
    x = np.array(x0, dtype=float)
    out = np.empty((times.size, x.size))
    t_prev = 0.0
    for k, t in enumerate(times):
        if t < t_prev:
            raise ValueError("times must be increasing")
        if t > t_prev:
            x = rk4_integrate(rhs, x, t, step, t0=t_prev).levels[-1]
        out[k] = x
        t_prev = t
    return TrajectorySeries(times, out)


def finite_difference_jacobian(f, x, h: float = 1e-6) -> np.ndarray:
    """Central differences, column ``j`` stepped by ``h * max(1, |x_j|)``."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(np.asarray(f(x), dtype=float))
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        dx = h * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += dx
        xm[j] -= dx
        J[:, j] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * dx)
    return J
