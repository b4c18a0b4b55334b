"""Solver-independent reference solutions used to validate the integrators."""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.optimize import brentq


def burgers_breaking_time(du0_min: float, c: float = 3.0) -> float:
    """First time ``1 + c t u0'`` vanishes; ``inf`` if ``u0'`` is never negative."""
    if du0_min >= 0:
        return float("inf")
    return -1.0 / (c * du0_min)


def burgers_characteristics(
    u0: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    t: float,
    c: float = 3.0,
    xtol: float = 1e-15,
) -> np.ndarray:
    """Solution of ``u_t + c u u' = 0`` by the method of characteristics.

    ``u(x, t) = u0(xi)`` where ``xi + c t u0(xi) = x``. Before breaking the
    foot point ``xi`` is unique and is found by Brent's method on a bracket
    of half-width ``c t max|u0|``.

    Parameters
    ----------
    u0 : callable
        Initial profile, vectorized and 2 pi periodic.
    x : ndarray
        Evaluation points.
    t : float
        Time, before breaking.
    c : float
        Wave speed factor (3 for the L2 geodesic member of the family).
    """
    x = np.asarray(x, dtype=float)
    if t == 0:
        return np.asarray(u0(x), dtype=float)
    probe = np.linspace(0.0, 2 * np.pi, 4097)
    reach = abs(c * t) * float(np.max(np.abs(u0(probe)))) + 1e-12
    out = np.empty_like(x)

    def at(s: float) -> float:
        return float(np.asarray(u0(np.array([s])))[0])

    for i, xi in enumerate(x.ravel()):
        foot = brentq(lambda s: s + c * t * at(s) - xi, xi - reach, xi + reach, xtol=xtol)
        out.flat[i] = at(foot)
    return out
