"""Composite Gauss-Legendre rules on dyadic panels in time.

Integrands of the form ``f(t)/t`` with ``f(t) ~ c sqrt(t)`` near zero are smooth
in ``u = sqrt(t)``, so the first panel ``[0, tau0]`` is integrated in ``u``.  The
remaining panels double in length up to ``t_max``.  Per panel the error is
estimated from the last Legendre coefficients of the sampled integrand.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from .errors import QuadratureError


@lru_cache(maxsize=None)
def _gl(order: int):
    x, w = legendre.leggauss(order)
    # rows of the discrete Legendre transform for the two highest degrees
    v = legendre.legvander(x, order - 1)[:, -2:]
    coef = (v * w[:, None]) * ((2 * np.arange(order - 2, order) + 1) / 2.0)
    return x, w, coef


@dataclass
class Panel:
    t: np.ndarray       # nodes in t
    w: np.ndarray       # weights for dt
    coef: np.ndarray    # maps node values to the two top Legendre coefficients
    half: float         # half-length of the panel in its own variable
    jac: np.ndarray     # dt/dvariable at the nodes (to undo the weight)


def time_panels(t_max: float, tau0: float = 2.0**-30, order: int = 24) -> list[Panel]:
    """Panels covering ``[0, t_max]``: one in ``sqrt(t)`` on ``[0, tau0]``, then dyadic."""
    x, w, coef = _gl(order)
    panels = []
    ub = np.sqrt(tau0)
    u = 0.5 * ub * (x + 1)
    jac = 2 * u
    panels.append(Panel(u * u, 0.5 * ub * w * jac, coef, 0.5 * ub, jac))
    a = tau0
    while a < t_max * (1 - 1e-12):
        b = min(2 * a, t_max)
        t = a + 0.5 * (b - a) * (x + 1)
        panels.append(Panel(t, 0.5 * (b - a) * w, coef, 0.5 * (b - a), np.ones_like(t)))
        a = b
    return panels


def integrate(func, panels, shape=(), tol: float | None = None):
    """Integrate a vector-valued ``func(t_nodes) -> array (n_nodes, *shape)``.

    Returns ``(value, err_estimate, panel_values)`` where ``panel_values`` holds the
    per-panel integrals (used for tail extrapolation).
    """
    total = np.zeros(shape, dtype=complex)
    err = np.zeros(shape)
    per_panel = []
    for p in panels:
        vals = np.asarray(func(p.t))
        contrib = np.tensordot(p.w, vals, axes=(0, 0))
        g = vals * p.jac.reshape((-1,) + (1,) * (vals.ndim - 1))
        c = np.tensordot(p.coef.T, g, axes=(1, 0))
        err = err + p.half * (np.abs(c[0]) + np.abs(c[1]))
        total = total + contrib
        per_panel.append(contrib)
    if tol is not None and np.max(err) > tol:
        raise QuadratureError(f"time integral error estimate {np.max(err):.2e} above {tol:.1e}")
    return total, err, per_panel


def power_tail(per_panel) -> np.ndarray:
    """Geometric extrapolation of the integral beyond the last dyadic panel.

    For a power-law integrand the integrals over successive dyadic panels form a
    geometric sequence; the tail is ``I_last * r / (1 - r)`` with ``r`` the last
    ratio, applied only when ``0 <= r < 1``.
    """
    if len(per_panel) < 3:
        return np.zeros_like(per_panel[-1])
    a, b = per_panel[-2], per_panel[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(np.abs(a) > 0, b / a, 0.0)
    r = np.where((np.abs(r) < 0.95) & (np.real(r) >= 0), r, 0.0)
    return b * r / (1 - r)
