"""Occupation measures ``int_0^inf w_n(t) P(xi_t in dx) dt`` on a grid.

The weights are ``w_n(t) = t^{n-1} e^{-qt}``; ``n = 0`` gives ``e^{-qt}/t``.
Paths without jumps contribute in closed form (a Bessel-K density when
``sigma > 0``, incomplete gamma functions when the no-jump part is a pure
drift).  The jump part is integrated in time over the lattice marginals.
"""

from __future__ import annotations

import numpy as np
from scipy.special import exp1, gammainc, gammaln, kve

from ._nodes import NodeLaw, make_engine
from .errors import DomainError
from .levy_model import LevyModel, mean
from .quadrature import integrate, power_tail, time_panels

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _nojump_density(model: LevyModel, q: float, n: int, x: np.ndarray) -> np.ndarray:
    """Density of ``int w_n(t) e^{-lambda t} P(mu t + sigma B_t in dx) dt`` for ``sigma > 0``."""
    mu, s2 = model.drift, model.sigma2
    a = q + model.total_rate + mu * mu / (2 * s2)
    b = x * x / (2 * s2)
    nu = n - 0.5
    pref = np.exp(x * mu / s2) / np.sqrt(2 * np.pi * s2)
    if a <= 0:
        raise DomainError("occupation density is infinite (no killing and no drift)")
    arg = 2 * np.sqrt(a * b)
    with np.errstate(divide="ignore", invalid="ignore"):
        # 2 (b/a)^{nu/2} K_nu(2 sqrt(ab)), written with the scaled Bessel function
        val = 2 * np.exp(0.5 * nu * (np.log(b) - np.log(a)) - arg) * kve(nu, arg)
    if nu > 0:
        small = b == 0
        val = np.where(small, np.exp(gammaln(nu) - nu * np.log(a)), val)
    return pref * val


def _t_integral(r: float, n: int, t1, t2):
    """``int_{t1}^{t2} t^{n-1} e^{-rt} dt`` elementwise (``t2`` may be ``inf``)."""
    t1 = np.asarray(t1, float)
    t2 = np.asarray(t2, float)
    if n == 0:
        if r == 0:
            return np.log(t2 / t1)
        return exp1(r * t1) - np.where(np.isfinite(t2), exp1(r * np.minimum(t2, 1e300)), 0.0)
    if r == 0:
        return (t2**n - t1**n) / n
    scale = np.exp(gammaln(n) - n * np.log(r))
    return scale * (gammainc(n, r * t2) - gammainc(n, r * t1))


def nojump_part(model: LevyModel, q: float, n: int, lo: float, ncell: int, width: float):
    """Cell masses and atoms of the no-jump part of the occupation measure."""
    lam, mu = model.total_rate, model.drift
    edges = lo + width * np.arange(ncell + 1)
    if model.sigma2 > 0:
        a, b = edges[:-1], edges[1:]
        out = np.zeros(ncell)
        # split the cell that contains 0, where the density has a kink or a pole
        for left, right in ((a, np.minimum(b, 0.0)), (np.maximum(a, 0.0), b)):
            ok = right > left
            if not np.any(ok):
                continue
            half = 0.5 * (right[ok] - left[ok])
            mid = 0.5 * (right[ok] + left[ok])
            x = mid[:, None] + half[:, None] * _GL_X[None, :]
            out[ok] += half * (_nojump_density(model, q, n, x) @ _GL_W)
        return out, []
    r = q + lam
    if mu == 0:
        if n == 0:
            return np.zeros(ncell), []
        if r == 0:
            raise DomainError("infinite atom at 0")
        return np.zeros(ncell), [(0.0, float(np.exp(gammaln(n) - n * np.log(r))))]
    # atom travelling at speed mu: time spent in the cell is an interval in t
    t_a = edges[:-1] / mu
    t_b = edges[1:] / mu
    t1 = np.maximum(np.minimum(t_a, t_b), 0.0)
    t2 = np.maximum(np.maximum(t_a, t_b), 0.0)
    out = np.zeros(ncell)
    ok = t2 > t1
    if n == 0:
        ok &= t1 > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[ok] = _t_integral(r, n, t1[ok], t2[ok])
    if n == 0:
        # the cell starting at 0 carries a logarithmic pole; report it as infinite
        zero = (t1 == 0) & (t2 > 0)
        out[zero] = np.inf
    return out, []


def default_horizon(model: LevyModel, q: float) -> float:
    if q > 0:
        t = min(60.0 / q, 2048.0)
    else:
        m = abs(mean(model))
        t = min(max(50.0 / m, 256.0), 2048.0)
    return float(2.0 ** np.ceil(np.log2(t)))


def jump_part(model: LevyModel, q: float, n: int, lo: float, ncell: int, width: float,
              refine: int = 2, t_max: float | None = None, tau0: float = 2.0**-20):
    """Cell masses of the jump part, with a per-cell error estimate."""
    if not model.jumps:
        return np.zeros(ncell), np.zeros(ncell)
    t_max = t_max or default_horizon(model, q)
    h = width / refine
    hi = lo + ncell * width
    engine = make_engine(model, h, max(0.0, -lo), max(0.0, hi), t_max)
    panels = time_panels(t_max, tau0=tau0)

    def rows(ts):
        out = np.zeros((ts.size, ncell))
        for i, t in enumerate(ts):
            node = NodeLaw(model, t, engine)
            out[i] = node.jump_cells(lo, ncell, width, refine) * (t ** (n - 1) * np.exp(-q * t))
        return out

    total, err, per = integrate(rows, panels, shape=(ncell,))
    total = total.real
    if q == 0:
        total = total + power_tail(per).real
    return np.maximum(total, 0.0), err


def occupation(model: LevyModel, q: float, n: int, lo: float, hi: float, ncell: int,
               refine: int = 2, t_max: float | None = None):
    """``(masses, atoms, err)`` of ``int w_n(t) P(xi_t in dx) dt`` on ``[lo, hi)``."""
    width = (hi - lo) / ncell
    m0, atoms = nojump_part(model, q, n, lo, ncell, width)
    m1, err = jump_part(model, q, n, lo, ncell, width, refine=refine, t_max=t_max)
    return m0 + m1, atoms, err
