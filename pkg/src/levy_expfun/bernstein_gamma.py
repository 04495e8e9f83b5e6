"""Bernstein-gamma functions and the harmonic measures of Wiener-Hopf factors.

``W_phi`` solves ``W(z + 1) = phi(z) W(z)`` with ``W(1) = 1``.  It is evaluated
through the Gauss-type product

    log W_N(z) = z log phi(N) + sum_{k=1}^{N-1} log phi(k) - sum_{k=0}^{N-1} log phi(z + k)

with Neville extrapolation in ``1/N``.  A Bernstein function maps the right
half-plane into itself, so principal logarithms of ``phi`` never cross the cut
and the sums are continuous logarithms.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sint

from . import _sweep
from .errors import CriterionViolated, DomainError, NonConvergence
from .grid import GridMeasure, parse_grid
from .wiener_hopf import MINUS, PLUS, WienerHopfPair, _sign

Y_SWITCH = 1e-3
_N_SCHEDULE = (256, 512, 1024, 2048)
_TAIL_SCHEDULE = (256, 512)
RECURRENCE_TOLERANCE = 1e-6


class BernsteinFunction:
    """``phi(z) = kill + drift z + int (1 - e^{-zy}) mu(dy)``.

    Either ``evaluator`` (``z -> phi(z)``) or ``log_evaluator`` must be given;
    when only the triplet is known use :meth:`from_triplet`.
    """

    def __init__(self, kill=0.0, drift=0.0, jump_measure=None, evaluator=None,
                 log_evaluator=None, label=""):
        if evaluator is None and log_evaluator is None:
            raise ValueError("need an evaluator")
        self.kill = float(kill)
        self.drift = float(drift)
        self.jump_measure = jump_measure
        self._ev = evaluator
        self._log_ev = log_evaluator
        self.label = label
        self._int_cache: dict = {}
        self._lock = threading.Lock()

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self._ev is not None:
            return self._ev(z)
        return np.exp(self._log_ev(z))

    def log(self, z):
        z = np.asarray(z, dtype=complex)
        if self._log_ev is not None:
            return np.asarray(self._log_ev(z), dtype=complex)
        return np.log(np.asarray(self._ev(z), dtype=complex))

    def log_int_prefix(self, n_max: int) -> np.ndarray:
        """Cumulative sums ``sum_{k=1}^{N-1} log phi(k)`` for ``N = 1..n_max``, memoized."""
        with self._lock:
            cached = self._int_cache.get(n_max)
        if cached is None:
            vals = self.log(np.arange(1, n_max + 1, dtype=float)).real
            cached = np.concatenate([[0.0], np.cumsum(vals)])
            with self._lock:
                self._int_cache[n_max] = cached
        return cached

    # -- constructors
    @classmethod
    def identity(cls):
        return cls(0.0, 1.0, None, evaluator=lambda z: z, label="z")

    @classmethod
    def linear(cls, kill: float, drift: float):
        return cls(kill, drift, None, evaluator=lambda z: kill + drift * z,
                   label=f"{kill:g}+{drift:g}z")

    @classmethod
    def constant(cls, c: float):
        if c <= 0:
            raise DomainError("constant Bernstein function must be positive")
        return cls(c, 0.0, None, evaluator=lambda z: c + 0 * z, label=f"{c:g}")

    @classmethod
    def from_triplet(cls, kill: float, drift: float, jump_measure: GridMeasure | None):
        """Evaluator with the jump measure spread uniformly over its cells."""
        if jump_measure is not None and jump_measure.lo < 0:
            raise DomainError("jump measure must live on (0, inf)")

        def ev(z):
            z = np.asarray(z, dtype=complex)
            out = kill + drift * z
            if jump_measure is None:
                return out
            a = jump_measure.edges[:-1]
            w = jump_measure.width
            masses = jump_measure.masses
            flat = z.reshape(-1)
            acc = np.empty(flat.shape, dtype=complex)
            # blocks of z keep the (z, cell) temporaries near 2e6 entries
            step = max(1, 2_000_000 // max(masses.size, 1))
            for s in range(0, flat.size, step):
                zz = flat[s:s + step, None]
                with np.errstate(divide="ignore", invalid="ignore"):
                    avg = np.where(zz == 0, 1.0, -np.expm1(-zz * w) / (zz * w))
                acc[s:s + step] = (1 - np.exp(-zz * a) * avg) @ masses
            out = out + acc.reshape(z.shape)
            for x, m in jump_measure.atoms:
                out = out + m * (1 - np.exp(-z * x))
            return out

        return cls(kill, drift, jump_measure, evaluator=ev, label="triplet")

    def integral_form(self, z: complex) -> complex:
        """The defining integral by adaptive quadrature, cell by cell."""
        val = self.kill + self.drift * z
        jm = self.jump_measure
        if jm is None:
            return complex(val)
        for k, m in enumerate(jm.masses):
            if m == 0:
                continue
            a, b = jm.edges[k], jm.edges[k + 1]
            re = sint.quad(lambda y: (1 - np.exp(-z * y)).real, a, b)[0]
            im = sint.quad(lambda y: (1 - np.exp(-z * y)).imag, a, b)[0]
            val += m / (b - a) * (re + 1j * im)
        for x, m in jm.atoms:
            val += m * (1 - np.exp(-z * x))
        return complex(val)


def _neville(xs, ys):
    """Values of the interpolating polynomials at 0, returning the last two diagonals."""
    p = [np.array(y, dtype=complex) for y in ys]
    n = len(xs)
    prev_best = p[-1]
    for lev in range(1, n):
        prev_best = p[-1]
        p = [((0 - xs[i + lev]) * p[i] - (0 - xs[i]) * p[i + 1]) / (xs[i] - xs[i + lev])
             for i in range(n - lev)]
    return p[0], prev_best


def _tail_em(phi: BernsteinFunction, z: np.ndarray, n: int, order: int = 32) -> np.ndarray:
    """Euler-Maclaurin estimate of ``sum_{k >= n} g(k)`` where

    ``g(s) = z (log phi(s+1) - log phi(s)) + log phi(s) - log phi(s+z)``

    is the increment of the finite-``N`` product.  The integral of ``g`` over
    ``[n, inf)`` is taken in ``u = n / s``.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (x + 1)
    s = n / u

    def g(sv):
        sv = np.asarray(sv, dtype=float)
        l0 = phi.log(sv.astype(complex)).real
        l1 = phi.log((sv + 1).astype(complex)).real
        lz = phi.log(z[:, None] + sv[None, :])
        return z[:, None] * (l1 - l0)[None, :] + l0[None, :] - lz

    integral = (g(s) * (n / u**2)) @ (0.5 * w)
    ends = g(np.array([n - 1.0, n, n + 1.0]))
    deriv = 0.5 * (ends[:, 2] - ends[:, 0])
    return integral + 0.5 * ends[:, 1] - deriv / 12.0


def log_bernstein_gamma(phi: BernsteinFunction, z, schedule=_N_SCHEDULE, tail: bool = True):
    """``(log W_phi(z), err)`` with the principal-branch-consistent logarithm.

    Each finite-``N`` product is completed by an Euler-Maclaurin estimate of
    the remaining series (``tail=True``); the estimates are then extrapolated
    in ``1/N`` and the spread of the last two extrapolants is the error.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.real <= 0):
        raise DomainError("W is evaluated on Re z > 0")
    n_max = max(schedule) if not tail else max(_TAIL_SCHEDULE)
    flat = z.ravel()
    prefix = phi.log_int_prefix(n_max)
    k = np.arange(n_max, dtype=float)
    lz = phi.log(flat[:, None] + k[None, :])
    if not np.all(np.isfinite(lz)):
        raise DomainError("phi vanishes on the product path")
    cz = np.cumsum(lz, axis=1)
    ests = []
    sched = _TAIL_SCHEDULE if tail else schedule
    for n in sched:
        log_phi_n = prefix[n] - prefix[n - 1]
        est = flat * log_phi_n + prefix[n - 1] - cz[:, n - 1]
        if tail:
            est = est + _tail_em(phi, flat, n)
        ests.append(est)
    if tail:
        # the completed products are already converged; extrapolating would only
        # amplify rounding noise in the tail integral
        best, second = ests[0], ests[1]
    else:
        best, second = _neville([1.0 / n for n in sched], ests)
    err = np.abs(best - second)
    return best.reshape(z.shape), err.reshape(z.shape)


def bernstein_gamma(phi: BernsteinFunction, z, tol: float = RECURRENCE_TOLERANCE,
                    return_error: bool = False):
    """``W_phi(z)`` for ``Re z > 0``; raises :class:`NonConvergence` above ``tol``."""
    val, err = log_bernstein_gamma(phi, z)
    if np.any(err > tol):
        raise NonConvergence(f"extrapolants differ by {np.max(err):.2e}")
    w = np.exp(val)
    if return_error:
        return w[()], (np.abs(w) * err)[()]
    return w[()]


# ---------------------------------------------------------------- kernels
def _series_div(num, den):
    """Coefficients of ``num / den`` as power series (``den[0] != 0``)."""
    out = []
    for k in range(len(num)):
        acc = num[k] - sum(out[j] * den[k - j] for j in range(k))
        out.append(acc / den[0])
    return out


_DEN = [1.0 / np.prod(np.arange(1, k + 2)) for k in range(6)]   # (e^y - 1)/y


def _fact(n):
    return float(np.prod(np.arange(1, n + 1)))


def kernel_u(z, y):
    """``u_z(y) = (e^{-zy} - 1 - z(e^{-y} - 1)) / (e^y - 1)``."""
    z = np.asarray(z, dtype=complex)
    y = np.asarray(y, dtype=float)
    if np.any(z.real <= -1):
        raise DomainError("need Re z > -1")
    z, y = np.broadcast_arrays(z, y)
    out = np.empty(z.shape, dtype=complex)
    small = y < Y_SWITCH
    if np.any(small):
        zs, ys = z[small], y[small]
        num = [(-1) ** n * (zs**n - zs) / _fact(n) for n in range(2, 8)]
        # numerator / y starts at y^1; shift so series is in powers of y
        coeffs = _series_div([0 * zs] + num[:5], _DEN)
        out[small] = sum(c * ys**k for k, c in enumerate(coeffs))
    big = ~small
    if np.any(big):
        zb, yb = z[big], y[big]
        em = -np.expm1(-yb)
        num = np.exp(-(zb + 1) * yb) - np.exp(-yb) * (1 + zb * np.expm1(-yb))
        # cancellation is harmless away from 0; near it the series is used
        mid = yb < 1.0
        num = np.where(mid, np.exp(-yb) * (np.expm1(-zb * yb) - zb * np.expm1(-yb)), num)
        out[big] = num / em
    return out[()]


def kernel_v(z, y):
    """``v_z(y) = (1 - e^{-zy}) / (e^y - 1)``."""
    z = np.asarray(z, dtype=complex)
    y = np.asarray(y, dtype=float)
    if np.any(z.real <= -1):
        raise DomainError("need Re z > -1")
    z, y = np.broadcast_arrays(z, y)
    out = np.empty(z.shape, dtype=complex)
    small = y < Y_SWITCH
    if np.any(small):
        zs, ys = z[small], y[small]
        num = [-((-zs) ** n) / _fact(n) for n in range(1, 7)]
        coeffs = _series_div(num, _DEN)
        out[small] = sum(c * ys**k for k, c in enumerate(coeffs))
    big = ~small
    if np.any(big):
        zb, yb = z[big], y[big]
        out[big] = (np.exp(-yb) - np.exp(-(zb + 1) * yb)) / -np.expm1(-yb)
        mid = yb < 1.0
        out[big] = np.where(mid, -np.expm1(-zb * yb) * np.exp(-yb) / -np.expm1(-yb), out[big])
    return out[()]


def kernel_v_bound(re_z: float, y_max: float = 400.0):
    """``(C1, eps1)`` with ``|v_z(y)| <= C1 |z| e^{-eps1 y}`` for all ``Im z``.

    Uses ``|1 - e^{-zy}| <= |z| y max(1, e^{-Re z y})`` and takes
    ``eps1 = (1 + min(Re z, 0)) / 2``.
    """
    if re_z <= -1:
        raise DomainError("need Re z > -1")
    eps = 0.5 * (1 + min(re_z, 0.0))
    y = np.linspace(1e-9, y_max, 400001)
    env = y * np.maximum(1.0, np.exp(-re_z * y)) * np.exp(eps * y) * np.exp(-y) / -np.expm1(-y)
    return float(1.01 * env.max()), eps


# ---------------------------------------------------------------- bivariate W
def gauge_fixed(pair: WienerHopfPair, q: float, phi_plus_at_1: float) -> WienerHopfPair:
    """The same pair with the gauge chosen so that ``phi_+(q, 1)`` equals the target."""
    base = pair.with_gauge(1.0)
    cur = float(np.exp(base.log_phi(PLUS, q, 1.0).real))
    return pair.with_gauge(phi_plus_at_1 / cur)


def bivariate_W(pair: WienerHopfPair, sign, q: float, z, tol: float = RECURRENCE_TOLERANCE,
                return_error: bool = False):
    """``W_{phi_{q,sign}}(z)`` for ``Re z > 0``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.real <= 0):
        raise DomainError("need Re z > 0")
    return bernstein_gamma(pair.bernstein(sign, q), z, tol=tol, return_error=return_error)


def log_bivariate_W(pair: WienerHopfPair, sign, q: float, z):
    """``(log W_{phi_{q,sign}}(z), err)``."""
    return log_bernstein_gamma(pair.bernstein(sign, q), np.asarray(z, dtype=complex))


# ---------------------------------------------------------------- harmonic measures
@dataclass
class HarmonicMeasure:
    q: float
    sign: str
    measure: GridMeasure
    derivative_order: int


def _side_occupation(model, q, n, sign, lo, hi, ncell, refine, t_max=None):
    """Occupation measure of ``+xi`` or ``-xi`` on the y-grid ``[lo, hi)``."""
    if sign == PLUS:
        m, atoms, err = _sweep.occupation(model, q, n, lo, hi, ncell, refine, t_max)
        return m, atoms, err
    m, atoms, err = _sweep.occupation(model, q, n, -hi, -lo, ncell, refine, t_max)
    return m[::-1].copy(), [(-x, a) for x, a in atoms], err[::-1]


def harmonic_measure(model, q: float, sign, grid, refine: int = 2) -> HarmonicMeasure:
    """``W_sign(q, dy) = int e^{-qt} P(sign xi_t in dy) dt / t`` on ``grid`` in ``(0, inf)``.

    The measure has a logarithmic pole at 0, so the grid must start at a
    positive ``lo``.
    """
    sign = _sign(sign)
    lo, hi, n = parse_grid(grid)
    if q <= 0:
        raise DomainError("order 0 needs q > 0")
    if lo <= 0:
        raise DomainError("harmonic measures have infinite mass near 0; use lo > 0")
    m, _, _ = _side_occupation(model, q, 0, sign, lo, hi, n, refine)
    return HarmonicMeasure(q, sign, GridMeasure(lo, hi, n, m), 0)


def harmonic_measure_deriv(model, q: float, sign, n: int, grid, refine: int = 2) -> HarmonicMeasure:
    """``(-1)^n int t^{n-1} e^{-qt} P(sign xi_t in dy) dt`` off zero."""
    sign = _sign(sign)
    if n < 1:
        raise DomainError("n must be at least 1")
    if q < 0:
        raise DomainError("q must be nonnegative")
    if q == 0:
        from .potentials import integral_criterion

        if not model.drifts_to_minus_infinity:
            raise CriterionViolated("q = 0 requires a transient model")
        if n > 1 and not integral_criterion(model, n - 1).finite:
            raise CriterionViolated(f"criterion of order {n - 1} is infinite")
    lo, hi, ncell = parse_grid(grid)
    lo = max(lo, 0.0)
    m, _, _ = _side_occupation(model, q, n, sign, lo, hi, ncell, refine)
    # atoms at 0 are dropped: the measure is taken off zero
    return HarmonicMeasure(q, sign, GridMeasure(lo, hi, ncell, (-1) ** n * m), n)


# ---------------------------------------------------------------- q-derivative and integral route
def _side_potential(model, q, sign, y_max, width, refine):
    """``U_q(sign dy)`` on ``[0, y_max)`` plus the atom at 0."""
    n = int(np.ceil(y_max / width))
    m, atoms, _ = _side_occupation(model, q, 1, sign, 0.0, n * width, n, refine)
    a0 = sum(a for x, a in atoms if x == 0.0) if sign == PLUS else 0.0
    return m, a0


def _cell_mean(kernel, z, lo, width, n):
    """Average of ``kernel(z, y)`` over the cells ``[lo + k w, lo + (k+1) w)``."""
    x, w = np.polynomial.legendre.leggauss(6)
    centers = lo + width * (np.arange(n) + 0.5)
    y = centers[:, None] + 0.5 * width * x[None, :]
    return kernel(z, y) @ (0.5 * w)


def dq_log_W(pair: WienerHopfPair, sign, q: float, z, y_max: float | None = None,
             width: float = 1.0 / 64, refine: int = 2) -> complex:
    """``d/dq log W_{phi_{q,sign}}(1 + z) = int v_z(y) U_q(sign dy)``."""
    sign = _sign(sign)
    model = pair.model
    z = complex(z)
    if z.real <= -1:
        raise DomainError("need Re z > -1")
    if q < 0:
        raise DomainError("q must be nonnegative")
    if q == 0 and not model.drifts_to_minus_infinity:
        raise DomainError("q = 0 requires a transient model")
    if z == 0:
        return 0j
    if y_max is None:
        _, eps = kernel_v_bound(z.real)
        y_max = 40.0 / eps
    m, a0 = _side_potential(model, q, sign, y_max, width, refine)
    k = _cell_mean(kernel_v, z, 0.0, width, m.size)
    return complex(k @ m + a0 * z)


def log_W_integral_rep(pair: WienerHopfPair, sign, q: float, z, width: float | None = None,
                       y_max: float | None = None, refine: int = 2) -> complex:
    """``log W_{phi_{q,sign}}(1 + z) = z log phi(q, 1) + int u_z(y) W_sign(q, dy)``.

    The no-jump part of ``W_sign(q, dy)`` has density ``e^{-cy}/y`` and is
    integrated by adaptive quadrature; the jump part comes from a fresh time
    sweep on a grid.
    """
    sign = _sign(sign)
    model = pair.model
    z = complex(z)
    if q <= 0:
        raise DomainError("the integral route needs q > 0")
    if z.real <= -1:
        raise DomainError("need Re z > -1")
    if z == 0:
        return 0j
    from .wiener_hopf import nojump_rates

    fd = pair.factor_data(q)
    width = width or fd.cell
    total = z * (fd.log_phi1[sign] + pair._gauge_log(sign))
    c = nojump_rates(model, q)[sign]
    if c is not None:
        def f(y, part):
            v = kernel_u(z, y) * np.exp(-c * y) / y
            return v.real if part == 0 else v.imag

        re = sint.quad(f, 0, np.inf, args=(0,), limit=400)[0]
        im = sint.quad(f, 0, np.inf, args=(1,), limit=400)[0]
        total += re + 1j * im
    if model.jumps:
        if y_max is None:
            y_max = 40.0 / (0.5 * (1 + min(z.real, 0.0)))
        n = int(np.ceil(y_max / width))
        if sign == PLUS:
            mj, _ = _sweep.jump_part(model, q, 0, 0.0, n, width, refine)
        else:
            mj, _ = _sweep.jump_part(model, q, 0, -n * width, n, width, refine)
            mj = mj[::-1]
        total += _cell_mean(kernel_u, z, 0.0, width, n) @ mj
    return complex(total)


__all__ = [
    "BernsteinFunction", "HarmonicMeasure", "bernstein_gamma", "log_bernstein_gamma",
    "kernel_u", "kernel_v", "kernel_v_bound", "bivariate_W", "log_bivariate_W", "gauge_fixed",
    "harmonic_measure", "harmonic_measure_deriv", "dq_log_W", "log_W_integral_rep",
    "PLUS", "MINUS",
]
