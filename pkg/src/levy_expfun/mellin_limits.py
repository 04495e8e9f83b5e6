"""Mellin transforms of exponential functionals and the limit law by contour inversion.

``M(q, z) = Gamma(z) W_-(1 - z) / W_+(z)`` with ``W_pm`` the Bernstein-gamma
functions of the Wiener-Hopf factors ``phi_pm(q, .)``.  Line integrals over
``Re z = b`` are symmetric under conjugation and are computed as twice the real
part over ``Im z >= 0`` with the trapezoid rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import loggamma

from .bernstein_gamma import log_bivariate_W
from .errors import ContourTruncationError, DomainError, TransienceRequired
from .levy_model import mean
from .wiener_hopf import MINUS, PLUS, WienerHopfPair

CONTOUR_STEP = 0.05
_BLOCK = 10.0          # contour length added per extension
_STOP = 1e-9           # integrand relative to the running integral
_TAIL_TOL = 1e-6
_REFINE_TOL = 1e-9


def log_mellin(pair: WienerHopfPair, q: float, z):
    """``(log M(q, z), err)`` for ``0 < Re z < 1``."""
    z = np.asarray(z, dtype=complex)
    if np.any((z.real <= 0) | (z.real >= 1)):
        raise DomainError("Mellin transform is evaluated on 0 < Re z < 1")
    lm, em = log_bivariate_W(pair, MINUS, q, 1 - z)
    lp, ep = log_bivariate_W(pair, PLUS, q, z)
    return loggamma(z) + lm - lp, em + ep


def mellin(pair: WienerHopfPair, q: float, z):
    """``M(q, z) = Gamma(z) W_{phi_-}(1 - z) / W_{phi_+}(z)``."""
    val, _ = log_mellin(pair, q, z)
    return np.exp(val)[()]


class MellinEvaluator:
    """``z -> M(q, z)`` on the strip ``0 < Re z < 1``."""

    def __init__(self, pair: WienerHopfPair, q: float):
        self.pair = pair
        self.q = float(q)
        self.strip = (0.0, 1.0)

    def __call__(self, z):
        return mellin(self.pair, self.q, z)

    def with_error(self, z):
        val, err = log_mellin(self.pair, self.q, z)
        m = np.exp(val)
        return m, np.abs(m) * err


def _phi_plus0(pair, q):
    return float(np.exp(pair.log_phi(PLUS, q, 0.0).real))


def laplace_moment(pair: WienerHopfPair, q: float, a: float) -> float:
    """``int_0^inf e^{-qt} E[I(t)^{-a}] dt = M(q, 1 - a) / phi_+(q, 0)``."""
    if q <= 0:
        raise DomainError("q must be positive")
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    return float(mellin(pair, q, 1 - a).real / _phi_plus0(pair, q))


# ---------------------------------------------------------------- contour
@dataclass
class ContourResult:
    values: np.ndarray      # (1/pi) Re int_0^inf x^{-z} M(q, z + 1 - a) / z dy for each x
    y_max: float
    step: float
    tail_estimate: float
    refine_change: float


def _integrand(pair, q, a, b, y, logx):
    z = b + 1j * y
    lm, _ = log_mellin(pair, q, z + 1 - a)
    # x^{-z} M / z for each x (rows) and y (columns)
    return np.exp(-np.outer(logx, z) + lm[None, :]) / z[None, :]


def _trapezoid(samples, step):
    w = np.full(samples.shape[1], step)
    w[0] = 0.5 * step
    return (samples @ w).real / np.pi


def contour_integral(pair: WienerHopfPair, q: float, a: float, x, b: float,
                     step: float = CONTOUR_STEP, y_cap: float = 400.0) -> ContourResult:
    """``(1/pi) Re int_0^inf x^{-z} M(q, z+1-a) / z dy`` along ``z = b + iy``.

    The range ``[0, Y]`` grows in blocks until the integrand falls below
    ``1e-9`` of the running integral.  The step is then halved until two
    successive trapezoid sums agree (a Romberg-type check).
    """
    if not a - 1 < b < 0:
        raise DomainError("need a - 1 < b < 0")
    logx = np.log(np.atleast_1d(np.asarray(x, dtype=float)))
    ys = np.arange(0.0, _BLOCK, step)
    vals = _integrand(pair, q, a, b, ys, logx)
    while True:
        total = _trapezoid(vals, step)
        scale = np.maximum(np.abs(total), 1e-300)
        last = np.abs(vals[:, -int(_BLOCK / step) // 4:]).max(axis=1)
        if np.all(last < _STOP * scale) or ys[-1] >= y_cap:
            break
        more = ys[-1] + step * np.arange(1, int(round(_BLOCK / step)) + 1)
        vals = np.concatenate([vals, _integrand(pair, q, a, b, more, logx)], axis=1)
        ys = np.concatenate([ys, more])
    # tail beyond Y from the measured decay of the last block
    mag = np.abs(vals).max(axis=0)
    n_last = int(_BLOCK / step)
    y1, y2 = ys[-n_last], ys[-1]
    m1, m2 = max(mag[-n_last], 1e-300), max(mag[-1], 1e-300)
    rate = np.log(m1 / m2) / (y2 - y1) if m1 > m2 else 0.0
    tail = m2 / rate / np.pi if rate > 0 else np.inf
    # step halving
    h = step
    change = np.inf
    for _ in range(4):
        mids = ys[:-1] + 0.5 * h
        new_vals = _integrand(pair, q, a, b, mids, logx)
        merged = np.empty((vals.shape[0], vals.shape[1] + new_vals.shape[1]), dtype=complex)
        merged[:, 0::2] = vals
        merged[:, 1::2] = new_vals
        ys2 = np.empty(merged.shape[1])
        ys2[0::2] = ys
        ys2[1::2] = mids
        new_total = _trapezoid(merged, 0.5 * h)
        change = float(np.max(np.abs(new_total - total) / np.maximum(np.abs(new_total), 1e-300)))
        vals, ys, h, total = merged, ys2, 0.5 * h, new_total
        if change < _REFINE_TOL:
            break
    return ContourResult(total, float(ys[-1]), h, float(tail), change)


def _check_tail(res: ContourResult, reference: float):
    scale = max(np.max(np.abs(res.values)), abs(reference) * 1e-3)
    if res.tail_estimate > _TAIL_TOL * scale:
        raise ContourTruncationError(
            f"contour tail {res.tail_estimate:.2e} above {_TAIL_TOL:g} of the integral")


def truncated_laplace(pair: WienerHopfPair, q: float, a: float, x, b: float = -0.25,
                      return_error: bool = False):
    """``int_0^inf e^{-qt} E[I(t)^{-a}; I(t) <= x] dt`` by Mellin inversion."""
    if q <= 0:
        raise DomainError("q must be positive")
    res = contour_integral(pair, q, a, x, b)
    lm = laplace_moment(pair, q, a)
    _check_tail(res, lm)
    out = -res.values / _phi_plus0(pair, q)
    out = out[0] if np.ndim(x) == 0 else out
    if return_error:
        return out, res.tail_estimate / _phi_plus0(pair, q)
    return out


def _limit_scale(pair: WienerHopfPair, alpha: float) -> float:
    model = pair.model
    if not model.drifts_to_minus_infinity:
        raise TransienceRequired("the limit law needs a process drifting to minus infinity")
    return _phi_plus0(pair, 0.0) * (-mean(model)) ** alpha


def limit_constant(pair: WienerHopfPair, a: float, alpha: float) -> float:
    """``M(0, 1 - a) / (phi_+(0, 0) (-E xi_1)^alpha)``."""
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    scale = _limit_scale(pair, alpha)
    return float(mellin(pair, 0.0, 1 - a).real / scale)


def limit_cdf(pair: WienerHopfPair, a: float, alpha: float, x, b: float = -0.25,
              return_error: bool = False):
    """``nu_a((0, x])`` by the contour integral at ``q = 0``."""
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    scale = _limit_scale(pair, alpha)
    res = contour_integral(pair, 0.0, a, x, b)
    _check_tail(res, float(mellin(pair, 0.0, 1 - a).real))
    out = -res.values / scale
    out = out[0] if np.ndim(x) == 0 else out
    if return_error:
        return out, res.tail_estimate / scale
    return out


@dataclass
class LimitLaw:
    a: float
    alpha: float
    ell_const: float
    total_mass: float
    pair: WienerHopfPair = field(repr=False)
    b: float = -0.25

    def cdf(self, x):
        return limit_cdf(self.pair, self.a, self.alpha, x, self.b)

    def normalized_cdf(self, x):
        return np.clip(self.cdf(x) / self.total_mass, 0.0, 1.0)


def limit_law(pair: WienerHopfPair, a: float, alpha: float, ell_const: float = 1.0,
              b: float = -0.25) -> LimitLaw:
    return LimitLaw(a, alpha, ell_const, limit_constant(pair, a, alpha), pair, b)


# ---------------------------------------------------------------- factorization
@dataclass
class FactorizationReport:
    a: float
    z: np.ndarray
    numeric: np.ndarray        # Mellin transform of the normalized CDF on the log grid
    formula: np.ndarray        # -(1/z) * first factor * second factor
    first_factor: np.ndarray
    second_factor: np.ndarray
    max_rel_discrepancy: float
    tail_exponents: tuple      # (near 0, near infinity) used for the tail corrections
    mc: dict = field(default_factory=dict)


def factor_terms(pair: WienerHopfPair, a: float, z):
    """First and second factors of the Mellin transform of the normalized limit law."""
    z = np.asarray(z, dtype=complex)
    lp1, _ = log_bivariate_W(pair, PLUS, 0.0, np.array([1 - a + 0j]))
    lpz, _ = log_bivariate_W(pair, PLUS, 0.0, z + 1 - a)
    first = np.exp(loggamma(z + 1 - a) + lp1[0] - lpz - loggamma(1 - a))
    lma, _ = log_bivariate_W(pair, MINUS, 0.0, np.array([a + 0j]))
    lmz, _ = log_bivariate_W(pair, MINUS, 0.0, a - z)
    second = np.exp(lmz - lma[0])
    return first, second


def factorization_check(pair: WienerHopfPair, a: float, z_samples, alpha: float = 2.0,
                        x_range=(1e-6, 1e6), n_x: int = 4001, b: float = -0.25,
                        mc_samples: int = 0, seed: int = 0) -> FactorizationReport:
    """Compare the Mellin transform of the normalized limit CDF with the W-ratio factors.

    The CDF ``F`` is evaluated on a log grid by contour inversion and
    ``M_F(z) = -(1/z) int x^z dF`` is integrated against ``dF``.  Beyond the
    grid ``F ~ c x^{1-a}`` near 0 and ``1 - F ~ c' x^{-a}`` near infinity; these
    tails are added in closed form.
    """
    z = np.asarray(z_samples, dtype=complex)
    if np.any((z.real <= a - 1) | (z.real >= 0)):
        raise DomainError("samples need a - 1 < Re z < 0")
    x = np.geomspace(x_range[0], x_range[1], n_x)
    total = limit_constant(pair, a, alpha)
    F = np.asarray(limit_cdf(pair, a, alpha, x, b)) / total
    dF = np.diff(F)
    xm = np.sqrt(x[:-1] * x[1:])
    body = (xm[None, :] ** z[:, None]) @ dF
    lo_exp, hi_exp = 1 - a, a
    c_lo = F[0] / x[0] ** lo_exp
    c_hi = (1 - F[-1]) * x[-1] ** hi_exp
    low = c_lo * lo_exp * x[0] ** (z + lo_exp) / (z + lo_exp)
    high = c_hi * hi_exp * x[-1] ** (z - hi_exp) / (hi_exp - z)
    numeric = -(body + low + high) / z
    first, second = factor_terms(pair, a, z)
    formula = -(1 / z) * first * second
    rel = np.abs(numeric - formula) / np.abs(formula)
    rep = FactorizationReport(a, z, numeric, formula, first, second, float(rel.max()),
                              (lo_exp, hi_exp))
    if mc_samples:
        from .montecarlo import size_biased_moment

        phi = pair.bernstein(PLUS, 0.0)
        for zz in z.real:
            est = size_biased_moment(phi, a, float(zz), mc_samples, seed)
            rep.mc[float(zz)] = est
    return rep


# ---------------------------------------------------------------- decay
@dataclass
class DecayProfile:
    y: np.ndarray
    abs_M: np.ndarray
    abs_dqM: np.ndarray
    decay_exponent: float
    ratio_max: float         # max |dq M| / ((1 + |z|) |M|)
    conj_max: float          # max |M(conj z) - conj M(z)| / |M(z)|

    def rows(self):
        return list(zip(self.y, self.abs_M, self.abs_dqM))


def decay_profile(pair: WienerHopfPair, q: float, a: float, b: float, y_max: float,
                  n: int = 201, dq: float = 1e-3) -> DecayProfile:
    """Tabulate ``|M(q, b + 1 - a + iy)|`` and a finite-difference q-derivative."""
    y = np.linspace(0.0, y_max, n)
    z = b + 1 - a + 1j * y
    lm, _ = log_mellin(pair, q, z)
    m = np.exp(lm)
    if q > dq:
        d = (np.exp(log_mellin(pair, q + dq, z)[0]) - np.exp(log_mellin(pair, q - dq, z)[0])) / (2 * dq)
    else:
        d = (np.exp(log_mellin(pair, q + dq, z)[0]) - m) / dq
    sel = y >= 0.25 * y_max
    slope = np.polyfit(np.log(y[sel]), np.log(np.abs(m[sel])), 1)[0]
    ratio = np.abs(d) / ((1 + np.abs(z)) * np.abs(m))
    mc = np.exp(log_mellin(pair, q, np.conj(z))[0])
    conj = np.abs(mc - np.conj(m)) / np.abs(m)
    return DecayProfile(y, np.abs(m), np.abs(d), float(-slope), float(ratio.max()), float(conj.max()))
