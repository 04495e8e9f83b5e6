"""Wiener-Hopf factors of a Lévy model.

The factors are

    ln phi_+(q, z) = int_0^inf int_[0,inf) (e^{-t} - e^{-qt - zx}) P(xi_t in dx) dt / t
    ln phi_-(q, z) = same over x in (0, inf) with -xi_t in place of xi_t

so that ``q - Psi(z) = phi_+(q, -z) phi_-(q, z)`` on the imaginary axis (for
processes that are not driftless compound Poisson).

Two evaluation routes are provided.

* ``route="time"`` integrates the definition directly in ``t`` at the requested
  ``z``.  It is the reference route.
* ``route="harmonic"`` (default) rewrites the factor through the measure
  ``W(q, dy) = int e^{-qt} P(+-xi_t in dy) dt / t`` as

      ln phi(q, z) = ln phi(q, 1) + int (e^{-y} - e^{-zy}) W(q, dy).

  The part of ``W`` coming from paths without jumps has the closed-form density
  ``e^{-c y} / y`` and contributes ``ln((c + z)/(c + 1))``; the rest has a
  bounded density and is tabulated once on a grid.  Evaluation is then cheap
  for any ``z`` with ``Re z > 0``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from ._nodes import NodeLaw, make_engine
from .errors import DivergentIntegral, DomainError
from .levy_model import LevyModel, mean
from .quadrature import integrate, power_tail, time_panels

PLUS, MINUS = "+", "-"


def _sign(sign) -> str:
    if sign in ("+", "plus", 1, +1):
        return PLUS
    if sign in ("-", "minus", -1):
        return MINUS
    raise DomainError(f"unknown sign {sign!r}")


def default_t_max(model: LevyModel, q: float) -> float:
    if q > 0:
        t = min(60.0 / q, 2048.0)
    else:
        t = 512.0 if model.jumps else 1024.0
    return float(2.0 ** np.ceil(np.log2(t)))


def nojump_rates(model: LevyModel, q: float) -> dict:
    """Exponential rates ``c`` of the no-jump part ``e^{-c y} dy / y`` of ``W(q, .)``."""
    mu, s2, lam = model.drift, model.sigma2, model.total_rate
    if s2 > 0:
        b = q + lam + mu * mu / (2 * s2)
        root = np.sqrt(2 * b / s2)
        return {PLUS: root - mu / s2, MINUS: root + mu / s2}
    if mu > 0:
        return {PLUS: (q + lam) / mu, MINUS: None}
    if mu < 0:
        return {PLUS: None, MINUS: (q + lam) / -mu}
    return {PLUS: None, MINUS: None}


def _time_layout(model: LevyModel, t_max: float, jump_room: float = 200.0):
    """Extent ``(y_minus, y_plus)`` of the window that ``xi_t`` must be resolved on."""
    m = mean(model)
    spread = 12 * model.sigma * np.sqrt(t_max) + 4
    heavy = jump_room if model.pareto_components() else 0.0
    light = 0.0
    for c in model.jumps:
        if hasattr(c.law, "eta"):
            light = max(light, 40.0 / c.law.eta)
        elif hasattr(c.law, "x"):
            light = max(light, abs(c.law.x) * (1 + c.rate * t_max))
    y_plus = max(0.0, m * t_max) + spread + heavy + light
    y_minus = max(0.0, -m * t_max) + spread + light
    return float(y_minus), float(y_plus)


@dataclass
class FactorData:
    """Everything the harmonic route needs for one ``q``."""

    q: float
    cell: float
    log_phi1: dict
    log_phi0: dict
    jump_density: dict    # sign -> cell masses of the jump part of W(q, dy) on [k cell, (k+1) cell)
    rates: dict
    err: float


def _build_factor(model: LevyModel, q: float, cell: float, refine: int,
                  t_max: float, tau0: float) -> FactorData:
    y_minus, y_plus = _time_layout(model, t_max)
    nm = int(np.ceil(y_minus / cell)) if model.jumps else 0
    npl = int(np.ceil(y_plus / cell)) if model.jumps else 0
    lo = -nm * cell
    ncell = nm + npl
    h = cell / refine
    panels = time_panels(t_max, tau0=tau0)
    engine = make_engine(model, h, nm * cell, npl * cell, t_max)

    def rows(ts):
        out = np.zeros((ts.size, 4 + ncell), dtype=complex)
        for i, t in enumerate(ts):
            node = NodeLaw(model, t, engine)
            pp, pm = node.prob_plus(), node.prob_minus()
            lp = node.laplace_plus(1.0)[0]
            lm = node.laplace_minus(1.0)[0]
            e1, eq = np.exp(-t), np.exp(-q * t)
            out[i, 0] = (e1 * pp - eq * lp) / t
            out[i, 1] = (e1 * pm - eq * lm) / t
            out[i, 2] = (e1 - eq) * pp / t
            out[i, 3] = (e1 - eq) * pm / t if q > 0 else 0.0
            if ncell:
                out[i, 4:] = node.jump_cells(lo, ncell, cell, refine) * (eq / t)
        return out

    total, err, per = integrate(rows, panels, shape=(4 + ncell,))
    if q == 0:
        total = total + power_tail(per)
    total = total.real
    log_phi1 = {PLUS: total[0], MINUS: total[1]}
    log_phi0 = {PLUS: total[2], MINUS: total[3] if q > 0 else -np.inf}
    if q == 0 and mean(model) >= 0:
        log_phi0[PLUS] = -np.inf
        log_phi0[MINUS] = total[3]
    cells = total[4:]
    dens = {PLUS: cells[nm:].copy(), MINUS: cells[:nm][::-1].copy()}
    return FactorData(q, cell, log_phi1, log_phi0, dens, nojump_rates(model, q),
                      float(np.max(err[:2])))


def _cell_sum(w: np.ndarray, dens: np.ndarray, cell: float) -> np.ndarray:
    """``sum_k dens_k * mean over cell k of exp(-w y)`` for ``Re w > 0``."""
    out = np.zeros(w.shape, dtype=complex)
    if dens.size == 0:
        return out
    flat = w.ravel()
    res = np.zeros(flat.shape, dtype=complex)
    order = np.argsort(-flat.real)
    re_sorted = flat.real[order]
    a = cell * np.arange(dens.size)

    def cutoff(r):
        return dens.size if r <= 0 else min(dens.size, int(45.0 / (r * cell)) + 2)

    i = 0
    while i < order.size:
        # rows whose real parts are within a factor 2 share one cutoff
        r0 = re_sorted[i]
        j = i + 1 if r0 <= 0 else int(np.searchsorted(-re_sorted, -0.5 * r0, side="right"))
        j = max(j, i + 1)
        kc = cutoff(re_sorted[j - 1])
        j = min(j, i + max(1, int(4e6 // kc)))
        idx = order[i:j]
        res[idx] = np.exp(-np.outer(flat[idx], a[:kc])) @ dens[:kc]
        i = j
    wh = flat * cell
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = np.where(wh == 0, 1.0, -np.expm1(-wh) / wh)
    out[...] = (res * avg).reshape(w.shape)
    return out


class WienerHopfPair:
    """The two factors of one model, up to the gauge ``(c phi_+, phi_- / c)``.

    ``gauge`` multiplies ``phi_+`` and divides ``phi_-``; all gauge-free
    combinations are unaffected by it.
    """

    def __init__(self, model: LevyModel, gauge: float = 1.0, cell: float = 1.0 / 32,
                 refine: int = 2, tau0: float = 2.0**-24, t_max: float | None = None):
        self.model = model
        self.gauge = float(gauge)
        self.cell = cell
        self.refine = refine
        self.tau0 = tau0
        self.t_max = t_max
        self._cache: dict = {}
        self._lock = threading.Lock()
        self.gauge_note = "factors are defined up to (c phi_+, phi_- / c)"

    def with_gauge(self, gauge: float) -> "WienerHopfPair":
        other = WienerHopfPair(self.model, gauge, self.cell, self.refine, self.tau0, self.t_max)
        other._cache = self._cache
        other._lock = self._lock
        return other

    def factor_data(self, q: float) -> FactorData:
        q = float(q)
        if q < 0:
            raise DomainError("q must be nonnegative")
        if q == 0 and not self.model.drifts_to_minus_infinity:
            from .errors import TransienceRequired

            raise TransienceRequired("q = 0 needs a process drifting to minus infinity")
        with self._lock:
            fd = self._cache.get(q)
        if fd is None:
            t_max = self.t_max or default_t_max(self.model, q)
            fd = _build_factor(self.model, q, self.cell, self.refine, t_max, self.tau0)
            with self._lock:
                self._cache.setdefault(q, fd)
        return fd

    def _gauge_log(self, sign):
        return np.log(self.gauge) if sign == PLUS else -np.log(self.gauge)

    def log_phi(self, sign, q, z, route: str = "harmonic"):
        """Continuous logarithm of ``phi_sign(q, z)``."""
        sign = _sign(sign)
        z = np.asarray(z, dtype=complex)
        if np.any(z.real < 0):
            raise DomainError("the factors are evaluated on Re z >= 0")
        if route == "time":
            val, _ = log_phi_time(self.model, sign, q, z, tau0=self.tau0, t_max=self.t_max)
            return val + self._gauge_log(sign)
        fd = self.factor_data(q)
        out = np.full(z.shape, fd.log_phi1[sign], dtype=complex)
        c = fd.rates[sign]
        zero = z == 0
        if c is not None:
            with np.errstate(divide="ignore"):
                out += np.log(c + z) - np.log(c + 1.0)
        dens = fd.jump_density[sign]
        if dens.size:
            s1 = _cell_sum(np.array([1.0 + 0j]), dens, fd.cell)[0]
            zz = np.where(zero, 1.0, z)
            out += s1 - _cell_sum(zz, dens, fd.cell)
        if np.any(zero):
            out = np.where(zero, fd.log_phi0[sign], out)
        return out + self._gauge_log(sign)

    def phi(self, sign, q, z, route: str = "harmonic"):
        return np.exp(self.log_phi(sign, q, z, route))

    def h(self, q: float) -> float:
        return h_of_q(self.model, q)

    def bernstein(self, sign, q):
        """The factor ``z -> phi_sign(q, z)`` as a Bernstein function."""
        from .bernstein_gamma import BernsteinFunction

        sign = _sign(sign)
        key = ("bernstein", sign, float(q), self.gauge)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        fd = self.factor_data(q)
        kill = float(np.exp(fd.log_phi0[sign] + self._gauge_log(sign)))
        drift = float("nan")
        c = fd.rates[sign]
        if not self.model.jumps and c is not None:
            # without jumps phi(q, z) = phi(q, 1) (c + z) / (c + 1) exactly
            drift = float(np.exp(fd.log_phi1[sign] + self._gauge_log(sign)) / (c + 1.0))
        bf = BernsteinFunction(
            kill=kill, drift=drift, jump_measure=None,
            log_evaluator=lambda w: self.log_phi(sign, q, w),
            label=f"phi{sign}(q={q:g})",
        )
        with self._lock:
            self._cache.setdefault(key, bf)
        return bf


def log_phi_time(model: LevyModel, sign, q: float, z, tau0: float = 2.0**-24,
                 t_max: float | None = None, lattice_step: float = 1.0 / 256):
    """Time-route ``ln phi_sign(q, z)`` and an error estimate, vectorized in ``z``."""
    sign = _sign(sign)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z.real < 0):
        raise DomainError("Re z must be nonnegative")
    if q == 0 and not model.drifts_to_minus_infinity:
        from .errors import TransienceRequired

        raise TransienceRequired("q = 0 needs a process drifting to minus infinity")
    t_max = t_max or default_t_max(model, q)
    y_minus, y_plus = _time_layout(model, t_max)
    panels = time_panels(t_max, tau0=tau0)
    engine = make_engine(model, lattice_step, y_minus, y_plus, t_max)

    def rows(ts):
        out = np.zeros((ts.size, z.size), dtype=complex)
        for i, t in enumerate(ts):
            node = NodeLaw(model, t, engine)
            if sign == PLUS:
                p, lap = node.prob_plus(), node.laplace_plus(z)
            else:
                p, lap = node.prob_minus(), node.laplace_minus(z)
            out[i] = (np.exp(-t) * p - np.exp(-q * t) * lap) / t
        return out

    total, err, per = integrate(rows, panels, shape=(z.size,))
    if q == 0:
        total = total + power_tail(per)
    return total, err


def phi(model: LevyModel, sign, q: float, z, route: str = "time"):
    """``phi_sign(q, z)``; the time route is the reference definition."""
    z = np.asarray(z, dtype=complex)
    if route == "time":
        val, _ = log_phi_time(model, sign, q, z.ravel())
        return np.exp(val).reshape(z.shape)[()]
    return WienerHopfPair(model).phi(sign, q, z)


def h_of_q(model: LevyModel, q: float) -> float:
    """Compound Poisson correction ``h(q)``; identically 1 unless ``P(xi_t = 0) > 0``."""
    if q < 0:
        raise DomainError("q must be nonnegative")
    if not model.is_compound_poisson or q == 1:
        return 1.0
    lam = model.total_rate
    panels = time_panels(2.0 ** np.ceil(np.log2(80.0 / min(lam, 1.0 + q) + 1)), tau0=2.0**-20)

    def rows(ts):
        # P(xi_t = 0) is carried by the no-jump atom
        return ((np.exp(-ts) - np.exp(-q * ts)) * np.exp(-lam * ts) / ts)[:, None]

    total, _, _ = integrate(rows, panels, shape=(1,))
    return float(np.exp(-total.real[0]))


def ln_phi_plus_deriv(model: LevyModel, q: float, n: int, tau0: float = 2.0**-20,
                      t_max: float | None = None, lattice_step: float = 1.0 / 128) -> float:
    """``d^n/dq^n ln phi_+(q, 0) = (-1)^{n+1} int_0^inf e^{-qt} t^{n-1} P(xi_t >= 0) dt``."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if q < 0:
        raise DomainError("q must be nonnegative")
    if q == 0:
        from .potentials import integral_criterion

        if not model.drifts_to_minus_infinity:
            raise DivergentIntegral("P(xi_t >= 0) does not decay")
        # the integral below is the occupation route of the criterion of order n
        if not integral_criterion(model, n).finite:
            raise DivergentIntegral(f"occupation integral of order {n} is infinite")
    t_max = t_max or (default_t_max(model, q) if q > 0 else 1024.0)
    y_minus, y_plus = _time_layout(model, t_max)
    panels = time_panels(t_max, tau0=tau0)
    engine = make_engine(model, lattice_step, 0.0, y_plus, t_max)

    def rows(ts):
        out = np.zeros((ts.size, 1))
        for i, t in enumerate(ts):
            node = NodeLaw(model, t, engine)
            out[i, 0] = np.exp(-q * t) * t ** (n - 1) * node.prob_plus()
        return out

    total, _, per = integrate(rows, panels, shape=(1,))
    if q == 0:
        total = total + power_tail(per)
    return float((-1) ** (n + 1) * total.real[0])
