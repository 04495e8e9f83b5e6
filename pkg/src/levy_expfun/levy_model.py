"""Lévy models built from a Gaussian part and finitely many compound Poisson components.

A model is the triplet ``(gamma, sigma2, Pi)`` where ``Pi`` is a finite sum of
``rate * law``.  The Lévy-Khintchine exponent uses the truncation ``1{|y| <= 1}``::

    Psi(z) = gamma z + sigma2 z^2 / 2 + sum rate (E[e^{zJ}] - 1 - z E[J; |J| <= 1])

Since every component has finite mass, the process is ``mu t + sigma B_t + S_t``
with ``S`` an uncompensated compound Poisson process and ``mu`` the effective
drift ``gamma - sum rate E[J; |J| <= 1]``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Union

import mpmath
import numpy as np
from scipy import fft as sfft
from scipy.special import ndtr

from .errors import AliasingError, DomainError, GridTooNarrow
from .grid import GridMeasure, parse_grid

MASS_TOLERANCE = 1e-6


# ---------------------------------------------------------------- jump laws


@dataclass(frozen=True)
class ParetoPositive:
    """Density ``alpha x0^alpha y^(-alpha-1)`` on ``y > x0``."""

    alpha: float
    x0: float = 1.0

    def __post_init__(self):
        if not self.alpha > 1:
            raise DomainError("Pareto index must exceed 1 (finite mean)")
        if not self.x0 > 0:
            raise DomainError("Pareto scale must be positive")

    @property
    def has_negative(self):
        return False

    def mgf(self, w):
        w = np.asarray(w, dtype=complex)
        if np.any(w.real > 1e-14):
            raise DomainError("Pareto moment generating function needs Re w <= 0")
        out = np.empty(w.shape, dtype=complex)
        nu = self.alpha + 1
        for idx, wi in np.ndenumerate(w):
            if wi == 0:
                out[idx] = 1.0
            else:
                out[idx] = complex(self.alpha * mpmath.expint(nu, -wi * self.x0))
        return out

    def mean(self):
        return self.alpha * self.x0 / (self.alpha - 1)

    def small_mean(self):
        if self.x0 >= 1:
            return 0.0
        a = self.alpha
        return a * self.x0**a * (self.x0 ** (1 - a) - 1.0) / (a - 1)

    def sf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y < self.x0, 1.0, (self.x0 / np.maximum(y, self.x0)) ** self.alpha)

    def neg_cdf(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def int_sf(self, a, b):
        """Integral of the survival function over ``[a, b]``, ``0 <= a <= b``."""
        x0, al = self.x0, self.alpha
        lo_part = max(0.0, min(b, x0) - a)
        a2, b2 = max(a, x0), max(b, x0)
        hi_part = x0**al * (a2 ** (1 - al) - b2 ** (1 - al)) / (al - 1)
        return lo_part + hi_part

    def int_neg(self, a, b):
        return 0.0

    def mass(self, a, b):
        a = np.maximum(np.asarray(a, dtype=float), self.x0)
        b = np.maximum(np.asarray(b, dtype=float), self.x0)
        sa = (self.x0 / a) ** self.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(b > a, -np.expm1(self.alpha * np.log(a / b)), 0.0)
        return sa * r

    def pmean(self, a, b):
        a = np.maximum(np.asarray(a, dtype=float), self.x0)
        b = np.maximum(np.asarray(b, dtype=float), self.x0)
        al = self.alpha
        base = al * self.x0**al * a ** (1 - al) / (al - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(b > a, -np.expm1((1 - al) * np.log(b / a)), 0.0)
        return base * r

    def sample(self, rng, n):
        u = rng.random(n)
        return self.x0 * (1.0 - u) ** (-1.0 / self.alpha)

    def sample_above(self, rng, n, c):
        """Sample conditioned on ``J > c``."""
        lo = max(c, self.x0)
        u = rng.random(n)
        return lo * (1.0 - u) ** (-1.0 / self.alpha)

    def sample_below(self, rng, n, c):
        """Sample conditioned on ``J <= c`` (needs ``c > x0``)."""
        pc = 1.0 - (self.x0 / c) ** self.alpha
        u = rng.random(n) * pc
        return self.x0 * (1.0 - u) ** (-1.0 / self.alpha)

    def to_dict(self):
        return {"type": "ParetoPositive", "alpha": self.alpha, "x0": self.x0}


def _exp_mass(eta, a, b):
    """``P(a < E <= b)`` for ``E ~ Exp(eta)`` with ``a <= b`` clipped at 0."""
    a = np.maximum(a, 0.0)
    b = np.maximum(b, 0.0)
    return np.exp(-eta * a) * -np.expm1(-eta * (b - a))


def _exp_pmean(eta, a, b):
    a = np.maximum(a, 0.0)
    b = np.maximum(b, 0.0)
    return (a + 1 / eta) * np.exp(-eta * a) - (b + 1 / eta) * np.exp(-eta * b)


@dataclass(frozen=True)
class ExponentialPositive:
    """Jumps ``J ~ Exp(eta)`` on ``(0, inf)``."""

    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError("eta must be positive")

    @property
    def has_negative(self):
        return False

    def mgf(self, w):
        w = np.asarray(w, dtype=complex)
        if np.any(w.real >= self.eta):
            raise DomainError("Re w must stay below eta")
        return self.eta / (self.eta - w)

    def mean(self):
        return 1.0 / self.eta

    def small_mean(self):
        return float(_exp_pmean(self.eta, 0.0, 1.0))

    def sf(self, y):
        return np.exp(-self.eta * np.maximum(np.asarray(y, dtype=float), 0.0))

    def neg_cdf(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def int_sf(self, a, b):
        return (np.exp(-self.eta * a) - np.exp(-self.eta * b)) / self.eta

    def int_neg(self, a, b):
        return 0.0

    def mass(self, a, b):
        return _exp_mass(self.eta, np.asarray(a, float), np.asarray(b, float))

    def pmean(self, a, b):
        return _exp_pmean(self.eta, np.asarray(a, float), np.asarray(b, float))

    def sample(self, rng, n):
        return rng.exponential(1.0 / self.eta, n)

    def to_dict(self):
        return {"type": "ExponentialPositive", "eta": self.eta}


@dataclass(frozen=True)
class ExponentialNegative:
    """Jumps ``J = -E`` with ``E ~ Exp(eta)``."""

    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError("eta must be positive")

    @property
    def has_negative(self):
        return True

    def mgf(self, w):
        w = np.asarray(w, dtype=complex)
        if np.any(w.real <= -self.eta):
            raise DomainError("Re w must stay above -eta")
        return self.eta / (self.eta + w)

    def mean(self):
        return -1.0 / self.eta

    def small_mean(self):
        return -float(_exp_pmean(self.eta, 0.0, 1.0))

    def sf(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def neg_cdf(self, y):
        return np.exp(-self.eta * np.maximum(np.asarray(y, dtype=float), 0.0))

    def int_sf(self, a, b):
        return 0.0

    def int_neg(self, a, b):
        return (np.exp(-self.eta * a) - np.exp(-self.eta * b)) / self.eta

    def mass(self, a, b):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        return _exp_mass(self.eta, -b, -a)

    def pmean(self, a, b):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        return -_exp_pmean(self.eta, -b, -a)

    def sample(self, rng, n):
        return -rng.exponential(1.0 / self.eta, n)

    def to_dict(self):
        return {"type": "ExponentialNegative", "eta": self.eta}


@dataclass(frozen=True)
class PointMass:
    """Jumps of fixed size ``x``."""

    x: float

    @property
    def has_negative(self):
        return self.x < 0

    def mgf(self, w):
        return np.exp(np.asarray(w, dtype=complex) * self.x)

    def mean(self):
        return self.x

    def small_mean(self):
        return self.x if abs(self.x) <= 1 else 0.0

    def sf(self, y):
        return (self.x > np.asarray(y, dtype=float)).astype(float)

    def neg_cdf(self, y):
        return (self.x < -np.asarray(y, dtype=float)).astype(float)

    def int_sf(self, a, b):
        return max(0.0, min(b, self.x) - a)

    def int_neg(self, a, b):
        return max(0.0, min(b, -self.x) - a)

    def mass(self, a, b):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        return ((a < self.x) & (self.x <= b)).astype(float)

    def pmean(self, a, b):
        return self.x * self.mass(a, b)

    def sample(self, rng, n):
        return np.full(n, float(self.x))

    def to_dict(self):
        return {"type": "PointMass", "x": self.x}


JumpLaw = Union[ParetoPositive, ExponentialPositive, ExponentialNegative, PointMass]

_LAWS = {
    "ParetoPositive": ParetoPositive,
    "ExponentialPositive": ExponentialPositive,
    "ExponentialNegative": ExponentialNegative,
    "PointMass": PointMass,
}


@dataclass(frozen=True)
class JumpComponent:
    rate: float
    law: JumpLaw

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("jump rates must be positive")


# ---------------------------------------------------------------- the model


@dataclass(frozen=True)
class LevyModel:
    gamma: float
    sigma2: float = 0.0
    jumps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise DomainError("sigma2 must be nonnegative")
        object.__setattr__(self, "jumps", tuple(self.jumps))

    # construction / serialization
    @classmethod
    def from_dict(cls, d: dict) -> "LevyModel":
        jumps = []
        for comp in d.get("jumps", []):
            law = dict(comp["law"])
            kind = law.pop("type")
            if kind not in _LAWS:
                raise DomainError(f"unknown jump law {kind!r}")
            jumps.append(JumpComponent(float(comp["rate"]), _LAWS[kind](**law)))
        return cls(float(d["gamma"]), float(d.get("sigma2", 0.0)), tuple(jumps))

    @classmethod
    def from_json(cls, path) -> "LevyModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "sigma2": self.sigma2,
            "jumps": [{"rate": c.rate, "law": c.law.to_dict()} for c in self.jumps],
        }

    def model_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    # derived constants
    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    @property
    def total_rate(self) -> float:
        return float(sum(c.rate for c in self.jumps))

    @property
    def drift(self) -> float:
        """Effective drift once the compensator is folded into the linear term."""
        return self.gamma - sum(c.rate * c.law.small_mean() for c in self.jumps)

    @property
    def has_negative_jumps(self) -> bool:
        return any(c.law.has_negative for c in self.jumps)

    @property
    def drifts_to_minus_infinity(self) -> bool:
        return mean(self) < 0

    @property
    def is_compound_poisson(self) -> bool:
        """Driftless compound Poisson: the only case where ``P(xi_t = 0) > 0``."""
        return self.sigma2 == 0 and self.drift == 0 and bool(self.jumps)

    def pareto_components(self):
        return [c for c in self.jumps if isinstance(c.law, ParetoPositive)]


def psi(model: LevyModel, z, q: float = 0.0):
    """``Psi(z) - q`` for complex ``z`` (scalar or array)."""
    z = np.asarray(z, dtype=complex)
    out = model.gamma * z + 0.5 * model.sigma2 * z * z - q
    for c in model.jumps:
        out = out + c.rate * (c.law.mgf(z) - 1.0 - z * c.law.small_mean())
    if not np.all(np.isfinite(out)):
        raise DomainError("exponent is not finite at the requested point")
    return out[()] if out.ndim == 0 else out


def mean(model: LevyModel) -> float:
    """``E[xi_1]``."""
    return model.drift + sum(c.rate * c.law.mean() for c in model.jumps)


def tail_positive(model: LevyModel, x: float) -> float:
    """``Pi((x, inf))``."""
    return float(sum(c.rate * c.law.sf(x) for c in model.jumps))


def tail_negative(model: LevyModel, x: float) -> float:
    """``Pi((-inf, -x))``."""
    return float(sum(c.rate * c.law.neg_cdf(x) for c in model.jumps))


def _raw_A(model: LevyModel, x: float) -> float:
    val = model.gamma + tail_positive(model, 1.0) - tail_negative(model, 1.0)
    if x >= 1:
        val += sum(c.rate * (c.law.int_sf(1.0, x) - c.law.int_neg(1.0, x)) for c in model.jumps)
    else:
        val -= sum(c.rate * (c.law.int_sf(x, 1.0) - c.law.int_neg(x, 1.0)) for c in model.jumps)
    return float(val)


def _A_switch_point(model: LevyModel) -> float:
    """Point beyond which ``A`` has the sign of its limit, with room to spare."""
    m = mean(model)
    if m == 0 or not model.jumps:
        return 1.0
    xs = np.geomspace(1.0, 1e8, 321)
    vals = np.array([_raw_A(model, x) for x in xs])
    bad = np.nonzero((np.sign(vals) != np.sign(m)) | (np.abs(vals) < 0.5 * abs(m)))[0]
    if bad.size == 0:
        return 1.0
    return float(xs[min(bad[-1] + 1, xs.size - 1)])


def big_A(model: LevyModel, x: float) -> float:
    """``A(x) = gamma + Pi(1, inf) - Pi(-inf, -1) + int_1^x (Pi(y, inf) - Pi(-inf, -y)) dy``.

    When ``A`` changes sign on ``(1, x0]`` (relative to the sign of ``E[xi_1]``)
    it is frozen at ``A(x0)`` there, ``x0`` being the first grid point after the
    last sign change where ``|A| >= |E xi_1| / 2``.
    """
    if not x > 0:
        raise DomainError("A(x) needs x > 0")
    raw = _raw_A(model, x)
    m = mean(model)
    if m == 0 or not model.jumps:
        return raw
    x0 = _A_switch_point(model)
    if x0 > 1.0 and 1.0 < x <= x0:
        return _raw_A(model, x0)
    return raw


@dataclass
class TailReport:
    alpha_hat: float
    ell_at: list
    is_regularly_varying: bool
    note: str = ""


def estimate_rv_index(model: LevyModel) -> TailReport:
    """Fit the index of the positive Lévy tail on a geometric grid far out."""
    pareto = model.pareto_components()
    if not pareto:
        return TailReport(float("nan"), [], False, "no power-law positive jumps")
    start = 10.0 * max(c.law.x0 for c in pareto)
    xs = np.geomspace(start * 1e3, start * 1e6, 16)
    tails = np.array([tail_positive(model, x) for x in xs])
    slope = np.polyfit(np.log(xs), np.log(tails), 1)[0]
    alpha_hat = -float(slope)
    ell = [(float(x), float(x**alpha_hat * tp)) for x, tp in zip(xs, tails)]
    return TailReport(alpha_hat, ell, True, "log-log slope over [1e4, 1e7] x scale")


def slowly_varying_constant(model: LevyModel) -> tuple[float, float]:
    """``(alpha, ell)`` for the heaviest Pareto tail, ``ell`` the constant slowly varying part."""
    pareto = model.pareto_components()
    if not pareto:
        from .errors import NotRegularlyVarying

        raise NotRegularlyVarying("model has no Pareto component")
    alpha = min(c.law.alpha for c in pareto)
    ell = sum(c.rate * c.law.x0**alpha for c in pareto if c.law.alpha == alpha)
    return alpha, float(ell)


# ------------------------------------------------------- jump part on a lattice


def lattice_pmf(law, h: float, j_lo: int, n: int) -> np.ndarray:
    """Mass- and mean-preserving spread of ``law`` onto the points ``(j_lo + i) h``.

    Mass that would land outside the ``n`` points is dropped.
    """
    j = np.arange(j_lo - 1, j_lo + n)
    a, b = j * h, (j + 1) * h
    p = law.mass(a, b)
    pm = law.pmean(a, b)
    left = (b * p - pm) / h
    right = (pm - a * p) / h
    out = np.zeros(n)
    out += left[1:]
    out += right[:-1]
    return np.maximum(out, 0.0)


@dataclass
class JumpLattice:
    """Law of the jump part ``S_t`` restricted to at least one jump, on ``(j_lo + i) h``."""

    h: float
    j_lo: int
    masses: np.ndarray
    no_jump: float

    @property
    def points(self) -> np.ndarray:
        return (self.j_lo + np.arange(self.masses.size)) * self.h


class JumpLatticeEngine:
    """Compound Poisson laws ``S_t`` for many ``t`` on one fixed lattice window.

    The single-jump lattice law and its transform are computed once; each ``t``
    then costs one exponential and one inverse real FFT.  Jumps larger than the
    window are dropped (they count as having left the window to the right).
    Wrap-around of sums past the window is suppressed by exponential damping of
    the periodic transform when all jumps are positive.
    """

    def __init__(self, model: LevyModel, h: float, s_lo: float, s_hi: float):
        self.model = model
        self.h = h
        self.lam = model.total_rate
        self.j_lo = int(np.floor(s_lo / h)) - 1
        self.n_need = int(np.ceil((s_hi - self.j_lo * h) / h)) + 2
        self.n_fft = sfft.next_fast_len(2 * self.n_need, real=True)
        period = self.n_fft * h
        self.beta = 0.0 if model.has_negative_jumps else 30.0 / period
        j = self.j_lo + np.arange(self.n_need)
        self._idx = np.mod(j, self.n_fft)
        self._damp = np.exp(-self.beta * (j * h))
        acc = 0.0
        for c in model.jumps:
            arr = np.zeros(self.n_fft)
            arr[self._idx] = lattice_pmf(c.law, h, self.j_lo, self.n_need) * self._damp
            acc = acc + c.rate * sfft.rfft(arr)
        self._hat = acc

    def at(self, t: float) -> "JumpLattice":
        s_hat = _poisson_sum(self.lam, t, self._hat)
        s = sfft.irfft(s_hat, self.n_fft)
        masses = s[self._idx] / self._damp
        if self.beta == 0.0 and self.n_need > 8:
            tail = np.abs(masses[-4:]).max() + np.abs(masses[:4]).max()
            if tail > 1e-6 * max(masses.max(), 1e-300) and tail > 1e-12:
                raise AliasingError("jump part not contained in the lattice window")
        return JumpLattice(self.h, self.j_lo, np.maximum(masses, 0.0), float(np.exp(-self.lam * t)))


def jump_lattice(model: LevyModel, t: float, h: float, s_lo: float, s_hi: float) -> JumpLattice:
    """Compound Poisson law of ``S_t`` on a lattice covering ``[s_lo, s_hi]``."""
    return JumpLatticeEngine(model, h, s_lo, s_hi).at(t)


def jump_mgf_part(model: LevyModel, t: float, w) -> np.ndarray:
    """``E[e^{w S_t}; at least one jump]`` for complex ``w`` (exact)."""
    w = np.asarray(w, dtype=complex)
    acc = np.zeros(w.shape, dtype=complex)
    for c in model.jumps:
        acc = acc + c.rate * c.law.mgf(w)
    return _poisson_sum(model.total_rate, t, acc)


def _poisson_sum(lam: float, t: float, hat):
    """``e^{-lam t}(e^{t hat} - 1)`` without overflow for large ``lam t``."""
    if lam * t < 30.0:
        return np.exp(-lam * t) * np.expm1(t * hat)
    return np.exp(t * (hat - lam)) - np.exp(-lam * t)


# ------------------------------------------------------------------ marginals


def _gauss_cells(edges, m, s):
    if s == 0:
        raise ValueError
    return np.diff(ndtr((edges - m) / s))


def marginal(model: LevyModel, t: float, grid, refine: int = 4,
             mass_tolerance: float = MASS_TOLERANCE) -> GridMeasure:
    """``P(xi_t in cell)`` on a uniform grid with atoms kept separately."""
    if not t > 0:
        raise DomainError("t must be positive")
    lo, hi, n = parse_grid(grid)
    width = (hi - lo) / n
    edges = lo + width * np.arange(n + 1)
    mu, sig = model.drift, model.sigma
    lam = model.total_rate
    p0 = float(np.exp(-lam * t))
    st = sig * np.sqrt(t)
    masses = np.zeros(n)
    atoms = []
    if st > 0:
        masses += p0 * _gauss_cells(edges, mu * t, st)
    else:
        atoms.append((mu * t, p0))
    if model.jumps:
        h = width / refine
        pad = 12 * st + 2 * width
        s_hi = hi - mu * t + pad
        s_lo = min(0.0, lo - mu * t - pad) if model.has_negative_jumps else 0.0
        if s_hi > s_lo:
            lat = jump_lattice(model, t, h, s_lo, s_hi)
            fine = _lattice_to_fine_cells(lat, lo, h, n * refine, mu * t, st)
            masses += fine.reshape(n, refine).sum(axis=1)
    captured = masses.sum() + sum(m for x, m in atoms if lo <= x < hi)
    if captured < 1 - mass_tolerance:
        raise GridTooNarrow(f"grid captures {captured:.8f} of the mass")
    return GridMeasure(lo, hi, n, masses, atoms)


def _lattice_to_fine_cells(lat: JumpLattice, lo, h, n_fine, shift, st):
    """Add ``shift + G`` (``G ~ N(0, st^2)``) to lattice masses and bin into width-``h`` cells.

    Fine cell ``i`` is ``[lo + i h, lo + (i+1) h)``; lattice point ``j`` sits at ``j h``.
    """
    # offset of lattice index j relative to fine cell index: point j h + shift lies
    # in fine cell floor((j h + shift - lo)/h) = j + floor((shift - lo)/h + frac)
    base = (shift - lo) / h
    k0 = int(np.floor(base))
    frac = base - k0
    if st > 0:
        half = int(np.ceil(12 * st / h)) + 2
        d = np.arange(-half, half + 1)
        # cell index offset d: mass of shift + j h + G in [lo + (j + k0 + d) h, ... + h)
        e = (d - frac) * h
        kern = ndtr((e + h) / st) - ndtr(e / st)
    else:
        half = 0
        d = np.array([0])
        kern = np.array([1.0])
    conv = sfft.irfft(
        sfft.rfft(lat.masses, sfft.next_fast_len(lat.masses.size + kern.size))
        * sfft.rfft(kern, sfft.next_fast_len(lat.masses.size + kern.size)),
        sfft.next_fast_len(lat.masses.size + kern.size),
    )[: lat.masses.size + kern.size - 1]
    # conv[m] corresponds to fine index (j_lo + k0 - half) + m
    start = lat.j_lo + k0 - half
    out = np.zeros(n_fine)
    i0 = max(0, start)
    i1 = min(n_fine, start + conv.size)
    if i1 > i0:
        out[i0:i1] = conv[i0 - start:i1 - start]
    return np.maximum(out, 0.0)
