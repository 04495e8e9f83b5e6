"""q-potential measures, their convolution powers and the integral criteria."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.special import gammaln

from . import _sweep
from ._nodes import NodeLaw, make_engine
from .errors import AssumptionUnmet, CriterionViolated, DomainError, GridMismatch, TransienceRequired
from .grid import GridMeasure, parse_grid
from .levy_model import LevyModel, big_A
from .quadrature import _gl


@dataclass
class PotentialMeasure:
    q: float
    order: int
    measure: GridMeasure
    construction: str  # "time_integral" or "grid_convolution"

    def total(self) -> float:
        return self.measure.total()


def _check_q(model: LevyModel, q: float):
    if q < 0:
        raise DomainError("q must be nonnegative")
    if q == 0 and not model.drifts_to_minus_infinity:
        raise TransienceRequired("q = 0 needs a process drifting to minus infinity")


def potential(model: LevyModel, q: float, grid, refine: int = 2,
              t_max: float | None = None) -> PotentialMeasure:
    """``U_q(dx) = int e^{-qt} P(xi_t in dx) dt`` on ``grid``."""
    return potential_power(model, q, 1, grid, refine=refine, t_max=t_max)


def potential_power(model: LevyModel, q: float, n: int, grid, refine: int = 2,
                    t_max: float | None = None) -> PotentialMeasure:
    """``U_q^{*n}(dx) = int e^{-qt} t^{n-1} P(xi_t in dx) dt / (n-1)!``, by time integration."""
    if n < 1:
        raise DomainError("n must be at least 1")
    _check_q(model, q)
    if q == 0 and n > 1 and not integral_criterion(model, n - 1).finite:
        raise CriterionViolated(f"U^{{*{n}}} is not Radon: criterion of order {n - 1} is infinite")
    lo, hi, ncell = parse_grid(grid)
    m, atoms, _ = _sweep.occupation(model, q, n, lo, hi, ncell, refine=refine, t_max=t_max)
    scale = np.exp(-gammaln(n))
    gm = GridMeasure(lo, hi, ncell, m * scale, [(x, a * scale) for x, a in atoms])
    return PotentialMeasure(q, n, gm, "time_integral")


def _place(x, mass, lo, w, n):
    """Cell masses of a uniform spread of ``mass`` on ``[x, x + w)`` over the grid."""
    out = np.zeros(n)
    pos = (x - lo) / w
    k = int(np.floor(pos))
    frac = pos - k
    for idx, part in ((k, 1 - frac), (k + 1, frac)):
        if 0 <= idx < n and part > 0:
            out[idx] += mass * part
    return out


def convolve(p1: PotentialMeasure, p2: PotentialMeasure) -> PotentialMeasure:
    """Grid convolution of two measures on the same grid.

    Within a cell mass is taken as uniform.  The sum of two uniform cells is a
    triangle over two output cells, split half and half; atoms are handled
    exactly.  The output lives on the same grid, which requires ``lo`` to be a
    multiple of the cell width.
    """
    a, b = p1.measure, p2.measure
    if not a.same_grid(b):
        raise GridMismatch("convolution needs identical grids")
    if p1.q != p2.q:
        raise DomainError("convolution of potentials with different q")
    n, w, lo = a.n_cells, a.width, a.lo
    shift = lo / w
    if abs(shift - round(shift)) > 1e-9:
        raise GridMismatch("lo must be an integer multiple of the cell width")
    shift = int(round(shift))
    size = sfft.next_fast_len(2 * n)
    conv = sfft.irfft(sfft.rfft(a.masses, size) * sfft.rfft(b.masses, size), size)[: 2 * n - 1]
    # cells i, j -> triangle on [2 lo + (i + j) w, 2 lo + (i + j + 2) w)
    full = np.zeros(2 * n)
    full[:-1] += 0.5 * conv
    full[1:] += 0.5 * conv
    out = np.zeros(n)
    # full index m sits at 2 lo + m w = lo + (m + shift) w
    src = np.arange(2 * n)
    dst = src + shift
    ok = (dst >= 0) & (dst < n)
    out[dst[ok]] = full[src[ok]]
    atoms = []
    for xa, ma in a.atoms:
        out += _shifted_cells(b.masses, xa, ma, w, n)
        for xb, mb in b.atoms:
            atoms.append((xa + xb, ma * mb))
    for xb, mb in b.atoms:
        out += _shifted_cells(a.masses, xb, mb, w, n)
    out = np.maximum(out, 0.0)
    gm = GridMeasure(lo, a.hi, n, out, _merge_atoms(atoms))
    return PotentialMeasure(p1.q, p1.order + p2.order, gm, "grid_convolution")


def _shifted_cells(masses, x, m, w, n):
    """Cells of ``masses`` translated by ``x`` (uniform within cells), times ``m``."""
    pos = x / w
    k = int(np.floor(pos))
    frac = pos - k
    out = np.zeros(n)
    for off, part in ((k, 1 - frac), (k + 1, frac)):
        if part <= 0:
            continue
        src = np.arange(n)
        dst = src + off
        ok = (dst >= 0) & (dst < n)
        out[dst[ok]] += m * part * masses[src[ok]]
    return out


def _merge_atoms(atoms):
    merged: dict = {}
    for x, m in atoms:
        key = round(x, 12)
        merged[key] = merged.get(key, 0.0) + m
    return sorted(merged.items())


# ---------------------------------------------------------------- criteria
@dataclass
class CriterionReport:
    n: int
    value: float                 # +inf when divergent
    route: str                   # route used for `value`
    consistent: bool
    levy_value: float = np.nan
    occupation_value: float = np.nan
    levy_exponent: float = np.nan       # growth exponent of dyadic increments
    occupation_exponent: float = np.nan
    doubling_growth: float = np.nan    # relative growth of the occupation integral from T=128 to 256
    details: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.value))


def _dyadic_gl(a: float, k: int, order: int = 24):
    """Gauss-Legendre nodes and weights on ``[a 2^j, a 2^{j+1}]`` for ``j < k``."""
    x, w, _ = _gl(order)
    out = []
    for j in range(k):
        lo, hi = a * 2.0**j, a * 2.0 ** (j + 1)
        out.append((lo + 0.5 * (hi - lo) * (x + 1), 0.5 * (hi - lo) * w))
    return out


def _exponent_and_value(incr):
    """Growth exponent ``log2`` of the last increment ratio and the extrapolated sum."""
    incr = np.asarray(incr, float)
    a, b = incr[-2], incr[-1]
    if b <= 0 or a <= 0:
        return -np.inf, float(incr.sum())
    r = b / a
    p = float(np.log2(r))
    if r >= 1:
        return p, np.inf
    return p, float(incr.sum() + b * r / (1 - r))


def _levy_route(model: LevyModel, n: int, k: int = 30):
    """``int_(1, inf) (x / |A(x)|)^{n+1} Pi(dx)`` over dyadic shells."""
    incr = []
    for t, w in _dyadic_gl(1.0, k):
        dens = np.zeros_like(t)
        for c in model.jumps:
            law = c.law
            if hasattr(law, "alpha"):
                a = law.alpha
                dens += np.where(t >= law.x0, c.rate * a * law.x0**a * t ** (-a - 1), 0.0)
            elif hasattr(law, "eta") and not law.has_negative:
                dens += c.rate * law.eta * np.exp(-law.eta * t)
        a_t = np.array([big_A(model, float(ti)) for ti in t])
        vals = dens * (t / np.abs(a_t)) ** (n + 1)
        incr.append(float(vals @ w))
    # point masses sit in one shell
    for c in model.jumps:
        if hasattr(c.law, "x") and c.law.x > 1:
            x = c.law.x
            j = int(np.floor(np.log2(x)))
            if j < k:
                incr[j] += c.rate * (x / abs(big_A(model, x))) ** (n + 1)
    return incr


def _occupation_route(model: LevyModel, n: int, t_lo: float = 1.0, k: int = 8,
                      lattice_step: float = 1.0 / 16):
    """``int_1^{2^k} t^{n-1} P(xi_t >= 0) dt`` over dyadic shells."""
    t_max = t_lo * 2.0**k
    engine = make_engine(model, lattice_step, 0.0, 0.0, t_max)
    incr = []
    for t, w in _dyadic_gl(t_lo, k):
        p = np.array([NodeLaw(model, ti, engine).prob_plus() for ti in t])
        incr.append(float((t ** (n - 1) * p) @ w))
    return incr


def integral_criterion(model: LevyModel, n: int) -> CriterionReport:
    """Finiteness of the criterion of order ``n`` by two independent routes.

    Both routes reduce to a tail exponent: the integrals over dyadic shells
    ``[2^j, 2^{j+1}]`` scale like ``2^{j p}`` and the integral is finite iff
    ``p < 0``.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if not model.drifts_to_minus_infinity:
        raise TransienceRequired("criterion is stated for processes drifting to minus infinity")
    lv = _levy_route(model, n)
    p_l, v_l = _exponent_and_value(lv)
    occ = _occupation_route(model, n)
    p_o, v_o = _exponent_and_value(occ)
    s = np.cumsum(occ)
    growth = float(s[-1] / s[-2] - 1) if s[-2] > 0 else 0.0
    consistent = np.isfinite(v_l) == np.isfinite(v_o)
    return CriterionReport(n=n, value=v_o, route="occupation_integral", consistent=bool(consistent),
                           levy_value=v_l, occupation_value=v_o, levy_exponent=p_l,
                           occupation_exponent=p_o, doubling_growth=growth)


# ---------------------------------------------------------------- density bounds
@dataclass
class DensityBoundReport:
    k: int
    C: float
    max_slack: float           # max over cells of density - bound (negative means slack)
    violations: list           # (cell_center, density, bound) beyond grid_tolerance
    grid_tolerance: float

    @property
    def ok(self) -> bool:
        return not self.violations


def density_bound_check(model: LevyModel, q: float, k: int, grid, grid_tolerance: float = 1e-3,
                        refine: int = 2) -> DensityBoundReport:
    """Check ``u_q^{*k}(x) <= k C U_q^{*(k-1)}(min(0, x), inf)`` cell by cell.

    ``C`` is the largest grid density of ``U_q``.
    """
    if model.sigma2 <= 0:
        raise AssumptionUnmet("bounded potential density is only guaranteed here for sigma^2 > 0")
    if q <= 0:
        raise DomainError("q must be positive")
    if k < 1:
        raise DomainError("k must be at least 1")
    lo, hi, ncell = parse_grid(grid)
    u1 = potential(model, q, grid, refine=refine).measure
    C = float(u1.density.max())
    uk = u1 if k == 1 else potential_power(model, q, k, grid, refine=refine).measure
    dens = uk.density
    x = uk.centers
    if k == 1:
        tail = np.ones(ncell)
    else:
        prev = u1 if k == 2 else potential_power(model, q, k - 1, grid, refine=refine).measure
        total = q ** (-(k - 1))
        below = np.concatenate([[0.0], np.cumsum(prev.to_cells())])
        # mass of cells lying entirely below min(0, x), so the tail is over-counted at most
        y = np.minimum(0.0, x)
        idx = np.clip(np.floor((y - lo) / prev.width).astype(int), 0, ncell)
        tail = total - below[idx]
    bound = k * C * tail
    diff = dens - bound
    bad = np.nonzero(diff > grid_tolerance)[0]
    viol = [(float(x[i]), float(dens[i]), float(bound[i])) for i in bad]
    return DensityBoundReport(k, C, float(diff.max()), viol, grid_tolerance)
