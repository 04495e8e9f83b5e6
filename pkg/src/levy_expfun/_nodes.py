"""The law of ``xi_t`` at one time node, split into the no-jump and jump parts."""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr, wofz

from .levy_model import JumpLatticeEngine, LevyModel, jump_mgf_part, _lattice_to_fine_cells

_BAND = 12.0


def gauss_onesided(z, m, s):
    """``E[exp(-z X); X >= 0]`` for ``X ~ N(m, s^2)``, broadcasting ``z`` against ``m``.

    Written through the Faddeeva function so that neither branch overflows.
    """
    z = np.asarray(z, dtype=complex)
    m = np.asarray(m, dtype=float)
    if s == 0:
        return np.where(m >= 0, np.exp(-z * m), 0.0)
    z, m = np.broadcast_arrays(z, m)
    w = (z * s * s - m) / (s * np.sqrt(2.0))
    pref = 0.5 * np.exp(-m * m / (2 * s * s))
    out = np.empty(w.shape, dtype=complex)
    pos = w.real >= 0
    out[pos] = pref[pos] * wofz(1j * w[pos])
    neg = ~pos
    zn, mn = z[neg], m[neg]
    out[neg] = np.exp(-zn * mn + 0.5 * zn * zn * s * s) - pref[neg] * wofz(-1j * w[neg])
    return out


def make_engine(model: LevyModel, h: float, y_minus: float, y_plus: float,
                t_max: float) -> JumpLatticeEngine | None:
    """Lattice engine whose window serves every ``t <= t_max``.

    ``xi_t`` has to be resolved on ``[-y_minus, y_plus]``; the window for ``S_t``
    is widened by the drift travelled and a Gaussian margin.
    """
    if not model.jumps:
        return None
    mu = model.drift
    pad = _BAND * model.sigma * np.sqrt(t_max) + 4 * h
    s_hi = max(y_plus, 0.0) + max(0.0, -mu * t_max) + pad
    if model.has_negative_jumps:
        s_lo = min(0.0, -y_minus - max(0.0, mu * t_max) - pad)
    else:
        s_lo = 0.0
    return JumpLatticeEngine(model, h, s_lo, s_hi)


class NodeLaw:
    """``xi_t = mu t + sigma B_t + S_t`` at a fixed ``t``.

    The jump part comes from a :class:`JumpLatticeEngine`.  Mass of ``S_t``
    beyond the right end of the lattice is known exactly as a total and sits on
    the positive side.
    """

    def __init__(self, model: LevyModel, t: float, engine: JumpLatticeEngine | None):
        self.model = model
        self.t = t
        self.mt = model.drift * t
        self.st = model.sigma * np.sqrt(t)
        self.p0 = float(np.exp(-model.total_rate * t))
        self.lat = None
        self.right_mass = 0.0
        if model.jumps:
            self.h = engine.h
            self.lat = engine.at(t)
            self.right_mass = max(0.0, (1.0 - self.p0) - float(self.lat.masses.sum()))
        else:
            self.h = 0.0

    # -- probabilities
    def prob_plus(self) -> float:
        """``P(xi_t >= 0)``."""
        if self.st > 0:
            p = self.p0 * ndtr(self.mt / self.st)
        else:
            p = self.p0 * (self.mt >= 0)
        if self.lat is not None:
            x = self.mt + self.lat.points
            if self.st > 0:
                p += float(self.lat.masses @ ndtr(x / self.st))
            else:
                p += float(self.lat.masses[x >= 0].sum())
        return float(p + self.right_mass)

    def prob_minus(self) -> float:
        """``P(xi_t < 0)``."""
        if self.st > 0:
            p = self.p0 * ndtr(-self.mt / self.st)
        else:
            p = self.p0 * (self.mt < 0)
        if self.lat is not None:
            x = self.mt + self.lat.points
            if self.st > 0:
                p += float(self.lat.masses @ ndtr(-x / self.st))
            else:
                p += float(self.lat.masses[x < 0].sum())
        return float(p)

    # -- one-sided transforms
    def laplace_plus(self, z) -> np.ndarray:
        """``E[exp(-z xi_t); xi_t >= 0]`` for ``Re z >= 0``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = self.p0 * gauss_onesided(z, self.mt, self.st)
        if self.model.jumps:
            zr = float(np.max(z.real))
            with np.errstate(over="ignore", invalid="ignore"):
                gshift = np.exp(-z * self.mt + 0.5 * z * z * self.st**2)
            if self.lat is None:
                far = gshift * jump_mgf_part(self.model, self.t, -z)
                return out + np.where(np.isfinite(far), far, 0.0)
            s = self.lat.points
            # beyond `cut` the Gaussian factor is fully inside the positive side
            cut = -self.mt + (_BAND + zr * self.st) * self.st + 2 * self.h
            lo_band = -self.mt - _BAND * self.st - 2 * self.h
            near = s <= cut
            band = near & (s >= lo_band)
            m_b, s_b = self.lat.masses[band], s[band]
            if m_b.size:
                g = gauss_onesided(z[:, None], self.mt + s_b[None, :], self.st)
                out = out + g @ m_b
            m_f, s_f = self.lat.masses[~near], s[~near]
            if m_f.size:
                # combined exponent: the Gaussian factor alone may overflow
                expo = -np.outer(z, self.mt + s_f) + 0.5 * (z * z * self.st**2)[:, None]
                out = out + np.exp(expo) @ m_f
            if not self.model.has_negative_jumps and self.right_mass > 0:
                out = out + self._beyond_window(z, gshift, cut)
        return out

    def _beyond_window(self, z, gshift, cut):
        """``E[exp(-z xi_t); S_t`` past the lattice``]``.

        Taken as exact transform minus the lattice sum when that difference is
        not swamped by rounding; otherwise the mass is placed at the window end.
        """
        s = self.lat.points
        s_end = s[-1] + self.h
        crude = self.right_mass * gauss_onesided(z, self.mt + s_end, self.st)
        if s_end < cut:
            return crude
        local = np.exp(-np.outer(z, s)) @ self.lat.masses
        exact = jump_mgf_part(self.model, self.t, -z)
        with np.errstate(over="ignore", invalid="ignore"):
            diff = gshift * (exact - local)
            noise = np.abs(gshift) * 1e-15 * (np.abs(exact) + np.abs(local))
        ok = np.isfinite(diff) & (noise <= np.maximum(1e-3 * np.abs(crude), 1e-14))
        return np.where(ok, diff, crude)

    def laplace_minus(self, z) -> np.ndarray:
        """``E[exp(z xi_t); xi_t < 0]`` for ``Re z >= 0``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.st > 0:
            out = self.p0 * gauss_onesided(z, -self.mt, self.st)
        else:
            out = self.p0 * np.where(self.mt < 0, np.exp(z * self.mt), 0.0)
        if self.lat is not None:
            s = self.lat.points
            x = self.mt + s
            zr = float(np.max(z.real))
            edge = _BAND * self.st + 2 * self.h
            deep_cut = -edge - zr * self.st**2
            band = (x <= edge) & (x > deep_cut)
            deep = x <= deep_cut
            if np.any(band):
                m_k, x_k = self.lat.masses[band], x[band]
                if self.st > 0:
                    g = gauss_onesided(z[:, None], -x_k[None, :], self.st)
                else:
                    g = np.where(x_k[None, :] < 0, np.exp(np.outer(z, x_k)), 0.0)
                out = out + g @ m_k
            if np.any(deep):
                m_d, x_d = self.lat.masses[deep], x[deep]
                out = out + np.exp(0.5 * z * z * self.st**2) * (np.exp(np.outer(z, x_d)) @ m_d)
        return out

    # -- cell masses
    def jump_cells(self, lo: float, n: int, width: float, refine: int) -> np.ndarray:
        """Jump-part masses of ``xi_t`` on ``n`` cells of ``width`` starting at ``lo``."""
        if self.lat is None:
            return np.zeros(n)
        h = width / refine
        if not np.isclose(h, self.lat.h):
            raise ValueError("lattice step does not match the requested refinement")
        fine = _lattice_to_fine_cells(self.lat, lo, h, n * refine, self.mt, self.st)
        return fine.reshape(n, refine).sum(axis=1)

    def nojump_cells(self, lo: float, n: int, width: float) -> tuple[np.ndarray, list]:
        """No-jump part: Gaussian cells, or an atom when ``sigma = 0``."""
        if self.st > 0:
            edges = lo + width * np.arange(n + 1)
            return self.p0 * np.diff(ndtr((edges - self.mt) / self.st)), []
        return np.zeros(n), [(self.mt, self.p0)]
