"""Wiener-Hopf factors and Mellin transform of xi_t = -t + sqrt(2) B_t against closed forms."""
import numpy as np
from scipy.special import gamma

from levy_expfun.bernstein_gamma import gauge_fixed
from levy_expfun.levy_model import LevyModel
from levy_expfun.mellin_limits import laplace_moment, mellin
from levy_expfun.wiener_hopf import MINUS, PLUS, WienerHopfPair

pair = WienerHopfPair(LevyModel(-1.0, 2.0))
q = 0.5
s = np.sqrt(1 + 4 * q)
z = np.array([0.0, 0.5, 1.0 + 2.0j])
plus = pair.phi(PLUS, q, z)
minus = pair.phi(MINUS, q, z)
# up to the gauge: phi_+ ~ z + (1 + s)/2, phi_- ~ z + (s - 1)/2
print("phi_+ ratio to z + r_+:", np.round(plus / (z + (1 + s) / 2), 8))
print("phi_- ratio to z + rho:", np.round(minus / (z + (s - 1) / 2), 8))

fixed = gauge_fixed(pair, 0.0, 2.0)
zz = np.array([0.3, 0.5, 0.7 + 2j])
print("M(0, z):        ", np.round(mellin(fixed, 0.0, zz), 8))
print("closed form:    ", np.round(gamma(zz) * gamma(1 - zz) / gamma(zz + 1), 8))
for qq in (0.5, 1.0, 2.0):
    print(f"int e^(-{qq}t) E[I(t)^(-1/2)] dt = {laplace_moment(pair, qq, 0.5):.6f}")
