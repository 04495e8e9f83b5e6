"""Limit measure of t^alpha E[I(t)^{-a}; I(t) in dx] for a Pareto jump model, next to Monte Carlo.

The Monte Carlo ratios approach 1 slowly; at t = 40 they are still well above it.
"""
import sys

import numpy as np

from levy_expfun import montecarlo as mc
from levy_expfun.levy_model import JumpComponent, LevyModel, ParetoPositive
from levy_expfun.mellin_limits import limit_cdf, limit_constant
from levy_expfun.wiener_hopf import WienerHopfPair

N = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
alpha, a, rate = 2.5, 0.5, 0.5
model = LevyModel(-2.0, 1.0, (JumpComponent(rate, ParetoPositive(alpha, 1.0)),))
pair = WienerHopfPair(model)

total = limit_constant(pair, a, alpha)
xs = np.array([0.1, 1.0, 10.0, 100.0])
print(f"limit constant {total:.6f}")
for x, F in zip(xs, limit_cdf(pair, a, alpha, xs)):
    print(f"  nu((0, {x:g}]) / total = {F / total:.4f}")

for t in (10.0, 20.0, 40.0):
    e = mc.stratified_moment(model, t, a, N, seed=1)
    r = t**alpha * e.mean / rate / total
    print(f"t={t:4.0f}  ratio {r:6.3f} +- {t**alpha * e.stderr / rate / total:.3f}")
