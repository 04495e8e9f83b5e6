from types import SimpleNamespace

import numpy as np
import pytest
from scipy import stats

from levy_expfun import montecarlo as mc
from levy_expfun.bernstein_gamma import BernsteinFunction
from levy_expfun.errors import DegenerateWeights, DomainError, UnsupportedSubordinator
from levy_expfun.grid import GridMeasure
from levy_expfun.levy_model import LevyModel, tail_positive


def joint_z(e1, e2):
    return abs(e1.mean - e2.mean) / np.hypot(e1.stderr, e2.stderr)


# ---------------------------------------------------------------- paths and moments
def test_pure_drift_exact():
    m = LevyModel(-1.0, 0.0)
    assert mc.sample_I(m, 1.0) == pytest.approx(np.e - 1, rel=1e-12)
    est = mc.estimate_moment(m, [1.0, 3.0], 0.5, 1000, seed=1)
    for e, t in zip(est, (1.0, 3.0)):
        assert e.mean == pytest.approx(np.expm1(t) ** -0.5, rel=1e-12)
        assert e.stderr < 1e-12
    up = mc.sample_I(LevyModel(2.0, 0.0), 40.0)
    assert up == pytest.approx(0.5, rel=1e-12)


def test_paths_positive_and_increasing(two_sided):
    I = mc.simulate(two_sided, [0.5, 1.0, 2.0, 4.0], 2000, seed=3)
    assert np.all(I > 0)
    assert np.all(np.diff(I, axis=1) > 0)


def test_symmetric_moment():
    est = mc.estimate_moment(LevyModel(0.0, 1.0), 4.0, 0.5, 20_000, seed=11)
    assert abs(est.mean - 0.5) < 3 * est.stderr


def test_discretization_bias(brownian):
    coarse = mc.estimate_moment(brownian, 1.0, 0.5, 20_000, seed=5, dt=1e-3)
    fine = mc.estimate_moment(brownian, 1.0, 0.5, 20_000, seed=6, dt=1e-4)
    assert joint_z(coarse, fine) < 3


def test_truncation_saturates(heavy):
    full = mc.estimate_moment(heavy, [1.0, 2.0], 0.5, 2000, seed=9)
    trunc = mc.estimate_truncated(heavy, [1.0, 2.0], 0.5, np.inf, 2000, seed=9)
    small = mc.estimate_truncated(heavy, [1.0, 2.0], 0.5, 0.5, 2000, seed=9)
    for f, t, s in zip(full, trunc, small):
        assert f.mean == t.mean and f.stderr == t.stderr
        assert 0 < s.mean < f.mean


def test_thread_reproducibility(two_sided):
    a = mc.estimate_moment(two_sided, [1.0, 5.0], 0.5, 3000, seed=42, threads=1)
    b = mc.estimate_moment(two_sided, [1.0, 5.0], 0.5, 3000, seed=42, threads=4)
    assert [e.mean for e in a] == [e.mean for e in b]
    assert [e.stderr for e in a] == [e.stderr for e in b]
    c = mc.estimate_moment(two_sided, [1.0, 5.0], 0.5, 3000, seed=43, threads=1)
    assert c[0].mean != a[0].mean


def test_small_n_rejected(brownian):
    with pytest.raises(DomainError):
        mc.estimate_moment(brownian, 1.0, 0.5, 999, seed=0)


def test_dt_policy():
    assert mc.dt_policy(100.0) == 1e-2
    assert mc.dt_policy(1.0) == 1e-3


def test_laplace_functional_pure_drift():
    """int_0^T e^{-qt} (e^t - 1)^{-a} dt against quadrature."""
    from scipy import integrate

    m = LevyModel(-1.0, 0.0)
    q, a = 1.5, 0.5
    est = mc.laplace_functional(m, q, a, 1000, seed=0, t_max=30.0)
    ref = integrate.quad(lambda t: np.exp(-q * t) * np.expm1(t) ** -a, 0, 30, limit=200)[0]
    assert est.mean == pytest.approx(ref, rel=1e-4)


# ---------------------------------------------------------------- stratification
def test_strata_add_up(heavy):
    t, a = 5.0, 0.5
    s, b = mc.tail_event_split(heavy, t, a, 0.5, 20_000, seed=2)
    plain = mc.estimate_moment(heavy, t, a, 20_000, seed=3)
    total = mc.MCEstimate(s.mean + b.mean, float(np.hypot(s.stderr, b.stderr)), 0, 0)
    assert joint_z(total, plain) < 3
    # first-arrival law of jumps above eps t
    p_big = -np.expm1(-tail_positive(heavy, 0.5 * t) * t)
    assert b.extra["stratum_prob"] == pytest.approx(p_big, rel=1e-12)
    assert s.extra["stratum_prob"] + b.extra["stratum_prob"] == pytest.approx(1.0)


def test_stratified_truncation(heavy):
    full = mc.stratified_moment(heavy, 5.0, 0.5, 4000, seed=4)
    cut = mc.stratified_moment(heavy, 5.0, 0.5, 4000, seed=4, x=2.0)
    assert 0 < cut.mean < full.mean
    assert cut.extra["p_big"] == full.extra["p_big"]


def test_split_needs_pareto(brownian):
    with pytest.raises(DomainError):
        mc.tail_event_split(brownian, 5.0, 0.5, 0.5, 2000, seed=0)


# ---------------------------------------------------------------- subordinators
def test_uniform_functional():
    n = 100_000
    x = mc.sample_subordinator_functional(BernsteinFunction.linear(1.0, 1.0),
                                          np.random.default_rng(0), n)
    assert stats.kstest(x, "uniform").statistic < 1.36 / np.sqrt(n)
    assert abs(x.mean() - 0.5) < 3 * x.std(ddof=1) / np.sqrt(n)
    # E[I^{z-1}] at z = 2 is Gamma(2)/W(2) = 1/phi(1) = 1/2
    assert x.mean() == pytest.approx(0.5, abs=3 * x.std(ddof=1) / np.sqrt(n))


def test_compound_poisson_functional_moments():
    """E[I] = 1/phi(1), E[I^2] = 2/(phi(1) phi(2))."""
    ncell = 4000
    edges = np.linspace(0, 20, ncell + 1)
    jm = GridMeasure(0.0, 20.0, ncell, np.exp(-2 * edges[:-1]) - np.exp(-2 * edges[1:]))
    phi = BernsteinFunction.from_triplet(0.5, 1.0, jm)
    p1, p2 = phi(np.array([1.0, 2.0])).real
    x = mc.sample_subordinator_functional(phi, np.random.default_rng(1), 100_000)
    se1 = x.std(ddof=1) / np.sqrt(x.size)
    se2 = (x**2).std(ddof=1) / np.sqrt(x.size)
    assert abs(x.mean() - 1 / p1) < 3 * se1
    assert abs((x**2).mean() - 2 / (p1 * p2)) < 3 * se2


def test_unsupported_subordinators():
    rng = np.random.default_rng(0)
    with pytest.raises(UnsupportedSubordinator):
        mc.sample_subordinator_functional(SimpleNamespace(kill=1.0, drift=np.inf, jump_measure=None), rng)
    with pytest.raises(DomainError):
        mc.sample_subordinator_functional(BernsteinFunction.identity(), rng)


def test_size_biased_weights():
    ws = mc.size_biased_resample([1.0, 2.0, 4.0], 0.0)
    assert ws.weights == pytest.approx([1 / 3] * 3)
    ws = mc.size_biased_resample([1.0, 2.0], 1.0)
    assert ws.weights == pytest.approx([1 / 3, 2 / 3])
    with pytest.raises(DegenerateWeights):
        mc.size_biased_resample(np.geomspace(1, 1e6, 200), 20.0)
    with pytest.raises(DomainError):
        mc.size_biased_resample([0.0, 1.0], 1.0)


def test_size_biased_uniform():
    x = np.random.default_rng(5).random(100_000)
    ws = mc.size_biased_resample(x, -0.5)
    # E[X^{1/2}] / E[X^{-1/2}] = (2/3) / 2
    assert abs(ws.mean() - 1 / 3) < 3 * ws.stderr()
    est = mc.size_biased_moment(BernsteinFunction.linear(1.0, 1.0), 0.5, 1.0, 100_000, seed=3)
    assert abs(est.mean - 1 / 3) < 3 * est.stderr


def test_laplace_functional_heavy_matches_transform(heavy_pair):
    """Monte Carlo Laplace transform of E[I^{-1/2}] against M(q, 1/2)/phi_+(q, 0)."""
    from levy_expfun.mellin_limits import laplace_moment

    est = mc.laplace_functional(heavy_pair.model, [0.5, 2.0], 0.5, 20_000, seed=31, t_max=60.0)
    for q, e in zip((0.5, 2.0), est):
        assert abs(e.mean - laplace_moment(heavy_pair, q, 0.5)) < 3 * e.stderr
