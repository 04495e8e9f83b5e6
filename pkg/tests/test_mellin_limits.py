import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma

from levy_expfun.bernstein_gamma import gauge_fixed, log_bivariate_W
from levy_expfun.errors import DomainError
from levy_expfun.levy_model import LevyModel
from levy_expfun.mellin_limits import (CONTOUR_STEP, _limit_scale, contour_integral, decay_profile,
                                       factor_terms, laplace_moment, limit_cdf, limit_constant,
                                       limit_law, log_mellin, mellin, truncated_laplace)
from levy_expfun.wiener_hopf import MINUS, PLUS, WienerHopfPair

HEAVY_A = 0.5
HEAVY_ALPHA = 2.5
_BROWNIAN = WienerHopfPair(LevyModel(-1.0, 2.0))


@pytest.fixture(scope="module")
def fixed_brownian(brownian_pair):
    """Gauge with phi_+(0, z) = z + 1 and phi_-(0, z) = z."""
    return gauge_fixed(brownian_pair, 0.0, 2.0)


# ---------------------------------------------------------------- Mellin transform
def test_brownian_closed_form(fixed_brownian):
    assert mellin(fixed_brownian, 0.0, 0.5) == pytest.approx(2 * np.sqrt(np.pi), rel=1e-6)
    z = np.array([0.3, 0.7 + 2j])
    ref = gamma(z) * gamma(1 - z) / gamma(z + 1)
    assert mellin(fixed_brownian, 0.0, z) == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("q", [0.0, 0.5, 2.0])
def test_normalization(brownian_pair, q):
    eps = 1e-6
    # W_-(eps) = 1/phi_-(eps); at q = 0 phi_-(0, 0) vanishes, so pair it with phi_-(eps)
    phim = brownian_pair.phi(MINUS, q, eps if q == 0 else 0.0)
    assert (phim * mellin(brownian_pair, q, 1 - eps)).real == pytest.approx(1.0, abs=1e-4)


@given(st.floats(0.05, 0.95), st.floats(-30, 30))
def test_conjugate_symmetry(x, y):
    z = complex(x, y)
    assert mellin(_BROWNIAN, 0.5, z.conjugate()) == pytest.approx(
        np.conj(mellin(_BROWNIAN, 0.5, z)), rel=1e-12)


def test_strip(brownian_pair):
    with pytest.raises(DomainError):
        log_mellin(brownian_pair, 0.5, 1.2)
    with pytest.raises(DomainError):
        laplace_moment(brownian_pair, 0.0, 0.5)


def test_laplace_moment_gauge_and_sign(brownian_pair):
    v = laplace_moment(brownian_pair, 1.0, 0.5)
    assert v > 0
    g = brownian_pair.with_gauge(2.0)
    assert laplace_moment(g, 1.0, 0.5) == pytest.approx(v, rel=1e-8)


def test_laplace_moment_completely_monotone(brownian_pair):
    h = 0.25
    vals = np.array([laplace_moment(brownian_pair, 0.5 + k * h, 0.5) for k in range(4)])
    for k in range(1, 4):
        d = np.diff(vals, k)
        assert np.all((-1) ** k * d > -1e-6)


# ---------------------------------------------------------------- truncated transform
def test_truncated_laplace(brownian_pair):
    q, a = 1.0, 0.5
    xs = np.array([0.5, 1.0, 2.0, 4.0])
    v2 = truncated_laplace(brownian_pair, q, a, xs, b=-0.2)
    v4 = truncated_laplace(brownian_pair, q, a, xs, b=-0.4)
    assert np.max(np.abs(v2 - v4)) < 1e-6
    assert np.all(np.diff(v2) >= 0)
    big = truncated_laplace(brownian_pair, q, a, 1e8)
    assert big == pytest.approx(laplace_moment(brownian_pair, q, a), abs=1e-3)
    g = brownian_pair.with_gauge(2.0)
    assert truncated_laplace(g, q, a, 1.0) == pytest.approx(v2[1], rel=1e-8)


# ---------------------------------------------------------------- limit law
@pytest.fixture(scope="module")
def heavy_cdf(heavy_pair):
    xs = np.array([0.5, 1.0, 2.0, 5.0])
    return xs, limit_cdf(heavy_pair, HEAVY_A, HEAVY_ALPHA, xs)


def test_limit_constant_regression(heavy_pair):
    assert limit_constant(heavy_pair, HEAVY_A, HEAVY_ALPHA) == pytest.approx(
        2.2608237836837524, rel=1e-6)


def test_limit_cdf_self_oracle(heavy_pair, heavy_cdf):
    """Same contour at a quarter of the step."""
    xs, vals = heavy_cdf
    fine = contour_integral(heavy_pair, 0.0, HEAVY_A, xs, -0.25, step=CONTOUR_STEP / 4)
    ref = -fine.values / _limit_scale(heavy_pair, HEAVY_ALPHA)
    assert np.max(np.abs(vals - ref) / ref) < 1e-6


def test_limit_cdf_shape(heavy_pair, heavy_cdf):
    xs, vals = heavy_cdf
    total = limit_constant(heavy_pair, HEAVY_A, HEAVY_ALPHA)
    assert np.all(np.diff(vals) > 0)
    assert np.all((vals > 0) & (vals < total))
    for b in (-0.1, -0.4):
        other = limit_cdf(heavy_pair, HEAVY_A, HEAVY_ALPHA, xs, b=b)
        assert np.max(np.abs(other - vals)) < 1e-6
    far = limit_cdf(heavy_pair, HEAVY_A, HEAVY_ALPHA, 1e10)
    assert far == pytest.approx(total, rel=1e-3)


def test_limit_gauge_invariance(heavy_pair, heavy_cdf):
    g = heavy_pair.with_gauge(2.0)
    xs, vals = heavy_cdf
    assert limit_constant(g, HEAVY_A, HEAVY_ALPHA) == pytest.approx(
        limit_constant(heavy_pair, HEAVY_A, HEAVY_ALPHA), rel=1e-8)
    assert limit_cdf(g, HEAVY_A, HEAVY_ALPHA, xs[1]) == pytest.approx(vals[1], rel=1e-8)


def test_limit_law_normalized(heavy_pair):
    law = limit_law(heavy_pair, HEAVY_A, HEAVY_ALPHA, ell_const=0.5)
    f = law.normalized_cdf(np.array([1e-3, 1.0, 1e3]))
    assert np.all((f >= 0) & (f <= 1)) and np.all(np.diff(f) > 0)


# ---------------------------------------------------------------- factorization pieces
def test_first_factor_uniform(fixed_brownian):
    a = 0.5
    z = np.array([0.3, -0.2])
    first, second = factor_terms(fixed_brownian, a, z)
    # I_{phi_+} ~ Uniform(0, 1): E[I^{s-1}] = 1/s, ratio (1 - a)/(1 + z - a)
    assert first == pytest.approx((1 - a) / (1 + z - a), rel=1e-6)
    # phi_- = z: W_- = Gamma, second factor Gamma(a - z)/Gamma(a)
    assert second == pytest.approx(gamma(a - z) / gamma(a), rel=1e-6)
    # at z = 1/2 the first factor is Gamma(1) W_+(1/2) / (W_+(1) Gamma(1/2)) = 1/2
    lw, _ = log_bivariate_W(fixed_brownian, PLUS, 0.0, np.array([0.5, 1.0]))
    assert np.exp(lw[0] - lw[1]) / gamma(0.5) == pytest.approx(0.5, rel=1e-6)


def test_factors_at_zero(brownian_pair):
    first, second = factor_terms(brownian_pair, 0.5, np.array([1e-8]))
    assert first[0] == pytest.approx(1.0, abs=1e-6)
    assert second[0] == pytest.approx(1.0, abs=1e-6)


def test_decay_profile(brownian_pair):
    prof = decay_profile(brownian_pair, 0.5, 0.5, -0.25, 50.0)
    assert prof.decay_exponent > 3
    assert prof.conj_max < 1e-10
    assert np.isfinite(prof.ratio_max) and prof.ratio_max < 10
