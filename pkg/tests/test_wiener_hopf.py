import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levy_expfun.errors import DivergentIntegral, DomainError
from levy_expfun.levy_model import JumpComponent, LevyModel, PointMass, psi
from levy_expfun.wiener_hopf import (MINUS, PLUS, WienerHopfPair, h_of_q, ln_phi_plus_deriv,
                                     log_phi_time, phi)


def roots(q):
    """Factors of z^2 - z - q = (z - r_plus)(z + r_minus) for the Brownian model."""
    s = np.sqrt(1 + 4 * q)
    return (1 + s) / 2, (s - 1) / 2


# ---------------------------------------------------------------- Brownian closed forms
@given(st.floats(0.05, 5.0), st.floats(-20, 20), st.floats(0, 10))
def test_brownian_factor_shapes(q, y, x):
    pair = WienerHopfPair(LevyModel(-1.0, 2.0))
    rp, rm = roots(q)
    z = np.array([x + 1j * y])
    ratio_p = pair.phi(PLUS, q, z) / pair.phi(PLUS, q, 0.0)
    ratio_m = pair.phi(MINUS, q, z) / pair.phi(MINUS, q, 0.0)
    assert ratio_p[0] == pytest.approx((z[0] + rp) / rp, rel=1e-10)
    assert ratio_m[0] == pytest.approx((z[0] + rm) / rm, rel=1e-10)


def test_brownian_reference_values(brownian):
    q = 0.5
    pp = phi(brownian, PLUS, q, np.array([0.0, 2j]))
    pm = phi(brownian, MINUS, q, np.array([0.0, 2j]))
    assert (pp[0] * pm[0]).real == pytest.approx(0.5, rel=1e-10)
    prod = -phi(brownian, PLUS, q, np.array([-2j]))[0] * pm[1]
    assert prod == pytest.approx(-4 - 2j - 0.5, rel=1e-10)
    z = np.array([0.0, 1.0, 3.0 + 2j])
    p0 = phi(brownian, PLUS, 0.0, z)
    assert p0 / p0[0] == pytest.approx(z + 1, rel=1e-4)


def test_time_route_error_estimate_small(brownian):
    val, err = log_phi_time(brownian, PLUS, 0.7, np.array([1.0, 5j]))
    rp, _ = roots(0.7)
    ref, _ = log_phi_time(brownian, PLUS, 0.7, np.array([0.0]))
    assert np.exp(val - ref) == pytest.approx(np.array([1.0, 5j]) / rp + 1, rel=1e-9)
    assert np.all(err < 1e-8)


# ---------------------------------------------------------------- identities on general models
@pytest.mark.parametrize("q", [0.5, 2.0])
def test_wiener_hopf_identity_two_sided(two_sided, q):
    # the default cell leaves ~1e-4 here; the error is second order in the cell width
    pair = WienerHopfPair(two_sided, cell=1 / 64)
    z = 1j * np.linspace(-15, 15, 11)
    lhs = psi(two_sided, z) - q
    rhs = -pair.phi(PLUS, q, -z) * pair.phi(MINUS, q, z)
    assert np.max(np.abs(lhs - rhs) / np.abs(lhs)) < 1e-4
    norm = pair.phi(PLUS, q, 0.0) * pair.phi(MINUS, q, 0.0)
    assert norm.real == pytest.approx(q, rel=1e-4)


def test_routes_agree_heavy(heavy, heavy_pair):
    z = np.array([0.0, 2.0, 1 + 10j])
    for sign in (PLUS, MINUS):
        harm = heavy_pair.log_phi(sign, 0.5, z)
        time, _ = log_phi_time(heavy, sign, 0.5, z)
        assert np.max(np.abs(harm - time)) < 1e-4


def test_gauge(brownian_pair):
    g = brownian_pair.with_gauge(2.0)
    q, z = 0.5, np.array([1j, -4j])
    p1 = brownian_pair.phi(PLUS, q, -z) * brownian_pair.phi(MINUS, q, z)
    p2 = g.phi(PLUS, q, -z) * g.phi(MINUS, q, z)
    assert p2 == pytest.approx(p1, rel=1e-12)
    assert g.phi(PLUS, q, 1.0) == pytest.approx(2 * brownian_pair.phi(PLUS, q, 1.0), rel=1e-12)


def test_bernstein_shape_heavy(heavy_pair):
    x = np.linspace(0, 6, 61)
    for sign in (PLUS, MINUS):
        v = heavy_pair.phi(sign, 0.5, x).real
        assert np.all(v > 0)
        assert np.all(np.diff(v) > 0)
        # concave up to the factorization accuracy
        assert np.all(np.diff(v, 2) <= 1e-4 * v.max() * 0.1**2)
    # no negative jumps: the descending factor is affine
    v = heavy_pair.phi(MINUS, 0.5, x).real
    fit = np.polyval(np.polyfit(x, v, 1), x)
    assert np.max(np.abs(v - fit) / v) < 1e-4


def test_phi_plus_zero_increasing_in_q(two_sided):
    qs = [0.1, 0.3, 1.0, 3.0]
    pair = WienerHopfPair(two_sided)
    vals = [pair.phi(PLUS, q, 0.0).real for q in qs]
    assert np.all(np.diff(vals) > 0)


def test_negative_real_part_rejected(brownian_pair):
    with pytest.raises(DomainError):
        brownian_pair.log_phi(PLUS, 0.5, -0.5)


# ---------------------------------------------------------------- h(q)
def test_h_of_q():
    assert h_of_q(LevyModel(-1.0, 2.0), 3.0) == 1.0
    cpp = LevyModel(0.0, 0.0, (JumpComponent(1.0, PointMass(2.0)),))
    assert cpp.is_compound_poisson
    assert h_of_q(cpp, 3.0) == pytest.approx(0.5, rel=1e-8)
    assert h_of_q(cpp, 1.0) == 1.0


@given(st.floats(0.0, 5.0))
def test_h_range(q):
    cpp = LevyModel(0.0, 0.0, (JumpComponent(0.7, PointMass(-1.5)),))
    h = h_of_q(cpp, q)
    # Frullani: exp(-int (e^{-t} - e^{-qt}) e^{-lam t}/t dt) = (1 + lam)/(q + lam)
    assert h == pytest.approx((1 + 0.7) / (q + 0.7), rel=1e-8)
    assert (h <= 1 + 1e-12) if q >= 1 else (h >= 1 - 1e-12)


# ---------------------------------------------------------------- derivatives in q
def test_ln_phi_plus_deriv_brownian(brownian):
    d1 = ln_phi_plus_deriv(brownian, 1.0, 1)
    rp, _ = roots(1.0)
    assert d1 == pytest.approx(1 / np.sqrt(5) / rp, rel=1e-6)
    h = 1e-4
    up, _ = log_phi_time(brownian, PLUS, 1 + h, np.array([0.0]))
    dn, _ = log_phi_time(brownian, PLUS, 1 - h, np.array([0.0]))
    fd = (up[0] - dn[0]).real / (2 * h)
    assert d1 == pytest.approx(fd, rel=1e-5)


def test_ln_phi_plus_deriv_signs(two_sided):
    assert ln_phi_plus_deriv(two_sided, 0.5, 1) > 0
    assert ln_phi_plus_deriv(two_sided, 0.5, 2) < 0


def test_ln_phi_plus_deriv_divergence(heavy):
    assert np.isfinite(ln_phi_plus_deriv(heavy, 0.0, 1))
    with pytest.raises(DivergentIntegral):
        ln_phi_plus_deriv(heavy, 0.0, 2)
