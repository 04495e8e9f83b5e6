import numpy as np
import pytest

from levy_expfun.errors import (AssumptionUnmet, CriterionViolated, GridMismatch,
                                TransienceRequired)
from levy_expfun.levy_model import ExponentialPositive, JumpComponent, LevyModel
from levy_expfun.potentials import (convolve, density_bound_check, integral_criterion, potential,
                                    potential_power)

GRID = (-60.0, 30.0, 3600)


def brownian_cells(q, edges):
    """Exact U_q cell masses for xi_t = -t + sqrt(2) B_t.

    The density is e^{-r x}/s on x > 0 and e^{rho x}/s on x < 0 with
    s = sqrt(1 + 4q), r = (1 + s)/2, rho = (s - 1)/2.
    """
    s = np.sqrt(1 + 4 * q)
    r, rho = (1 + s) / 2, (s - 1) / 2

    def cdf(x):
        x = np.asarray(x, dtype=float)
        left = np.exp(rho * np.minimum(x, 0)) / (s * rho) if rho > 0 else np.minimum(x, 0)
        right = np.where(x > 0, (1 - np.exp(-r * np.maximum(x, 0))) / (s * r), 0.0)
        return left + right

    return np.diff(cdf(edges))


@pytest.fixture(scope="module")
def brownian_potentials(brownian):
    return {q: potential(brownian, q, GRID) for q in (0.5, 1.0, 2.0)}


# ---------------------------------------------------------------- single potentials
def test_total_masses(brownian_potentials, two_sided):
    for q, pm in brownian_potentials.items():
        assert pm.total() == pytest.approx(1 / q, rel=1e-6)
        assert pm.construction == "time_integral" and pm.order == 1
    assert potential(two_sided, 2.0, (-40.0, 40.0, 2048)).total() == pytest.approx(0.5, rel=1e-6)


def test_brownian_cells_exact(brownian_potentials):
    for q, pm in brownian_potentials.items():
        ref = brownian_cells(q, pm.measure.edges)
        assert 0.5 * np.abs(pm.measure.masses - ref).sum() < 1e-5


def test_renewal_limits(brownian):
    pm = potential(brownian, 0.0, (-40.0, 10.0, 500)).measure
    dens = pm.density
    c = pm.centers
    far_left = dens[(c > -25) & (c < -15)]
    assert np.max(np.abs(far_left - 1.0)) < 1e-2
    assert np.all(dens[c > 8] < 1e-3)
    ref = brownian_cells(0.0, pm.edges) / pm.width
    inner = (c > -15) & (c < 8)
    assert np.max(np.abs(dens[inner] - ref[inner])) < 1e-3


def test_monotone_in_q(brownian_potentials):
    u_small, u_mid, u_big = (brownian_potentials[q].measure.masses for q in (0.5, 1.0, 2.0))
    assert np.all(u_big <= u_mid + 1e-15)
    assert np.all(u_mid <= u_small + 1e-15)


# ---------------------------------------------------------------- convolution identity
def test_power_one_is_potential(brownian, brownian_potentials):
    p1 = potential_power(brownian, 1.0, 1, GRID)
    assert np.array_equal(p1.measure.masses, brownian_potentials[1.0].measure.masses)


@pytest.mark.parametrize("q", [0.5, 1.0, 2.0])
def test_convolution_equals_time_integral(brownian, brownian_potentials, q):
    u = brownian_potentials[q]
    conv2 = convolve(u, u)
    conv3 = convolve(conv2, u)
    assert conv2.construction == "grid_convolution" and conv3.order == 3
    for n, conv in ((2, conv2), (3, conv3)):
        direct = potential_power(brownian, q, n, GRID)
        assert conv.measure.tv_distance(direct.measure) < 1e-3
        assert direct.total() == pytest.approx(q ** -n, rel=1e-4)


def test_power_total_q2_n3(two_sided):
    assert potential_power(two_sided, 2.0, 3, (-40.0, 40.0, 2048)).total() == pytest.approx(
        1 / 8, rel=1e-4)


def test_q_derivative(brownian, brownian_potentials):
    q = 1.0
    base = brownian_potentials[q].measure.masses
    d = {h: (potential(brownian, q + h, GRID).measure.masses - base) / h for h in (1e-2, 1e-3)}
    rich = (10 * d[1e-3] - d[1e-2]) / 9
    u2 = potential_power(brownian, q, 2, GRID).measure.masses
    assert np.max(np.abs(rich + u2)) < 1e-3


def test_atoms_convolve_exactly():
    """A pure drift has an atom-free potential; a compound Poisson with drift gives atoms."""
    m = LevyModel(-1.0, 0.0, (JumpComponent(0.5, ExponentialPositive(2.0)),))
    u = potential(m, 1.0, (-30.0, 10.0, 1600))
    assert u.total() == pytest.approx(1.0, rel=1e-6)
    u2 = convolve(u, u)
    assert u2.total() == pytest.approx(1.0, rel=1e-4)


def test_grid_mismatch(brownian):
    a = potential(brownian, 1.0, (-8.0, 8.0, 256))
    b = potential(brownian, 1.0, (-8.0, 8.0, 512))
    with pytest.raises(GridMismatch):
        convolve(a, b)


def test_q_zero_guards(symmetric, heavy):
    with pytest.raises(TransienceRequired):
        potential(symmetric, 0.0, (-8.0, 8.0, 64))
    with pytest.raises(CriterionViolated):
        potential_power(heavy, 0.0, 3, (-8.0, 8.0, 64))


# ---------------------------------------------------------------- criteria
def test_criterion_heavy(heavy):
    r1 = integral_criterion(heavy, 1)
    assert r1.finite and r1.consistent
    r2 = integral_criterion(heavy, 2)
    assert not r2.finite and r2.consistent
    assert np.isinf(r2.levy_value) and np.isinf(r2.occupation_value)


def test_criterion_brownian(brownian):
    for n in (1, 3):
        rep = integral_criterion(brownian, n)
        assert rep.finite and rep.consistent


# ---------------------------------------------------------------- density bounds
def test_density_bound(brownian):
    grid = (-60.0, 30.0, 2**12)
    rep = density_bound_check(brownian, 0.5, 2, grid)
    assert rep.ok and rep.max_slack < 0
    rep1 = density_bound_check(brownian, 0.5, 1, grid)
    assert rep1.ok
    assert rep1.C == pytest.approx(1 / np.sqrt(3), rel=1e-2)


def test_density_bound_needs_diffusion():
    with pytest.raises(AssumptionUnmet):
        density_bound_check(LevyModel(-1.0, 0.0), 0.5, 2, (-8.0, 8.0, 64))
