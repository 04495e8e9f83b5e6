import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from levy_expfun.levy_model import (ExponentialNegative, ExponentialPositive, JumpComponent,
                                    LevyModel, ParetoPositive)
from levy_expfun.wiener_hopf import WienerHopfPair

settings.register_profile("levy", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("levy")


def heavy_model(alpha=2.5):
    return LevyModel(-2.0, 1.0, (JumpComponent(0.5, ParetoPositive(alpha, 1.0)),))


@pytest.fixture(scope="session")
def brownian():
    return LevyModel(-1.0, 2.0)


@pytest.fixture(scope="session")
def symmetric():
    return LevyModel(0.0, 1.0)


@pytest.fixture(scope="session")
def heavy():
    return heavy_model()


@pytest.fixture(scope="session")
def two_sided():
    """Finite-variation jump diffusion with exponential jumps on both sides."""
    return LevyModel(-0.5, 0.5, (JumpComponent(1.0, ExponentialPositive(3.0)),
                                 JumpComponent(0.7, ExponentialNegative(2.0))))


@pytest.fixture(scope="session")
def brownian_pair(brownian):
    return WienerHopfPair(brownian)


@pytest.fixture(scope="session")
def heavy_pair(heavy):
    return WienerHopfPair(heavy)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance as acc

    if not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k, title in acc.TITLES.items():
        if k in acc.RESULTS:
            ok, msg = acc.RESULTS[k]
            terminalreporter.write_line(f"C{k:<2} {'PASS' if ok else 'FAIL'}  {title}: {msg}")
        else:
            terminalreporter.write_line(f"C{k:<2} NOT RUN  {title}")
