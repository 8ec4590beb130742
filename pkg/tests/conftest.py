import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nnls_ist import DiscreteSpectrum, SpectralData

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []

SOLITON_T0 = 8 * np.pi / 9


@pytest.fixture(scope="session")
def one_sol():
    """One-soliton data with zeros 0.5i, -0.25i and constants i, e^{i pi/6}."""
    return DiscreteSpectrum(sigma=1, rho1=[0.5], rho2=[-0.25], gamma1=[1j],
                            gamma2=[np.exp(1j * np.pi / 6)])


@pytest.fixture(scope="session")
def two_imag():
    return DiscreteSpectrum(sigma=1, rho1=[0.5, 0.9], rho2=[-0.25, -0.7],
                            gamma1=[1j, np.exp(0.3j)], gamma2=[np.exp(1j * np.pi / 6), -1])


@pytest.fixture(scope="session")
def pair_plus():
    return DiscreteSpectrum(sigma=1, zeta1=[-0.5 + 0.7j], zeta2=[-0.3 - 0.4j],
                            eta1=[0.5], eta2=[1j])


@pytest.fixture(scope="session")
def pair_minus():
    return DiscreteSpectrum(sigma=-1, zeta1=[-0.5 + 0.7j], zeta2=[-0.3 - 0.4j],
                            eta1=[0.5], eta2=[1j])


@pytest.fixture(scope="session")
def reflectionless():
    return SpectralData.reflectionless()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
